#pragma once

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "perco/connectivity.hpp"
#include "perco/geometry.hpp"
#include "perco/models.hpp"

namespace perco {

// Thrown when an event region is not inside the sampled area of a realization.
class RegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction { left_right, top_down };
const char* to_string(Direction d);

struct CrossingSpec {
  Box rect;
  Direction direction = Direction::left_right;
};

// The boundary of a box, as an arm target.
struct BoxBoundary {
  Box box;
};

struct ArmSpec {
  std::variant<Box, Segment> source;
  std::variant<BoxBoundary, Box, Segment> target;
  Box confinement;

  void validate() const;
};

struct EventOutcome {
  bool occurred = false;
  std::vector<std::uint32_t> witness;  // piece ids
  std::vector<Segment> witness_segments;
};

// Throws RegionError unless region lies inside r.sampled_area().
void require_inside(const Realization& r, const Box& region);

EventOutcome detect_crossing(const Realization& r, const CrossingSpec& spec,
                             Linkage linkage = Linkage::enhanced);
EventOutcome detect_circuit(const Realization& r, const Annulus& ann,
                            Linkage linkage = Linkage::enhanced);
EventOutcome detect_arm(const Realization& r, const ArmSpec& spec,
                        Linkage linkage = Linkage::enhanced);

double longest_edge_in_box(const Realization& r, const Box& b);
bool long_edge_in_annulus(const Realization& r, const Annulus& ann, double threshold);

// Rectangles making up the composite crossing event at scale s and aspect rho.
struct CompositeLayout {
  std::vector<Box> lr_rects;
  std::vector<Box> td_squares;
};
CompositeLayout composite_layout(double s, double rho);
EventOutcome detect_composite_f(const Realization& r, double s, double rho,
                                Linkage linkage = Linkage::enhanced);

// Two LR crossings of the top and bottom frame rectangles and two TD
// crossings of the left and right ones.
bool frame_crossings(const Realization& r, const Annulus& ann, Linkage linkage = Linkage::enhanced);

// Winding-number circuit test on a prepared arrangement over an annulus.
EventOutcome find_circuit(const ClippedArrangement& arr, const Annulus& ann);

}  // namespace perco
