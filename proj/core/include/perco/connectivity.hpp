#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "perco/geometry.hpp"
#include "perco/models.hpp"

namespace perco {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0);

  std::size_t size() const { return parent_.size(); }
  std::uint32_t find(std::uint32_t x);
  // Returns true when two classes were merged.
  bool unite(std::uint32_t a, std::uint32_t b);
  bool same(std::uint32_t a, std::uint32_t b) { return find(a) == find(b); }
  // Smallest element of the class of x.
  std::uint32_t representative(std::uint32_t x) { return min_[find(x)]; }
  std::size_t class_count() const { return classes_; }
  std::vector<std::uint32_t> labels();

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<std::uint32_t> min_;
  std::size_t classes_;
};

using Region = std::variant<Box, Annulus>;

Box region_bounds(const Region& region);

enum class Linkage {
  enhanced,  // any shared point links two pieces
  direct     // pieces link only at shared graph vertices
};

enum Contact : std::uint16_t {
  kContactLeft = 1 << 0,
  kContactRight = 1 << 1,
  kContactBottom = 1 << 2,
  kContactTop = 1 << 3,
  kContactInnerLeft = 1 << 4,
  kContactInnerRight = 1 << 5,
  kContactInnerBottom = 1 << 6,
  kContactInnerTop = 1 << 7,
};
inline constexpr std::uint16_t kContactOuterAny = 0x0F;
inline constexpr std::uint16_t kContactInnerAny = 0xF0;
std::uint16_t side_contact(Side side);

struct Piece {
  std::uint32_t source = 0;
  Segment segment;
  bool keeps_a = false;  // piece contains the source segment's first endpoint
  bool keeps_b = false;
  std::uint16_t contacts = 0;
};

struct Intersection {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  Point at;
};

struct ComponentSummary {
  std::uint32_t id = 0;
  std::size_t piece_count = 0;
  std::vector<std::uint32_t> vertices;
  Aabb bbox{0, 0, 0, 0};
  std::uint16_t contacts = 0;
};

struct ClippedArrangement {
  Region region;
  Linkage linkage = Linkage::enhanced;
  std::vector<Piece> pieces;
  std::vector<Intersection> intersections;
  std::vector<std::uint32_t> component;  // smallest piece id of each piece's class

  std::vector<ComponentSummary> summaries(const Realization& r) const;
  // Adjacency lists over piece ids; entries index into intersections.
  std::vector<std::vector<std::uint32_t>> incidence() const;
};

// All pairs (i < j) of closed segments sharing a point, sorted.
std::vector<std::pair<std::uint32_t, std::uint32_t>> segment_intersections_sweep(
    const std::vector<Segment>& segments);

// Class label per vertex (smallest vertex id of the class).
std::vector<std::uint32_t> enhanced_components(const Realization& r);
std::vector<std::uint32_t> direct_components(const Realization& r);

ClippedArrangement clip_and_connect(const Realization& r, const Region& region,
                                    Linkage linkage = Linkage::enhanced);

}  // namespace perco
