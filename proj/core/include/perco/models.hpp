#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perco/geometry.hpp"
#include "perco/sampling.hpp"

namespace perco {

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// g(r) for the homogeneous kinds; 1 - exp(-eta w1 w2 / r^alpha) for the
// inhomogeneous kind. exponential(mu) is exp(-mu r).
struct ConnectionFunction {
  enum class Kind { indicator, power_min, exponential, inhomogeneous };
  Kind kind = Kind::indicator;
  double r0 = 1.0;
  double c = 5.0;
  double mu = 1.0;
  double eta = 1.0;
  double alpha = 5.0;

  static ConnectionFunction indicator(double r0);
  static ConnectionFunction power_min(double c);
  static ConnectionFunction exponential(double mu);
  static ConnectionFunction inhomogeneous(double eta, double alpha);

  void validate() const;
  bool weighted() const { return kind == Kind::inhomogeneous; }
  double operator()(double dist, double w1 = 1.0, double w2 = 1.0) const;
  // sup of the probability over distances >= dmin and weights <= w1max, w2max
  double bound(double dmin, double w1max, double w2max) const;
  std::optional<double> support_radius() const;
  std::string describe() const;
};

double connection_probability(const ConnectionFunction& cf, double dist, double w1 = 1.0,
                              double w2 = 1.0);

enum class ModelKind { rcm, ercm, iercm, sticks };
const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  Segment segment;
};

struct Realization {
  std::vector<Point> points;
  std::vector<double> weights;  // empty unless weighted
  std::vector<Stick> sticks;    // one per point for stick realizations
  std::vector<Edge> edges;
  bool stick_model = false;
  Box window{-1.0, -1.0, 1.0, 1.0};
  double padding = 0.0;
  std::optional<double> truncation_radius;

  Box sampled_area() const { return window.expanded(padding); }
  std::size_t segment_count() const { return stick_model ? sticks.size() : edges.size(); }
  Segment segment(std::size_t k) const {
    return stick_model ? sticks[k].segment() : edges[k].segment;
  }
  // Length statistic of segment k: edge length, or stick half-length.
  double segment_size(std::size_t k) const {
    return stick_model ? sticks[k].half_length : edges[k].segment.length();
  }
  std::vector<Segment> segments() const;
  // Vertices joined by segment k (a stick joins only itself).
  std::pair<std::uint32_t, std::uint32_t> endpoints(std::size_t k) const;

  // Induced sub-realization on the points with keep[i] != 0.
  Realization restricted(const std::vector<char>& keep) const;
};

enum class PairSampler {
  tree,  // dual k-d tree with geometric skipping
  scan   // per-pair hashed uniforms, grid or O(n^2) scan
};

struct RcmOptions {
  PairSampler sampler = PairSampler::tree;
  // Only edges at least this long and meeting must_hit are kept.
  double min_length = 0.0;
  std::optional<Box> must_hit;
  // Seed of the per-pair uniforms for the scan sampler; drawn from rng when unset.
  std::optional<std::uint64_t> pair_seed;
};

Realization build_rcm(const std::vector<Point>& points, const ConnectionFunction& cf,
                      const std::vector<double>* weights, std::optional<double> trunc,
                      RngStream& rng, const RcmOptions& options = {});

Realization build_sticks(const std::vector<Point>& points, const StickLaw& law, RngStream& rng);

// Expected number of sticks of intensity lambda meeting the closed box k.
double expected_sticks_hitting(const Box& k, double lambda, const StickLaw& law);
// Exact sample of the sticks of a Poisson stick process that meet k.
Realization sample_sticks_hitting(const Box& k, double lambda, const StickLaw& law, RngStream& rng);

}  // namespace perco
