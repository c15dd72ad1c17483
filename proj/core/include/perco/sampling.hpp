#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "perco/geometry.hpp"

namespace perco {

// xoshiro256** seeded from (master_seed, stream_id) through SplitMix64.
// All conversions to reals are done here so draws are identical across
// standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

  // Independent stream keyed by (master_seed, stream_id, k); does not
  // depend on how many draws this stream has made.
  RngStream substream(std::uint64_t k) const;

  std::uint64_t next_u64();
  double uniform();  // (0, 1]
  double uniform(double lo, double hi);
  double exponential();  // rate 1
  double normal();
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t x);
// Uniform on (0,1] determined by a key; used for per-pair shared uniforms.
double hashed_uniform(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

class SamplingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WeightLaw {
  double beta = 2.0;
};

double pareto_from_uniform(double beta, double u);
double sample_pareto(double beta, RngStream& rng);
// Density and CDF of the product of two independent Pareto(beta) weights.
double product_weight_density(double w, double beta);
double product_weight_cdf(double w, double beta);

struct HalfLengthLaw {
  enum class Kind { fixed, uniform, power, exponential };
  Kind kind = Kind::fixed;
  double a = 1.0;  // fixed: value; uniform: low; power: exponent c; exponential: mean
  double b = 1.0;  // uniform: high; power: lower cutoff l0

  static HalfLengthLaw fixed(double l);
  static HalfLengthLaw uniform(double lo, double hi);
  static HalfLengthLaw power(double c, double l0);  // (c-1) l0^{c-1} l^{-c} on [l0, inf)
  static HalfLengthLaw exponential(double mean);

  void validate() const;
  double sample(RngStream& rng) const;
  // Draw from l h(l) / E[l].
  double sample_size_biased(RngStream& rng) const;
  double mean() const;
  double quantile(double p) const;
  double lower_support() const;
  double pdf(double l) const;
  std::string describe() const;
};

struct OrientationLaw {
  enum class Kind { fixed, uniform, two_point, von_mises };
  Kind kind = Kind::uniform;
  double theta1 = 0.0;   // fixed angle, first atom, or von Mises mean axis
  double theta2 = 0.0;   // second atom
  double p = 0.5;        // weight of the first atom
  double kappa = 0.0;    // von Mises concentration

  static OrientationLaw fixed(double theta);
  static OrientationLaw uniform();
  static OrientationLaw two_point(double t1, double t2, double p);
  static OrientationLaw von_mises(double mean_axis, double kappa);

  void validate() const;
  bool degenerate() const;
  double sample(RngStream& rng) const;  // in [0, pi)
  double mean_abs_sin() const;
  double mean_abs_cos() const;
  std::string describe() const;
};

struct StickLaw {
  HalfLengthLaw half_length;
  OrientationLaw orientation;
};

struct Stick {
  Point center;
  double half_length = 0.0;
  double angle = 0.0;

  Segment segment() const;
};

std::vector<Point> sample_ppp(const Box& window, double lambda, RngStream& rng);
Segment stick_segment(Point center, double half_length, double angle);
Stick sample_stick_mark(Point center, const StickLaw& law, RngStream& rng);
Segment sample_stick(Point center, const StickLaw& law, RngStream& rng);

}  // namespace perco
