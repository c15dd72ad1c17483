#include "perco/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace perco {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

constexpr double kPi = std::numbers::pi;

double wrap_axis(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0) t += kPi;
  if (t >= kPi) t = 0.0;
  return t;
}

// Best-Fisher sampler on the circle.
double von_mises_circle(double mu, double kappa, RngStream& rng) {
  if (kappa < 1e-8) return rng.uniform(0.0, 2 * kPi);
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  for (;;) {
    const double z = std::cos(kPi * rng.uniform());
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = rng.uniform();
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double sign = rng.uniform() > 0.5 ? 1.0 : -1.0;
      return mu + sign * std::acos(std::clamp(f, -1.0, 1.0));
    }
  }
}

double von_mises_axis_density(double theta, double mean_axis, double kappa) {
  // Axial law: 2*theta ~ vM(2*mean_axis, kappa), density on [0, pi).
  return std::exp(kappa * (std::cos(2.0 * (theta - mean_axis)) - 1.0));
}

double von_mises_axis_mean(double mean_axis, double kappa, double (*fn)(double)) {
  const int n = 4096;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double th = (i + 0.5) * kPi / n;
    const double d = von_mises_axis_density(th, mean_axis, kappa);
    num += d * fn(th);
    den += d;
  }
  return num / den;
}

double abs_sin(double t) { return std::abs(std::sin(t)); }
double abs_cos(double t) { return std::abs(std::cos(t)); }

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double hashed_uniform(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ i) + j);
  return (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_(master_seed), stream_(stream_id) {
  std::uint64_t x = splitmix64(master_seed) ^ splitmix64(stream_id ^ 0xD1B54A32D192ED03ULL);
  for (auto& s : s_) {
    x = splitmix64(x);
    s = x;
  }
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

RngStream RngStream::substream(std::uint64_t k) const {
  return RngStream(master_, splitmix64(stream_ * 0x9E3779B97F4A7C15ULL + k + 1));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::exponential() { return -std::log(uniform()); }

double RngStream::normal() {
  for (;;) {
    const double u = 2.0 * uniform() - 1.0;
    const double v = 2.0 * uniform() - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

std::uint64_t RngStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw SamplingError("poisson mean must be finite and >= 0");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    double p = std::exp(-mean);
    double cdf = p;
    const double u = uniform();
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993).
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

double pareto_from_uniform(double beta, double u) {
  if (!(beta > 0.0)) throw SamplingError("pareto beta must be > 0");
  return std::pow(u, -1.0 / beta);
}

double sample_pareto(double beta, RngStream& rng) { return pareto_from_uniform(beta, rng.uniform()); }

double product_weight_density(double w, double beta) {
  if (w <= 1.0) return 0.0;
  return beta * beta * std::pow(w, -beta - 1.0) * std::log(w);
}

double product_weight_cdf(double w, double beta) {
  if (w <= 1.0) return 0.0;
  return 1.0 - std::pow(w, -beta) * (1.0 + beta * std::log(w));
}

HalfLengthLaw HalfLengthLaw::fixed(double l) { return {Kind::fixed, l, l}; }
HalfLengthLaw HalfLengthLaw::uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
HalfLengthLaw HalfLengthLaw::power(double c, double l0) { return {Kind::power, c, l0}; }
HalfLengthLaw HalfLengthLaw::exponential(double mean) { return {Kind::exponential, mean, 0.0}; }

void HalfLengthLaw::validate() const {
  switch (kind) {
    case Kind::fixed:
      if (!(a >= 0.0) || !std::isfinite(a)) throw SamplingError("fixed half-length must be finite and >= 0");
      break;
    case Kind::uniform:
      if (!(a >= 0.0 && b > a) || !std::isfinite(b)) throw SamplingError("uniform half-length needs 0 <= low < high");
      break;
    case Kind::power:
      if (!(a > 1.0)) throw SamplingError("power-law half-length needs exponent c > 1");
      if (!(b > 0.0)) throw SamplingError("power-law half-length needs cutoff l0 > 0");
      break;
    case Kind::exponential:
      if (!(a > 0.0)) throw SamplingError("exponential half-length needs mean > 0");
      break;
  }
}

double HalfLengthLaw::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::fixed: return a;
    case Kind::uniform: return a + (b - a) * rng.uniform();
    case Kind::power: return b * std::pow(rng.uniform(), -1.0 / (a - 1.0));
    case Kind::exponential: return a * rng.exponential();
  }
  return a;
}

double HalfLengthLaw::sample_size_biased(RngStream& rng) const {
  switch (kind) {
    case Kind::fixed: return a;
    case Kind::uniform: return std::sqrt(a * a + rng.uniform() * (b * b - a * a));
    case Kind::power:
      if (!(a > 2.0)) throw SamplingError("size-biased power law needs c > 2");
      return b * std::pow(rng.uniform(), -1.0 / (a - 2.0));
    case Kind::exponential: return a * (rng.exponential() + rng.exponential());
  }
  return a;
}

double HalfLengthLaw::mean() const {
  switch (kind) {
    case Kind::fixed: return a;
    case Kind::uniform: return 0.5 * (a + b);
    case Kind::power: return a > 2.0 ? (a - 1.0) * b / (a - 2.0) : INFINITY;
    case Kind::exponential: return a;
  }
  return a;
}

double HalfLengthLaw::quantile(double p) const {
  switch (kind) {
    case Kind::fixed: return a;
    case Kind::uniform: return a + (b - a) * p;
    case Kind::power: return b * std::pow(1.0 - p, -1.0 / (a - 1.0));
    case Kind::exponential: return -a * std::log1p(-p);
  }
  return a;
}

double HalfLengthLaw::lower_support() const {
  switch (kind) {
    case Kind::fixed: return a;
    case Kind::uniform: return a;
    case Kind::power: return b;
    case Kind::exponential: return 0.0;
  }
  return 0.0;
}

double HalfLengthLaw::pdf(double l) const {
  switch (kind) {
    case Kind::fixed: return l == a ? INFINITY : 0.0;
    case Kind::uniform: return (l >= a && l <= b) ? 1.0 / (b - a) : 0.0;
    case Kind::power: return l >= b ? (a - 1.0) * std::pow(b, a - 1.0) * std::pow(l, -a) : 0.0;
    case Kind::exponential: return l >= 0.0 ? std::exp(-l / a) / a : 0.0;
  }
  return 0.0;
}

std::string HalfLengthLaw::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::fixed: os << "fixed(" << a << ")"; break;
    case Kind::uniform: os << "uniform(" << a << "," << b << ")"; break;
    case Kind::power: os << "power(c=" << a << ",l0=" << b << ")"; break;
    case Kind::exponential: os << "exponential(mean=" << a << ")"; break;
  }
  return os.str();
}

OrientationLaw OrientationLaw::fixed(double theta) {
  OrientationLaw o;
  o.kind = Kind::fixed;
  o.theta1 = wrap_axis(theta);
  return o;
}

OrientationLaw OrientationLaw::uniform() { return {}; }

OrientationLaw OrientationLaw::two_point(double t1, double t2, double p) {
  OrientationLaw o;
  o.kind = Kind::two_point;
  o.theta1 = wrap_axis(t1);
  o.theta2 = wrap_axis(t2);
  o.p = p;
  return o;
}

OrientationLaw OrientationLaw::von_mises(double mean_axis, double kappa) {
  OrientationLaw o;
  o.kind = Kind::von_mises;
  o.theta1 = wrap_axis(mean_axis);
  o.kappa = kappa;
  return o;
}

void OrientationLaw::validate() const {
  if (kind == Kind::two_point && !(p >= 0.0 && p <= 1.0))
    throw SamplingError("two-point orientation weight must lie in [0,1]");
  if (kind == Kind::von_mises && !(kappa >= 0.0)) throw SamplingError("von Mises kappa must be >= 0");
}

bool OrientationLaw::degenerate() const {
  switch (kind) {
    case Kind::fixed: return true;
    case Kind::two_point: return theta1 == theta2 || p <= 0.0 || p >= 1.0;
    default: return false;
  }
}

double OrientationLaw::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::fixed: return theta1;
    case Kind::uniform: return wrap_axis(kPi * (1.0 - rng.uniform()));
    case Kind::two_point: return rng.uniform() <= p ? theta1 : theta2;
    case Kind::von_mises: return wrap_axis(0.5 * von_mises_circle(2.0 * theta1, kappa, rng));
  }
  return 0.0;
}

double OrientationLaw::mean_abs_sin() const {
  switch (kind) {
    case Kind::fixed: return abs_sin(theta1);
    case Kind::uniform: return 2.0 / kPi;
    case Kind::two_point: return p * abs_sin(theta1) + (1.0 - p) * abs_sin(theta2);
    case Kind::von_mises: return von_mises_axis_mean(theta1, kappa, abs_sin);
  }
  return 0.0;
}

double OrientationLaw::mean_abs_cos() const {
  switch (kind) {
    case Kind::fixed: return abs_cos(theta1);
    case Kind::uniform: return 2.0 / kPi;
    case Kind::two_point: return p * abs_cos(theta1) + (1.0 - p) * abs_cos(theta2);
    case Kind::von_mises: return von_mises_axis_mean(theta1, kappa, abs_cos);
  }
  return 0.0;
}

std::string OrientationLaw::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::fixed: os << "fixed(" << theta1 << ")"; break;
    case Kind::uniform: os << "uniform"; break;
    case Kind::two_point: os << "two_point(" << theta1 << "," << theta2 << ",p=" << p << ")"; break;
    case Kind::von_mises: os << "von_mises(" << theta1 << ",kappa=" << kappa << ")"; break;
  }
  return os.str();
}

Segment Stick::segment() const { return stick_segment(center, half_length, angle); }

std::vector<Point> sample_ppp(const Box& window, double lambda, RngStream& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw SamplingError("intensity must be finite and >= 0");
  const std::uint64_t n = rng.poisson(lambda * window.area());
  std::vector<Point> pts;
  pts.reserve(n);
  const double w = window.width();
  const double h = window.height();
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = window.lo.x + w * (1.0 - rng.uniform());
    const double y = window.lo.y + h * (1.0 - rng.uniform());
    pts.push_back({x, y});
  }
  return pts;
}

Segment stick_segment(Point center, double half_length, double angle) {
  if (half_length == 0.0) return {center, center};
  const double dx = half_length * std::cos(angle);
  const double dy = half_length * std::sin(angle);
  return {{center.x - dx, center.y - dy}, {center.x + dx, center.y + dy}};
}

Stick sample_stick_mark(Point center, const StickLaw& law, RngStream& rng) {
  Stick s;
  s.center = center;
  s.half_length = law.half_length.sample(rng);
  s.angle = law.orientation.sample(rng);
  return s;
}

Segment sample_stick(Point center, const StickLaw& law, RngStream& rng) {
  return sample_stick_mark(center, law, rng).segment();
}

}  // namespace perco
