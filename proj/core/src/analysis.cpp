#include "perco/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

namespace perco {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_odd_parts(const std::vector<int>& parts) {
  return std::all_of(parts.begin(), parts.end(), [](int p) { return p % 2 == 1; });
}

std::vector<int> parts_from_mask(int n, std::uint64_t mask) {
  std::vector<int> parts;
  int last = 0;
  for (int pos = 1; pos < n; ++pos) {
    if (mask & (std::uint64_t{1} << (pos - 1))) {
      parts.push_back(pos - last);
      last = pos;
    }
  }
  parts.push_back(n - last);
  return parts;
}

struct Moments {
  double m1, m2, m3;
};

Moments finite_moments(const RadialProfile& g) {
  Moments out{};
  double* slots[3] = {&out.m1, &out.m2, &out.m3};
  for (int j = 1; j <= 3; ++j) {
    const MomentReport rep = moment_integral(g, j);
    if (!rep.finite) throw DivergenceError(rep.divergence);
    *slots[j - 1] = rep.value;
  }
  return out;
}

}  // namespace

RadialProfile RadialProfile::indicator(double r0) {
  RadialProfile g;
  g.kind = Kind::indicator;
  g.r0 = r0;
  return g;
}

RadialProfile RadialProfile::power_min(double c) {
  RadialProfile g;
  g.kind = Kind::power_min;
  g.c = c;
  return g;
}

RadialProfile RadialProfile::exponential(double mu) {
  RadialProfile g;
  g.kind = Kind::exponential;
  g.mu = mu;
  return g;
}

RadialProfile RadialProfile::iercm_mean(double eta, double alpha, double beta) {
  RadialProfile g;
  g.kind = Kind::iercm_mean;
  g.eta = eta;
  g.alpha = alpha;
  g.beta = beta;
  return g;
}

RadialProfile RadialProfile::iercm_deijfen(double eta, double alpha, double beta) {
  RadialProfile g = iercm_mean(eta, alpha, beta);
  g.kind = Kind::iercm_deijfen;
  return g;
}

RadialProfile RadialProfile::from_connection(const ConnectionFunction& cf, double beta) {
  switch (cf.kind) {
    case ConnectionFunction::Kind::indicator: return indicator(cf.r0);
    case ConnectionFunction::Kind::power_min: return power_min(cf.c);
    case ConnectionFunction::Kind::exponential: return exponential(cf.mu);
    case ConnectionFunction::Kind::inhomogeneous: return iercm_mean(cf.eta, cf.alpha, beta);
  }
  return {};
}

double RadialProfile::operator()(double r) const {
  switch (kind) {
    case Kind::indicator: return r <= r0 ? 1.0 : 0.0;
    case Kind::power_min: return r <= 1.0 ? 1.0 : std::pow(r, -c);
    case Kind::exponential: return std::exp(-mu * r);
    case Kind::iercm_mean: return r <= 0.0 ? 1.0 : expected_connection(eta, alpha, beta, r);
    case Kind::iercm_deijfen: return r <= 0.0 ? 1.0 : deijfen_bound(std::pow(r, alpha) / eta, beta);
  }
  return 0.0;
}

std::vector<double> RadialProfile::kinks() const {
  switch (kind) {
    case Kind::indicator: return {r0};
    case Kind::power_min: return {1.0};
    case Kind::exponential: return {};
    case Kind::iercm_mean:
    case Kind::iercm_deijfen: return {std::pow(eta, 1.0 / alpha)};
  }
  return {};
}

std::optional<double> RadialProfile::tail_exponent() const {
  switch (kind) {
    case Kind::power_min: return c;
    case Kind::iercm_mean: return std::min(alpha, alpha * beta);
    case Kind::iercm_deijfen: return alpha * std::min(beta / 2.0, 1.0);
    default: return std::nullopt;
  }
}

std::string RadialProfile::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::indicator: os << "indicator(r0=" << r0 << ")"; break;
    case Kind::power_min: os << "power_min(c=" << c << ")"; break;
    case Kind::exponential: os << "exponential(mu=" << mu << ")"; break;
    case Kind::iercm_mean: os << "iercm_mean(eta=" << eta << ",alpha=" << alpha << ",beta=" << beta << ")"; break;
    case Kind::iercm_deijfen:
      os << "iercm_deijfen(eta=" << eta << ",alpha=" << alpha << ",beta=" << beta << ")";
      break;
  }
  return os.str();
}

MomentReport moment_integral(const RadialProfile& g, int j, double rel_tol) {
  if (j < 1 || j > 3) throw std::invalid_argument("moment order must be 1, 2 or 3");
  MomentReport rep;
  rep.j = j;
  rep.integrand = "r^" + std::to_string(j) + " * " + g.describe();
  if (const auto e = g.tail_exponent(); e && *e <= j + 1.0) {
    rep.finite = false;
    rep.value = INFINITY;
    rep.abs_error_bound = INFINITY;
    std::ostringstream os;
    os << "moment " << j << " of " << g.describe() << " diverges: tail exponent " << *e << " <= " << j + 1;
    rep.divergence = os.str();
    return rep;
  }
  auto f = [&](double r) { return std::pow(r, j) * g(r); };
  QuadOptions opt;
  opt.rel_tol = rel_tol;
  QuadResult q;
  if (g.kind == RadialProfile::Kind::indicator) {
    q = integrate(f, 0.0, g.r0, opt);
  } else {
    std::vector<double> breaks{0.0};
    for (double k : g.kinks()) breaks.push_back(k);
    q = integrate_piecewise(f, breaks, true, opt);
  }
  rep.value = q.value;
  rep.abs_error_bound = q.abs_error;
  return rep;
}

double tail_mass(const RadialProfile& g, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("tail_mass radius must be >= 0");
  if (const auto e = g.tail_exponent(); e && *e <= 2.0)
    throw DivergenceError("tail mass of " + g.describe() + " diverges (tail exponent <= 2)");
  if (std::isinf(radius)) return 0.0;
  auto f = [&](double r) { return r * g(r); };
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  if (g.kind == RadialProfile::Kind::indicator) {
    if (radius >= g.r0) return 0.0;
    return kPi * (g.r0 * g.r0 - radius * radius);
  }
  std::vector<double> breaks{radius};
  for (double k : g.kinks())
    if (k > radius) breaks.push_back(k);
  return 2.0 * kPi * integrate_piecewise(f, breaks, true, opt).value;
}

double default_truncation_radius(const RadialProfile& g, double lambda, double window_area, double budget) {
  if (g.kind == RadialProfile::Kind::indicator) return g.r0;
  const double scale = lambda * lambda * window_area;
  if (scale <= 0.0) return 1.0;
  auto excess = [&](double r) { return scale * tail_mass(g, r) >= budget; };
  double hi = 1.0;
  while (excess(hi)) {
    hi *= 2.0;
    if (hi > 1e12) throw DivergenceError("no finite truncation radius meets the edge budget");
  }
  double lo = hi / 2.0;
  if (hi == 1.0) lo = 0.0;
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) ? lo : hi) = mid;
  }
  return hi;
}

double deijfen_constant(double beta) {
  if (beta == 2.0) return 1.0;
  return std::sqrt(1.0 + 2.0 / std::abs(beta - 2.0));
}

double deijfen_bound(double t, double beta) {
  if (!(t > 0.0)) throw std::invalid_argument("deijfen_bound needs t > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("deijfen_bound needs beta > 0");
  if (t < 1.0) return 1.0;
  return deijfen_constant(beta) * (1.0 + std::max(beta, 2.0) * std::log(t)) *
         std::pow(t, -std::min(beta / 2.0, 1.0));
}

double block_contribution(int m, const RadialProfile& g) {
  if (m < 0) throw std::invalid_argument("block index m must be >= 0");
  if (m == 0) {
    const MomentReport m1 = moment_integral(g, 1);
    if (!m1.finite) throw DivergenceError(m1.divergence);
    return 2.0 * kPi * m1.value;
  }
  const Moments mo = finite_moments(g);
  return std::ldexp(kPi, m + 1) * mo.m2 * mo.m2 * std::pow(mo.m3, m - 1);
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

std::uint64_t block_structures_count(int n, int k) {
  if (n < 1 || k < 0 || k > n - 1) throw std::invalid_argument("block_structures_count needs n >= 1, 0 <= k <= n-1");
  return binomial(n - 1, k);
}

BlockEnumeration enumerate_block_structures(int n) {
  if (n < 1 || n > 30) throw std::invalid_argument("enumeration supports 1 <= n <= 30");
  BlockEnumeration out;
  out.n = n;
  out.compositions_by_k.assign(n, 0);
  out.even_blocks_by_k.assign(n, 0);
  const std::uint64_t masks = std::uint64_t{1} << (n - 1);
  for (std::uint64_t mask = 0; mask < masks; ++mask) {
    const int k = std::popcount(mask);
    ++out.compositions_by_k[k];
    auto parts = parts_from_mask(n, mask);
    if (is_power_of_odd_parts(parts)) {
      ++out.even_blocks_by_k[k];
      out.even_structures.push_back(std::move(parts));
    }
  }
  return out;
}

double block_growth_constant(const RadialProfile& g) {
  const Moments mo = finite_moments(g);
  const double c1 = std::max({mo.m1, mo.m2, mo.m3});
  return std::pow(c1, 4) * (kPi + std::sqrt(kPi * kPi + 2.0));
}

namespace {

BoundTerm bound_term(double lambda, int n, const Moments& mo) {
  BoundTerm t;
  t.n = n;
  const double c1 = std::max({mo.m1, mo.m2, mo.m3});
  if (lambda == 0.0) return t;
  if (n > kMaxEnumeratedBlocks) {
    t.enumerated = false;
    const double c = std::pow(c1, 4) * (kPi + std::sqrt(kPi * kPi + 2.0));
    t.value = std::pow(c * lambda, n);
    t.assembled = t.value;
    return t;
  }
  const BlockEnumeration en = enumerate_block_structures(n);
  double weights = 0.0, assembled = 0.0;
  for (const auto& parts : en.even_structures) {
    double w = 1.0, a = 1.0;
    for (int p : parts) {
      const int m = (p - 1) / 2;
      w *= std::ldexp(kPi, m + 1);
      a *= m == 0 ? 2.0 * kPi * mo.m1 : std::ldexp(kPi, m + 1) * mo.m2 * mo.m2 * std::pow(mo.m3, m - 1);
    }
    weights += w;
    assembled += a;
  }
  t.structures = en.even_structures.size();
  const double ln = std::pow(lambda, n);
  t.value = ln * weights * std::pow(c1, 4.0 * n);
  t.assembled = ln * assembled;
  return t;
}

}  // namespace

BoundTerm theta_upper_bound(double lambda, int n, const RadialProfile& g) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  return bound_term(lambda, n, finite_moments(g));
}

BoundSeries theta_bound_series(double lambda, int n_max, const RadialProfile& g) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const Moments mo = finite_moments(g);
  BoundSeries s;
  s.lambda = lambda;
  s.n_max = n_max;
  s.c1 = std::max({mo.m1, mo.m2, mo.m3});
  s.constant = std::pow(s.c1, 4) * (kPi + std::sqrt(kPi * kPi + 2.0));
  for (int n = 1; n <= n_max; ++n) s.terms.push_back(bound_term(lambda, n, mo));
  return s;
}

RegionIntegralCheck size4_region_integral_check(const RadialProfile& g, double ell, std::uint64_t samples,
                                                RngStream& rng) {
  if (!(ell > 0.0)) throw std::invalid_argument("ell must be > 0");
  if (samples < 2) throw std::invalid_argument("need at least two samples");
  const MomentReport m2 = moment_integral(g, 2);
  if (!m2.finite) throw DivergenceError(m2.divergence);
  RegionIntegralCheck out;
  out.analytic_value = 2.0 * ell * m2.value;
  out.samples = samples;
  const Segment base{{0.0, 0.0}, {ell, 0.0}};
  // a uniform in (-r, ell + r) x (0, r), b = a + r(cos t, sin t), r ~ Gamma(3, 1).
  double mean = 0.0, m2acc = 0.0;
  for (std::uint64_t i = 0; i < samples; ++i) {
    const double r = rng.exponential() + rng.exponential() + rng.exponential();
    const double theta = 2.0 * kPi * rng.uniform();
    const Point a{rng.uniform(-r, ell + r), r * rng.uniform()};
    const Point b{a.x + r * std::cos(theta), a.y + r * std::sin(theta)};
    double x = 0.0;
    if (segments_touch({a, b}, base)) {
      const double density = 0.5 * r * r * std::exp(-r);
      x = g(r) * r * 2.0 * kPi / density * r * (ell + 2.0 * r);
    }
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2acc += delta * (x - mean);
  }
  out.mc_value = mean;
  out.mc_sigma = std::sqrt(m2acc / static_cast<double>(samples - 1) / static_cast<double>(samples));
  return out;
}

double expected_connection(double eta, double alpha, double beta, double dist, double* abs_error) {
  if (!(dist > 0.0)) throw std::invalid_argument("distance must be > 0");
  // W = W1 W2 = e^u with density beta^2 u e^{-beta u} on u > 0.
  const double scale = eta * std::pow(dist, -alpha);
  auto f = [&](double u) {
    return beta * beta * u * std::exp(-beta * u) * -std::expm1(-scale * std::exp(u));
  };
  QuadOptions opt;
  opt.rel_tol = 1e-12;
  std::vector<double> breaks{0.0};
  const double ustar = -std::log(scale);
  if (ustar > 0.0) breaks.push_back(ustar);
  const QuadResult q = integrate_piecewise(f, breaks, true, opt);
  if (abs_error) *abs_error = q.abs_error;
  return q.value;
}

ConnectionTable expected_connection_vs_distance(double eta, double alpha, double beta,
                                                const std::vector<double>& dist_grid) {
  if (!(eta > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("eta, alpha, beta must be > 0");
  if (dist_grid.size() < 3) throw std::invalid_argument("need at least three distances");
  ConnectionTable t;
  t.eta = eta;
  t.alpha = alpha;
  t.beta = beta;
  for (double d : dist_grid) {
    if (!(std::pow(d, alpha) > eta)) throw std::invalid_argument("every distance must satisfy d^alpha > eta");
    ConnectionRow row;
    row.dist = d;
    row.value = expected_connection(eta, alpha, beta, d, &row.abs_error);
    t.rows.push_back(row);
  }
  const std::size_t n = t.rows.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(t.rows[i].dist);
    ly[i] = std::log(t.rows[i].value);
  }
  {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += lx[i]; my += ly[i]; }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    t.ols_slope = sxy / sxx;
  }
  // Relative residual of E d^kappa against A + B log d, with A, B solved exactly.
  auto objective = [&](double kappa) {
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = std::exp(ly[i] + kappa * lx[i]);
      const double x1 = 1.0 / y, x2 = lx[i] / y;
      s11 += x1 * x1; s12 += x1 * x2; s22 += x2 * x2;
      r1 += x1; r2 += x2;
    }
    const double det = s11 * s22 - s12 * s12;
    const double a = (r1 * s22 - r2 * s12) / det;
    const double b = (s11 * r2 - s12 * r1) / det;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double y = std::exp(ly[i] + kappa * lx[i]);
      const double res = 1.0 - a / y - b * lx[i] / y;
      ss += res * res;
    }
    return ss;
  };
  double best_k = 0.1, best_v = INFINITY;
  for (double k = 0.1; k <= 40.0; k += 0.01) {
    const double v = objective(k);
    if (v < best_v) { best_v = v; best_k = k; }
  }
  double lo = best_k - 0.01, hi = best_k + 0.01;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - phi * (hi - lo); f1 = objective(x1); }
    else { lo = x1; x1 = x2; f1 = f2; x2 = lo + phi * (hi - lo); f2 = objective(x2); }
  }
  t.fitted_exponent = 0.5 * (lo + hi);
  t.expected_exponent = std::min(alpha, alpha * beta);
  t.relative_error = std::abs(t.fitted_exponent - t.expected_exponent) / t.expected_exponent;
  t.within_tolerance = alpha * beta != alpha && t.relative_error <= 0.05;
  return t;
}

double square_root_trick_bound(double p_union, int kappa) {
  if (!(p_union >= 0.0 && p_union <= 1.0)) throw std::invalid_argument("p_union must lie in [0,1]");
  if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
  return 1.0 - std::pow(1.0 - p_union, 1.0 / kappa);
}

WilsonInterval wilson_interval(std::uint64_t hits, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval w{std::max(0.0, center - half), std::min(1.0, center + half)};
  w.low = std::min(w.low, p);
  w.high = std::max(w.high, p);
  if (hits == 0) w.low = 0.0;
  if (hits == trials) w.high = 1.0;
  return w;
}

}  // namespace perco
