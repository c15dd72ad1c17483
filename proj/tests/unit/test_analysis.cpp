#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "perco/analysis.hpp"
#include "perco/quadrature.hpp"

using namespace perco;

namespace {

constexpr double kPi = std::numbers::pi;

// Compositions of n into odd parts, each part p weighted by w(p), summed.
double odd_composition_sum(int n, const std::function<double(int)>& w) {
  std::vector<double> f(n + 1, 0.0);
  f[0] = 1.0;
  for (int k = 1; k <= n; ++k)
    for (int p = 1; p <= k; p += 2) f[k] += w(p) * f[k - p];
  return f[n];
}

// Number of ways to write n as an ordered sum of k+1 positive parts.
std::uint64_t count_compositions(int n, int parts) {
  if (parts == 1) return n >= 1 ? 1 : 0;
  std::uint64_t total = 0;
  for (int first = 1; first < n; ++first) total += count_compositions(n - first, parts - 1);
  return total;
}

}  // namespace

TEST(Quadrature, KnownIntegrals) {
  EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0, kPi).value, 2.0, 1e-12);
  EXPECT_NEAR(integrate_to_infinity([](double x) { return std::exp(-x); }, 0).value, 1.0, 1e-12);
  EXPECT_NEAR(integrate_to_infinity([](double x) { return 1.0 / (x * x); }, 1).value, 1.0, 1e-10);
  const auto r = integrate_piecewise([](double x) { return std::abs(x - 1.0); }, {0.0, 1.0, 3.0}, false);
  EXPECT_NEAR(r.value, 2.5, 1e-13);
  EXPECT_TRUE(r.converged);
}

TEST(MomentIntegral, Examples) {
  EXPECT_NEAR(moment_integral(RadialProfile::indicator(1.0), 3).value, 0.25, 1e-12);
  EXPECT_NEAR(moment_integral(RadialProfile::exponential(1.0), 2).value, 2.0, 1e-10);
  EXPECT_NEAR(moment_integral(RadialProfile::power_min(5.0), 1).value, 5.0 / 6.0, 1e-10);
}

TEST(MomentIntegral, ErrorBoundWithinTolerance) {
  for (int j = 1; j <= 3; ++j) {
    const auto rep = moment_integral(RadialProfile::power_min(6.5), j);
    ASSERT_TRUE(rep.finite);
    EXPECT_LE(rep.abs_error_bound, 1e-9 * rep.value);
    // 1/(j+1) + 1/(c-j-1)
    EXPECT_NEAR(rep.value, 1.0 / (j + 1) + 1.0 / (6.5 - j - 1), 1e-9 * rep.value);
  }
}

TEST(MomentIntegral, DivergentTailIsReported) {
  const auto rep = moment_integral(RadialProfile::power_min(4.0), 3);
  EXPECT_FALSE(rep.finite);
  EXPECT_FALSE(rep.divergence.empty());
  EXPECT_TRUE(moment_integral(RadialProfile::power_min(4.0), 2).finite);
  EXPECT_THROW(block_contribution(2, RadialProfile::power_min(4.0)), DivergenceError);
  EXPECT_THROW(moment_integral(RadialProfile::exponential(1.0), 4), std::invalid_argument);
}

TEST(MomentIntegral, InhomogeneousProfiles) {
  // min(alpha, alpha beta) = 5 > 4: all three moments finite.
  const auto mean = RadialProfile::iercm_mean(1.0, 5.0, 2.0);
  EXPECT_EQ(*mean.tail_exponent(), 5.0);
  for (int j = 1; j <= 3; ++j) EXPECT_TRUE(moment_integral(mean, j).finite);
  const auto bound = RadialProfile::iercm_deijfen(1.0, 5.0, 0.9);
  EXPECT_NEAR(*bound.tail_exponent(), 5.0 * 0.45, 1e-12);
  EXPECT_TRUE(moment_integral(bound, 1).finite);
  EXPECT_FALSE(moment_integral(bound, 2).finite);
  // The averaged profile sits below the Deijfen profile.
  const auto b2 = RadialProfile::iercm_deijfen(1.0, 5.0, 2.0);
  for (double r : {0.5, 1.0, 2.0, 5.0}) EXPECT_LE(mean(r), b2(r) + 1e-15);
}

TEST(TailMass, Examples) {
  EXPECT_NEAR(tail_mass(RadialProfile::power_min(5.0), 1.0), 2.0 * kPi / 3.0, 1e-10);
  double prev = INFINITY;
  for (double r = 0.5; r < 1e4; r *= 2.0) {
    const double v = tail_mass(RadialProfile::exponential(1.0), r);
    if (prev > 0.0) EXPECT_LT(v, prev);
    else EXPECT_EQ(v, 0.0);
    prev = v;
  }
  EXPECT_EQ(prev, 0.0);
  EXPECT_NEAR(tail_mass(RadialProfile::indicator(2.0), 1.0), kPi * 3.0, 1e-12);
  EXPECT_THROW(tail_mass(RadialProfile::power_min(2.0), 1.0), DivergenceError);
}

TEST(TailMass, PowerTailScaling) {
  const auto g = RadialProfile::power_min(4.5);
  const double ref = tail_mass(g, 1.0);
  for (double r : {2.0, 7.5, 40.0, 1000.0}) EXPECT_NEAR(tail_mass(g, r) * std::pow(r, 2.5), ref, 1e-6 * ref);
}

TEST(DefaultTruncation, MeetsTheEdgeBudgetMinimally) {
  const auto g = RadialProfile::power_min(5.0);
  const double area = 400.0;
  const double R = default_truncation_radius(g, 1.0, area);
  EXPECT_LT(area * tail_mass(g, R), 1e-3);
  EXPECT_GE(area * tail_mass(g, R * 0.999), 1e-3 * 0.999);
  EXPECT_EQ(default_truncation_radius(RadialProfile::indicator(1.5), 1.0, area), 1.5);
}

TEST(DeijfenBound, Examples) {
  for (double beta : {0.5, 2.0, 4.0}) EXPECT_EQ(deijfen_bound(0.5, beta), 1.0);
  EXPECT_NEAR(deijfen_bound(1.0, 4.0), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(deijfen_bound(1.0, 2.0), 1.0, 1e-15);
  // beta = 1: c = sqrt(1 + 2/|1-2|) = sqrt 3, exponent 1/2.
  EXPECT_NEAR(deijfen_bound(100.0, 1.0), std::sqrt(3.0) * (1.0 + 2.0 * std::log(100.0)) / 10.0, 1e-12);
  EXPECT_THROW(deijfen_bound(0.0, 1.0), std::invalid_argument);
}

TEST(DeijfenBound, DominatesMonteCarlo) {
  RngStream rng(19, 0);
  const int n = 1000000;
  double acc = 0.0;
  const double t = 1e6;
  for (int i = 0; i < n; ++i) {
    const double w = sample_pareto(4.0, rng) * sample_pareto(4.0, rng) / t;
    acc += std::min(w * w, 1.0);
  }
  EXPECT_LE(std::sqrt(acc / n), deijfen_bound(t, 4.0));
}

TEST(BlockContribution, ExponentialValues) {
  const auto g = RadialProfile::exponential(1.0);
  EXPECT_NEAR(block_contribution(0, g), 2 * kPi, 1e-9 * 2 * kPi);
  EXPECT_NEAR(block_contribution(1, g), 16 * kPi, 1e-9 * 16 * kPi);
  EXPECT_NEAR(block_contribution(2, g), 192 * kPi, 1e-9 * 192 * kPi);
  EXPECT_THROW(block_contribution(-1, g), std::invalid_argument);
}

TEST(BlockStructures, CountExamples) {
  EXPECT_EQ(block_structures_count(5, 2), 6u);
  EXPECT_EQ(block_structures_count(1, 0), 1u);
  EXPECT_THROW(block_structures_count(3, 3), std::invalid_argument);
  EXPECT_THROW(block_structures_count(0, 0), std::invalid_argument);
}

TEST(BlockStructures, EnumerationMatchesBinomials) {
  for (int n = 1; n <= 12; ++n) {
    const auto en = enumerate_block_structures(n);
    std::uint64_t total = 0;
    for (int k = 0; k < n; ++k) {
      EXPECT_EQ(en.compositions_by_k[k], block_structures_count(n, k)) << n << " " << k;
      EXPECT_EQ(en.compositions_by_k[k], count_compositions(n, k + 1)) << n << " " << k;
      total += en.compositions_by_k[k];
    }
    EXPECT_EQ(total, std::uint64_t{1} << (n - 1));
    // Compositions into odd parts are counted by Fibonacci numbers.
    std::uint64_t a = 1, b = 1;
    for (int i = 2; i <= n; ++i) std::tie(a, b) = std::pair{b, a + b};
    EXPECT_EQ(en.even_structures.size(), a) << n;
    for (const auto& s : en.even_structures) {
      int sum = 0;
      for (int p : s) {
        EXPECT_EQ(p % 2, 1);
        sum += p;
      }
      EXPECT_EQ(sum, n);
    }
  }
}

TEST(ThetaUpperBound, Examples) {
  const auto g = RadialProfile::exponential(1.0);
  EXPECT_EQ(theta_upper_bound(0.0, 3, g).value, 0.0);
  EXPECT_NEAR(theta_upper_bound(0.01, 1, g).assembled, 0.01 * 2 * kPi * 1.0, 1e-12);
  EXPECT_THROW(theta_upper_bound(0.1, 0, g), std::invalid_argument);
}

TEST(ThetaUpperBound, MatchesHandAssembledSums) {
  const auto g = RadialProfile::exponential(1.0);
  const double lambda = 1e-4, c1 = 6.0;  // max(Gamma(2), Gamma(3), Gamma(4))
  for (int n = 1; n <= 6; ++n) {
    const auto t = theta_upper_bound(lambda, n, g);
    ASSERT_TRUE(t.enumerated);
    const double assembled = std::pow(lambda, n) * odd_composition_sum(n, [](int p) {
      const int m = (p - 1) / 2;
      return m == 0 ? 2 * kPi : std::ldexp(kPi, m + 1) * 4.0 * std::pow(6.0, m - 1);
    });
    EXPECT_NEAR(t.assembled, assembled, 1e-9 * assembled) << n;
    const double value = std::pow(lambda, n) * std::pow(c1, 4.0 * n) *
                         odd_composition_sum(n, [](int p) { return std::ldexp(kPi, (p - 1) / 2 + 1); });
    EXPECT_NEAR(t.value, value, 1e-9 * value) << n;
  }
}

TEST(ThetaUpperBound, NthRootApproachesGrowthConstant) {
  const auto g = RadialProfile::exponential(1.0);
  const double C = block_growth_constant(g);
  EXPECT_NEAR(C, std::pow(6.0, 4) * (kPi + std::sqrt(kPi * kPi + 2)), 1e-6 * C);
  const double lambda = 0.5 / C;
  const auto s = theta_bound_series(lambda, 14, g);
  ASSERT_EQ(s.terms.size(), 14u);
  EXPECT_NEAR(std::pow(s.terms[11].value, 1.0 / 12), C * lambda, 0.02 * C * lambda);
  // Non-increasing once C lambda < 1.
  for (std::size_t n = 1; n < s.terms.size(); ++n) EXPECT_LE(s.terms[n].value, s.terms[n - 1].value);
  EXPECT_FALSE(s.terms[12].enumerated);
  EXPECT_NEAR(s.terms[12].value, std::pow(C * lambda, 13), 1e-12);
}

TEST(RegionIntegral, ExponentialAndIndicator) {
  RngStream rng(23, 0);
  const auto e1 = size4_region_integral_check(RadialProfile::exponential(1.0), 1.0, 1000000, rng);
  EXPECT_NEAR(e1.analytic_value, 4.0, 1e-9);
  EXPECT_NEAR(e1.mc_value, 4.0, 3 * e1.mc_sigma);
  const auto e2 = size4_region_integral_check(RadialProfile::exponential(1.0), 2.0, 400000, rng);
  EXPECT_NEAR(e2.analytic_value, 8.0, 1e-9);
  EXPECT_NEAR(e2.mc_value, 8.0, 3 * e2.mc_sigma);
  const auto ind = size4_region_integral_check(RadialProfile::indicator(1.0), 1.0, 400000, rng);
  EXPECT_NEAR(ind.analytic_value, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(ind.mc_value, 2.0 / 3.0, 3 * ind.mc_sigma);
}

TEST(ExpectedConnection, MatchesTwoDimensionalQuadrature) {
  // Trapezoid over (u1, u2) with w = e^u, density beta e^{-beta u} each.
  for (auto [eta, alpha, beta, d] : {std::tuple{1.0, 5.0, 2.0, 10.0}, {0.5, 3.0, 0.9, 4.0}}) {
    const int n = 1500;
    const double umax = 60.0 / beta, h = umax / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double u1 = i * h, u2 = j * h;
        const double wgt = (i == 0 || i == n ? 0.5 : 1.0) * (j == 0 || j == n ? 0.5 : 1.0);
        acc += wgt * beta * beta * std::exp(-beta * (u1 + u2)) *
               -std::expm1(-eta * std::exp(u1 + u2) * std::pow(d, -alpha));
      }
    acc *= h * h;
    const double got = expected_connection(eta, alpha, beta, d);
    EXPECT_NEAR(got, acc, 2e-4 * acc) << alpha << " " << beta;
  }
}

TEST(ExpectedConnection, FirstOrderRegime) {
  const double beta = 10.0, ew = beta / (beta - 1.0);
  const double v = expected_connection(1.0, 3.0, beta, 100.0);
  EXPECT_NEAR(v, ew * ew * 1e-6, 1e-4 * ew * ew * 1e-6);
}

TEST(ExpectedConnection, SlopeAndMonotoneTable) {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(10.0 * std::pow(10.0, k / 20.0));
  const auto t = expected_connection_vs_distance(1.0, 5.0, 2.0, grid);
  EXPECT_GE(t.ols_slope, -5.25);
  EXPECT_LE(t.ols_slope, -4.75);
  for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_LT(t.rows[k].value, t.rows[k - 1].value);
  EXPECT_EQ(t.expected_exponent, 5.0);
  EXPECT_TRUE(t.within_tolerance);
  EXPECT_THROW(expected_connection_vs_distance(1.0, 5.0, 2.0, {0.5, 10.0, 20.0}), std::invalid_argument);
}

TEST(SquareRootTrick, Values) {
  EXPECT_EQ(square_root_trick_bound(1.0, 8), 1.0);
  EXPECT_EQ(square_root_trick_bound(0.0, 3), 0.0);
  EXPECT_NEAR(square_root_trick_bound(0.75, 2), 0.5, 1e-15);
  EXPECT_NEAR(square_root_trick_bound(0.875, 3), 0.5, 1e-15);
  EXPECT_THROW(square_root_trick_bound(1.5, 2), std::invalid_argument);
  EXPECT_THROW(square_root_trick_bound(0.5, 0), std::invalid_argument);
}

TEST(WilsonInterval, ClosedForm) {
  const double z = 1.959963984540054;
  for (auto [h, n] : {std::pair<int, int>{0, 10}, {3, 10}, {50, 100}, {100, 100}, {7, 2000}}) {
    const double p = double(h) / n, z2 = z * z;
    const double c = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n));
    const auto w = wilson_interval(h, n);
    EXPECT_NEAR(w.low, std::max(0.0, c - half), 1e-12);
    EXPECT_NEAR(w.high, std::min(1.0, c + half), 1e-12);
    EXPECT_LE(w.low, p);
    EXPECT_GE(w.high, p);
  }
  EXPECT_EQ(wilson_interval(0, 10).low, 0.0);
  EXPECT_EQ(wilson_interval(10, 10).high, 1.0);
}

TEST(WilsonInterval, CoverageCalibration) {
  std::mt19937_64 gen(29);
  for (double p : {0.05, 0.3, 0.5, 0.8}) {
    std::binomial_distribution<int> bin(200, p);
    int covered = 0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
      const auto w = wilson_interval(bin(gen), 200);
      covered += w.low <= p && p <= w.high;
    }
    EXPECT_GE(double(covered) / reps, 0.93) << p;
  }
}
