#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <set>

#include "perco/estimate.hpp"

using namespace perco;

namespace {

ModelConfig rgg(double lambda, double half = 8.0) {
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.lambda = lambda;
  c.connection = ConnectionFunction::indicator(1.0);
  c.core = Box::centered(half);
  return c;
}

// Quadratic-time left-right crossing: clip every segment, link touching pieces.
bool brute_crossing(const Realization& r, const Box& rect) {
  std::vector<Segment> pieces;
  for (const auto& s : r.segments())
    if (auto p = clip_segment_to_box(s, rect)) pieces.push_back(*p);
  const std::size_t n = pieces.size();
  std::vector<char> seen(n, 0);
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < n; ++i)
    if (segment_touches_side(pieces[i], rect, Side::left)) {
      seen[i] = 1;
      q.push_back(i);
    }
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    if (segment_touches_side(pieces[u], rect, Side::right)) return true;
    for (std::size_t v = 0; v < n; ++v)
      if (!seen[v] && segments_touch(pieces[u], pieces[v])) {
        seen[v] = 1;
        q.push_back(v);
      }
  }
  return false;
}

std::set<std::pair<double, double>> point_set(const Realization& r) {
  std::set<std::pair<double, double>> s;
  for (const auto& p : r.points) s.insert({p.x, p.y});
  return s;
}

}  // namespace

TEST(ModelConfig, ValidationAndDefaults) {
  ModelConfig c = rgg(1.0);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.resolved_truncation(), 1.0);
  EXPECT_EQ(c.resolved_padding(), 1.0);
  c.model = ModelKind::iercm;
  EXPECT_ANY_THROW(c.validate());
  c.connection = ConnectionFunction::inhomogeneous(1.0, 5.0);
  EXPECT_NO_THROW(c.validate());
  c.model = ModelKind::ercm;
  EXPECT_ANY_THROW(c.validate());

  ModelConfig s;
  s.model = ModelKind::sticks;
  s.sticks = {HalfLengthLaw::power(4.0, 1.0), OrientationLaw::uniform()};
  EXPECT_EQ(s.resolved_padding(), 0.0);
  s.stick_sampling = StickSampling::padded;
  EXPECT_NEAR(s.resolved_padding(), 2.0 * std::pow(1000.0, 1.0 / 3.0), 1e-9);
}

TEST(ModelConfig, HypothesisWarnings) {
  ModelConfig c = rgg(1.0);
  c.connection = ConnectionFunction::power_min(4.0);
  EXPECT_EQ(c.hypothesis_warnings().size(), 1u);
  c.connection = ConnectionFunction::power_min(5.0);
  EXPECT_TRUE(c.hypothesis_warnings().empty());
  c.model = ModelKind::iercm;
  c.connection = ConnectionFunction::inhomogeneous(1.0, 5.0);
  c.beta = 0.7;
  EXPECT_EQ(c.hypothesis_warnings().size(), 1u);
  c.beta = 2.0;
  EXPECT_TRUE(c.hypothesis_warnings().empty());
  ModelConfig s;
  s.model = ModelKind::sticks;
  s.sticks = {HalfLengthLaw::power(3.0, 1.0), OrientationLaw::fixed(0.0)};
  EXPECT_EQ(s.hypothesis_warnings().size(), 2u);
}

TEST(Estimate, ZeroIntensityGivesZero) {
  const auto r = estimate_event_probability(rgg(0.0), CrossingSpec{Box(-5, -5, 5, 5)}, 50, 1);
  EXPECT_EQ(r.hits, 0u);
  EXPECT_EQ(r.p_hat, 0.0);
  EXPECT_EQ(r.ci_low, 0.0);
  EXPECT_GT(r.ci_high, 0.0);
}

TEST(Estimate, DenseGraphSaturates) {
  const ModelConfig c = rgg(10.0, 4.0);
  const CrossingSpec e{Box(-2.5, -2.5, 2.5, 2.5)};
  const auto r = estimate_event_probability(c, e, 100, 3);
  EXPECT_GT(r.p_hat, 0.98);
  // A few trials rechecked by a quadratic-time crossing search.
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto real = sample_realization(c, RngStream(3, k));
    EXPECT_EQ(brute_crossing(real, e.rect), event_occurs(real, e, c.linkage()));
  }
}

TEST(Estimate, RegionOutsideCoreIsRejected) {
  EXPECT_THROW(estimate_event_probability(rgg(1.0, 3.0), CrossingSpec{Box(-5, -1, 5, 1)}, 10, 1), RegionError);
}

TEST(Estimate, ThreadCountDoesNotChangeResults) {
  const ModelConfig c = rgg(1.6, 6.0);
  const CircuitEvent e{Annulus::centered({0, 0}, 1.5, 5.0)};
  EstimateOptions one{1, 0, true}, many{8, 0, true};
  const auto a = estimate_event_probability(c, e, 300, 77, one);
  const auto b = estimate_event_probability(c, e, 300, 77, many);
  EXPECT_EQ(a.hit, b.hit);
  EXPECT_EQ(a.hits, b.hits);
  EXPECT_GT(a.hits, 0u);
  EXPECT_LT(a.hits, 300u);
}

TEST(Estimate, TrialsAreIndexedByStream) {
  const ModelConfig c = rgg(1.5, 5.0);
  const CrossingSpec e{Box(-4, -2, 4, 2)};
  EstimateOptions keep{1, 0, true};
  const auto all = estimate_event_probability(c, e, 100, 5, keep);
  EstimateOptions tail{1, 60, true};
  const auto last = estimate_event_probability(c, e, 40, 5, tail);
  EXPECT_TRUE(std::equal(last.hit.begin(), last.hit.end(), all.hit.begin() + 60));
}

TEST(Estimate, WilsonWidthScalesAsInverseSquareRoot) {
  // Doubling the trials shrinks the interval by 1/sqrt(2); four times the trials halves it.
  const ModelConfig c = rgg(1.5, 5.0);
  const CrossingSpec e{Box(-4, -4, 4, 4)};
  const auto r1 = estimate_event_probability(c, e, 1000, 9);
  const auto r2 = estimate_event_probability(c, e, 2000, 9);
  const auto r4 = estimate_event_probability(c, e, 4000, 9);
  const double w1 = r1.ci_high - r1.ci_low, w2 = r2.ci_high - r2.ci_low, w4 = r4.ci_high - r4.ci_low;
  EXPECT_NEAR(w2 / w1, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
  EXPECT_NEAR(w4 / w1, 0.5, 0.1);
}

TEST(Coupling, ThinnedRealizationsAreNested) {
  ModelConfig c = rgg(2.0, 5.0);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto m = sample_master(c, 2.0, RngStream(13, t));
    const auto a = m.thinned(0.7), b = m.thinned(1.4);
    const auto pa = point_set(a), pb = point_set(b);
    EXPECT_TRUE(std::includes(pb.begin(), pb.end(), pa.begin(), pa.end()));
    EXPECT_LE(a.edges.size(), b.edges.size());
    EXPECT_EQ(m.thinned(2.0).points.size(), m.realization.points.size());
  }
}

TEST(Coupling, LadderIsMonotoneTrialwise) {
  const ModelConfig c = rgg(1.0, 6.0);
  const CrossingSpec e{Box(-5, -5, 5, 5)};
  const std::vector<double> lambdas{1.0, 1.3, 1.6, 1.9, 2.2};
  const auto lad = coupled_lambda_ladder(c, e, lambdas, 300, 21);
  EXPECT_EQ(lad.monotonicity_violations, 0u);
  ASSERT_EQ(lad.estimates.size(), lambdas.size());
  for (std::size_t k = 1; k < lambdas.size(); ++k) {
    EXPECT_GE(lad.estimates[k].p_hat, lad.estimates[k - 1].p_hat);
    for (std::size_t t = 0; t < 300; ++t) EXPECT_GE(lad.estimates[k].hit[t], lad.estimates[k - 1].hit[t]);
  }
  EXPECT_LT(lad.estimates.front().p_hat, lad.estimates.back().p_hat);
}

TEST(Coupling, EnhancedArmsDominateDirectArms) {
  ModelConfig rcm = rgg(0.4, 7.0);
  rcm.model = ModelKind::rcm;
  rcm.connection = ConnectionFunction::power_min(5.0);
  ModelConfig ercm = rcm;
  ercm.model = ModelKind::ercm;
  const ArmSpec arm{Box::centered(1.0), BoxBoundary{Box::centered(6.0)}, Box::centered(6.0)};
  EstimateOptions keep{0, 0, true};
  const auto a = estimate_event_probability(rcm, arm, 300, 31, keep);
  const auto b = estimate_event_probability(ercm, arm, 300, 31, keep);
  for (std::size_t t = 0; t < 300; ++t) EXPECT_GE(b.hit[t], a.hit[t]);
  EXPECT_GT(b.hits, a.hits);
}

TEST(ProxyLadder, NonIncreasingInScale) {
  const ModelConfig c = rgg(1.7, 9.0);
  const auto rows = percolation_proxy_ladder(c, 1.0, {2.0, 4.0, 6.0, 8.0}, 200, 41, {0, 0, true});
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t k = 1; k < rows.size(); ++k)
    for (std::size_t t = 0; t < 200; ++t) EXPECT_LE(rows[k].estimate.hit[t], rows[k - 1].estimate.hit[t]);
}

TEST(TailScan, CensoringAndWarnings) {
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.lambda = 1.0;
  c.connection = ConnectionFunction::power_min(5.0);
  c.truncation_radius = 3.0;
  const auto scan = longest_edge_tail_scan(c, 1.0, 0.8, {2.0, 5.0}, 50, 3);
  ASSERT_EQ(scan.rows.size(), 2u);
  EXPECT_FALSE(scan.rows[0].censored);  // 2^0.8 < 3
  EXPECT_TRUE(scan.rows[1].censored);   // 5^0.8 > 3
  EXPECT_EQ(scan.rows[1].estimate.hits, 0u);
  EXPECT_TRUE(scan.warnings.empty());
  const auto low = longest_edge_tail_scan(c, 1.0, 0.5, {2.0}, 10, 3);
  EXPECT_FALSE(low.warnings.empty());  // 0.5 <= 2/(5-2)
}

TEST(TailScan, ScanRowsMatchDirectEstimates) {
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.lambda = 1.0;
  c.connection = ConnectionFunction::power_min(5.0);
  const auto scan = longest_edge_tail_scan(c, 1.0, 0.8, {4.0}, 300, 8);
  ASSERT_EQ(scan.rows.size(), 1u);
  const auto& row = scan.rows[0];
  EXPECT_NEAR(row.threshold, std::pow(4.0, 0.8), 1e-12);
  ModelConfig d = c;
  d.core = Box::centered(4.0);
  const auto direct = estimate_event_probability(d, LongestEdgeEvent{Box::centered(4.0), row.threshold}, 300, 8);
  EXPECT_EQ(direct.hits, row.estimate.hits);
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
  std::vector<std::atomic<int>> seen(1000);
  parallel_for(0, 1000, 4, [&](std::uint64_t k) { seen[k]++; });
  for (auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(parallel_for(0, 100, 4,
                            [](std::uint64_t k) {
                              if (k == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Bisection, BracketShrinksAndIsNested) {
  const ModelConfig c = rgg(1.0, 6.0);
  const CrossingSpec e{Box(-5, -5, 5, 5)};
  BisectOptions opt;
  opt.tolerance = 0.25;
  const auto res = bisect_critical_intensity(c, e, 0.5, 0.5, 4.0, 17, opt);
  EXPECT_FALSE(res.inconclusive) << res.diagnostics;
  EXPECT_LT(res.bracket_low, res.bracket_high);
  EXPECT_LE(res.bracket_high - res.bracket_low, 0.25 + 1e-12);
  double lo = 0.5, hi = 4.0;
  for (const auto& s : res.steps) {
    EXPECT_GE(s.bracket_low, lo);
    EXPECT_LE(s.bracket_high, hi);
    lo = s.bracket_low;
    hi = s.bracket_high;
  }
}

TEST(Bisection, UnseparatedBracketIsInconclusive) {
  const ModelConfig c = rgg(1.0, 6.0);
  const CrossingSpec e{Box(-5, -5, 5, 5)};
  const auto res = bisect_critical_intensity(c, e, 0.5, 3.0, 4.0, 17);
  EXPECT_TRUE(res.inconclusive);
  EXPECT_FALSE(res.diagnostics.empty());
}

TEST(Bisection, EnhancedCriticalIntensityNotAboveDirect) {
  ModelConfig rcm = rgg(1.0, 5.0);
  rcm.model = ModelKind::rcm;
  rcm.connection = ConnectionFunction::power_min(5.0);
  rcm.truncation_radius = 4.0;
  rcm.padding = 4.0;
  ModelConfig ercm = rcm;
  ercm.model = ModelKind::ercm;
  const CrossingSpec e{Box(-4, -4, 4, 4)};
  BisectOptions opt;
  opt.tolerance = 0.25;
  opt.max_trials_per_point = 1600;
  opt.budget = 20000;
  const auto a = bisect_critical_intensity(rcm, e, 0.5, 0.2, 5.0, 55, opt);
  const auto b = bisect_critical_intensity(ercm, e, 0.5, 0.2, 5.0, 55, opt);
  ASSERT_FALSE(a.inconclusive) << a.diagnostics;
  ASSERT_FALSE(b.inconclusive) << b.diagnostics;
  EXPECT_LE(b.bracket_low, a.bracket_high);
  EXPECT_LE(0.5 * (b.bracket_low + b.bracket_high), 0.5 * (a.bracket_low + a.bracket_high));
}
