// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: perco_acceptance [criterion ids...]
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "circuit_fixtures.hpp"
#include "oracles.hpp"
#include "perco/analysis.hpp"
#include "perco/connectivity.hpp"
#include "perco/estimate.hpp"
#include "perco/events.hpp"
#include "perco/experiment.hpp"

using namespace perco;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string ci(const EstimateResult& r) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4f [%.4f,%.4f]", r.p_hat, r.ci_low, r.ci_high);
  return buf;
}

bool same_partition(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::uint32_t, std::uint32_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, fx] = ab.emplace(a[i], b[i]);
    auto [y, fy] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

// 1 -----------------------------------------------------------------------
Verdict oracle_equivalence() {
  std::mt19937_64 gen(1001);
  const Box rect(2, 3, 10, 8), conf(1, 1, 11, 11), src(5, 5, 7, 7), tgt(9, 2, 10.5, 4);
  const auto irect = oracle::to_lattice(rect), iconf = oracle::to_lattice(conf);
  const auto isrc = oracle::to_lattice(src), itgt = oracle::to_lattice(tgt);
  std::uniform_int_distribution<std::size_t> edges(1, 500);
  std::size_t mismatches = 0, checks = 0, positives = 0, max_n = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = edges(gen);
    const auto f = oracle::random_fixture(gen, 12.0, std::max<std::size_t>(4, m * 3 / 4), m);
    max_n = std::max(max_n, f.edges.size());
    const auto r = f.realization(Box(0, 0, 12, 12));
    mismatches += !same_partition(enhanced_components(r), oracle::components(f, true));
    mismatches += !same_partition(direct_components(r), oracle::components(f, false));
    checks += 2;
    for (bool enhanced : {true, false}) {
      const auto link = enhanced ? Linkage::enhanced : Linkage::direct;
      for (auto dir : {Direction::left_right, Direction::top_down}) {
        const bool want = oracle::crossing(f, irect, dir, enhanced);
        mismatches += detect_crossing(r, {rect, dir}, link).occurred != want;
        positives += want;
        ++checks;
      }
      const bool b1 = oracle::arm(f, isrc, iconf, true, iconf, enhanced);
      const bool b2 = oracle::arm(f, isrc, iconf, false, itgt, enhanced);
      mismatches += detect_arm(r, {src, BoxBoundary{conf}, conf}, link).occurred != b1;
      mismatches += detect_arm(r, {src, tgt, conf}, link).occurred != b2;
      positives += b1 + b2;
      checks += 2;
    }
  }
  return {mismatches == 0 && max_n <= 500,
          std::to_string(mismatches) + " discrepancies in " + std::to_string(checks) + " checks (" +
              std::to_string(positives) + " positive events, max " + std::to_string(max_n) + " segments)"};
}

// 2 -----------------------------------------------------------------------
Verdict circuit_correctness() {
  std::size_t mismatches = 0, positives = 0;
  const auto hand = oracle::hand_circuit_fixtures();
  for (const auto& c : hand) {
    const double delta = std::min(0.02, oracle::min_feature_separation(c.segments, c.annulus) / 4.0);
    const bool flood = oracle::circuit_by_flood_fill(c.segments, c.annulus, delta);
    const auto r = oracle::realization_from_segments(c.segments, c.annulus.outer);
    const bool got = detect_circuit(r, c.annulus).occurred;
    mismatches += (got != flood) + (got != c.expected);
  }
  std::mt19937_64 gen(2002);
  const auto ann = oracle::fixture_annulus();
  const double delta = 0.02;
  int tested = 0;
  while (tested < 500) {
    const auto s = oracle::random_ring_instance(gen, ann);
    if (oracle::min_feature_separation(s, ann) <= 3 * delta) continue;
    ++tested;
    const bool want = oracle::circuit_by_flood_fill(s, ann, delta);
    positives += want;
    mismatches += detect_circuit(oracle::realization_from_segments(s, ann.outer), ann).occurred != want;
  }
  return {mismatches == 0 && hand.size() >= 20,
          std::to_string(mismatches) + " discrepancies over " + std::to_string(hand.size()) + " hand fixtures and " +
              std::to_string(tested) + " random instances (" + std::to_string(positives) + " with a circuit)"};
}

// 3 -----------------------------------------------------------------------
Verdict enhancement_dominance() {
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.connection = ConnectionFunction::power_min(5.0);
  c.core = Box::centered(6.0);
  c.truncation_radius = 8.0;
  c.padding = 8.0;
  const ArmSpec arm{Box::centered(1.0), BoxBoundary{Box::centered(6.0)}, Box::centered(6.0)};
  std::size_t component_violations = 0, arm_violations = 0, strict = 0;
  std::string hits;
  for (double lam : {0.3, 0.4, 0.5, 0.6, 0.8}) {
    c.lambda = lam;
    std::size_t hd = 0, he = 0;
    for (std::uint64_t t = 0; t < 500; ++t) {
      const auto r = sample_realization(c, RngStream(3003, t));
      const auto d = direct_components(r), e = enhanced_components(r);
      for (std::size_t i = 0; i < d.size(); ++i) component_violations += e[i] != e[d[i]];
      const bool a = detect_arm(r, arm, Linkage::direct).occurred;
      const bool b = detect_arm(r, arm, Linkage::enhanced).occurred;
      arm_violations += a && !b;
      strict += b && !a;
      hd += a;
      he += b;
    }
    hits += " " + fmt("%g", lam) + ":" + std::to_string(hd) + "/" + std::to_string(he);
  }
  return {component_violations == 0 && arm_violations == 0,
          std::to_string(component_violations) + " component and " + std::to_string(arm_violations) +
              " arm violations; arm hits rcm/ercm by lambda" + hits + "; " + std::to_string(strict) +
              " trials where only ercm reaches"};
}

// 4 -----------------------------------------------------------------------
Verdict longest_edge_tail() {
  struct Case {
    const char* name;
    ModelConfig config;
  };
  std::vector<Case> cases(3);
  cases[0].name = "ercm g=min(1,r^-5)";
  cases[0].config.model = ModelKind::ercm;
  cases[0].config.connection = ConnectionFunction::power_min(5.0);
  cases[1].name = "iercm eta=0.25 alpha=5 beta=2";
  cases[1].config.model = ModelKind::iercm;
  cases[1].config.connection = ConnectionFunction::inhomogeneous(0.25, 5.0);
  cases[1].config.beta = 2.0;
  cases[2].name = "sticks c=4 l0=1";
  cases[2].config.model = ModelKind::sticks;
  cases[2].config.sticks = {HalfLengthLaw::power(4.0, 1.0), OrientationLaw::uniform()};
  bool ok = true;
  std::string detail;
  for (auto& cs : cases) {
    cs.config.lambda = 1.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto scan = longest_edge_tail_scan(cs.config, 1.0, 0.8, {10.0, 20.0, 40.0}, 2000, 4004);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& r = scan.rows;
    const bool dec = r[0].estimate.p_hat >= r[1].estimate.p_hat && r[1].estimate.p_hat >= r[2].estimate.p_hat;
    const bool sep = r[2].estimate.ci_high < r[0].estimate.ci_low;
    const bool uncensored = !r[0].censored && !r[1].censored && !r[2].censored;
    const bool fast = secs < 900.0;
    ok = ok && dec && sep && uncensored && fast;
    detail += std::string(detail.empty() ? "" : "; ") + cs.name + ": s=10 " + ci(r[0].estimate) + " s=20 " +
              ci(r[1].estimate) + " s=40 " + ci(r[2].estimate) + fmt(" (%.0f s)", secs);
  }
  return {ok, detail};
}

// 5 -----------------------------------------------------------------------
Verdict block_arithmetic() {
  const auto g = RadialProfile::exponential(1.0);
  const double want[3] = {2 * kPi, 16 * kPi, 192 * kPi};
  double worst = 0.0;
  for (int m = 0; m < 3; ++m) worst = std::max(worst, std::abs(block_contribution(m, g) / want[m] - 1.0));
  std::size_t count_mismatch = 0;
  for (int n = 1; n <= 12; ++n) {
    // Every subset of the n-1 interior cut points, grouped by size.
    std::vector<std::uint64_t> by_k(n, 0), odd_by_k(n, 0);
    for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
      const int k = std::popcount(mask);
      ++by_k[k];
      bool odd = true;
      int last = 0;
      for (int cut = 1; cut <= n; ++cut) {
        if (cut == n || (mask >> (cut - 1)) & 1u) {
          odd = odd && (cut - last) % 2 == 1;
          last = cut;
        }
      }
      odd_by_k[k] += odd;
    }
    const auto e = enumerate_block_structures(n);
    for (int k = 0; k < n; ++k) {
      count_mismatch += block_structures_count(n, k) != by_k[k];
      count_mismatch += e.compositions_by_k.at(k) != by_k[k];
      count_mismatch += e.even_blocks_by_k.at(k) != odd_by_k[k];
    }
  }
  const double C = block_growth_constant(g);
  const double lambda = 0.5 / C;
  const double root = std::pow(theta_upper_bound(lambda, 12, g).value, 1.0 / 12);
  const double rel = std::abs(root / (C * lambda) - 1.0);
  return {worst <= 1e-9 && count_mismatch == 0 && rel <= 0.02,
          "block contribution max rel error " + fmt("%.2e", worst) + ", " + std::to_string(count_mismatch) +
              " count mismatches for n<=12, n-th root at n=12 off C lambda by " + fmt("%.3f%%", 100 * rel)};
}

// 6 -----------------------------------------------------------------------
Verdict region_integral() {
  RngStream rng(6006, 0);
  const auto r = size4_region_integral_check(RadialProfile::exponential(1.0), 1.0, 1000000, rng);
  const double z = std::abs(r.mc_value - 4.0) / r.mc_sigma;
  return {z <= 3.0 && std::abs(r.analytic_value - 4.0) < 1e-9,
          "MC " + fmt("%.5f", r.mc_value) + " sigma " + fmt("%.5f", r.mc_sigma) + " analytic " +
              fmt("%.6f", r.analytic_value) + ", |z| " + fmt("%.2f", z)};
}

// 7 -----------------------------------------------------------------------
Verdict deijfen_and_density() {
  RngStream rng(7007, 0);
  int below = 0, points = 0;
  double tightest = INFINITY;
  for (double t : {0.5, 1.0, 10.0, 1e3, 1e6})
    for (double beta : {1.0, 2.0, 3.0, 4.0}) {
      const int n = 200000;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const double w = sample_pareto(beta, rng) * sample_pareto(beta, rng) / t;
        acc += std::min(w * w, 1.0);
      }
      const double mc = std::sqrt(acc / n);
      const double bound = deijfen_bound(t, beta);
      below += mc <= bound;
      ++points;
      tightest = std::min(tightest, bound - mc);
    }
  const double beta = 2.0;
  const std::size_t n = 1000000;
  std::vector<double> w(n);
  for (auto& x : w) x = sample_pareto(beta, rng) * sample_pareto(beta, rng);
  std::sort(w.begin(), w.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = product_weight_cdf(w[i], beta);
    ks = std::max({ks, std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)});
  }
  // The CDF must agree with the integral of the density.
  const auto f = [beta](double x) { return product_weight_density(x, beta); };
  double cdf_err = 0.0;
  for (double x : {1.5, 3.0, 10.0, 100.0}) {
    const double integral = integrate(f, 1.0, x, {1e-12, 1e-13}).value;
    cdf_err = std::max(cdf_err, std::abs(integral - product_weight_cdf(x, beta)));
  }
  return {below == points && ks < 0.002 && cdf_err < 1e-8,
          std::to_string(below) + "/" + std::to_string(points) + " grid points under the bound (min margin " +
              fmt("%.2e", tightest) + "), KS " + fmt("%.5f", ks) + " at 1e6 samples, CDF vs integral " +
              fmt("%.1e", cdf_err)};
}

// 8 -----------------------------------------------------------------------
Verdict connection_decay() {
  std::vector<double> grid;
  for (int k = 0; k <= 20; ++k) grid.push_back(10.0 * std::pow(10.0, k / 20.0));
  bool ok = true;
  std::string detail;
  for (auto [alpha, beta] : {std::pair{5.0, 2.0}, {5.0, 0.9}, {3.0, 4.0}}) {
    const auto t = expected_connection_vs_distance(1.0, alpha, beta, grid);
    const double want = std::min(alpha, alpha * beta);
    const double rel = std::abs(t.fitted_exponent - want) / want;
    ok = ok && rel <= 0.05;
    detail += std::string(detail.empty() ? "" : "; ") + "(" + fmt("%g", alpha) + "," + fmt("%g", beta) +
              ") exponent " + fmt("%.3f", t.fitted_exponent) + " vs " + fmt("%g", want) + " (" +
              fmt("%.2f%%", 100 * rel) + ", OLS slope " + fmt("%.3f", t.ols_slope) + ")";
  }
  return {ok, detail};
}

// 9 -----------------------------------------------------------------------
Verdict rsw_probe() {
  bool ok = true;
  std::string detail;
  for (double s : {8.0, 12.0, 16.0}) {
    ModelConfig c;
    c.model = ModelKind::ercm;
    c.connection = ConnectionFunction::indicator(1.0);
    c.core = Box(0.0, 0.0, 2.0 * s, s);
    const CrossingSpec square{Box(0.0, 0.0, s, s)};
    const CrossingSpec wide{Box(0.0, 0.0, 2.0 * s, s)};
    // Coarse scan for an intensity with square crossings in [0.6, 0.9].
    double lambda = 0.0, best = INFINITY;
    for (double lam = 1.40; lam <= 1.801; lam += 0.02) {
      c.lambda = lam;
      const double p = estimate_event_probability(c, square, 300, 9009).p_hat;
      if (std::abs(p - 0.75) < best) {
        best = std::abs(p - 0.75);
        lambda = lam;
      }
    }
    c.lambda = lambda;
    const auto one = estimate_event_probability(c, square, 2000, 9010);
    const auto two = estimate_event_probability(c, wide, 2000, 9011);
    const bool in_range = one.p_hat >= 0.6 && one.p_hat <= 0.9;
    ok = ok && in_range && two.ci_low > 0.02;
    detail += std::string(detail.empty() ? "" : "; ") + "s=" + fmt("%g", s) + " lambda " + fmt("%.2f", lambda) +
              " C(1) " + ci(one) + " C(2) " + ci(two);
  }
  return {ok, detail};
}

// 10 ----------------------------------------------------------------------
std::string strip_seconds(const std::string& path) {
  std::ifstream in(path);
  const auto rows = read_csv(in);
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i + 1 < row.size(); ++i) out += row[i] + ",";
    out += "\n";
  }
  return out;
}

Verdict determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "perco_acceptance_10";
  std::filesystem::create_directories(dir);
  nlohmann::json doc = nlohmann::json::parse(R"({
    "version": 1, "seed": 1010,
    "model": {"kind": "ercm", "lambda": 1.5, "connection": {"kind": "indicator", "r0": 1.0},
              "core": {"half_size": 6}},
    "jobs": [
      {"name": "cross", "trials": 400, "event": {"kind": "crossing", "rect": [-5, -5, 5, 5]}},
      {"name": "arm", "trials": 400, "event": {"kind": "arm", "source": {"half_size": 1},
        "target": {"boundary": {"half_size": 5}}, "confinement": {"half_size": 5}}},
      {"name": "ladder", "trials": 300, "lambdas": [1.2, 1.35, 1.5, 1.65, 1.8],
       "event": {"kind": "circuit", "inner": 1.5, "outer": 5}}
    ]})");
  std::ostringstream log;
  std::string outputs[2];
  for (int k = 0; k < 2; ++k) {
    Overrides ov;
    ov.threads = k == 0 ? 1u : 8u;
    ov.out = (dir / ("run" + std::to_string(k) + ".csv")).string();
    run_experiment(parse_experiment(doc, ov), log);
    outputs[k] = strip_seconds(*ov.out);
  }
  const bool same = outputs[0] == outputs[1] && !outputs[0].empty();

  ModelConfig c;
  c.model = ModelKind::ercm;
  c.connection = ConnectionFunction::indicator(1.0);
  c.core = Box::centered(6.0);
  const std::vector<double> lambdas{1.2, 1.35, 1.5, 1.65, 1.8};
  const auto ladder =
      coupled_lambda_ladder(c, CrossingSpec{Box::centered(5.0)}, lambdas, 1000, 1011, {0, 0, true});
  std::size_t violations = ladder.monotonicity_violations;
  for (std::size_t i = 1; i < ladder.estimates.size(); ++i)
    for (std::size_t t = 0; t < 1000; ++t) violations += ladder.estimates[i].hit[t] < ladder.estimates[i - 1].hit[t];
  bool nondecreasing = true;
  std::string ps;
  for (std::size_t i = 0; i < ladder.estimates.size(); ++i) {
    ps += fmt(" %.3f", ladder.estimates[i].p_hat);
    if (i > 0) nondecreasing = nondecreasing && ladder.estimates[i].p_hat >= ladder.estimates[i - 1].p_hat;
  }
  std::filesystem::remove_all(dir);
  return {same && violations == 0 && nondecreasing,
          std::string("1 vs 8 workers ") + (same ? "identical" : "DIFFER") + "; ladder p_hat" + ps + ", " +
              std::to_string(violations) + " trialwise violations"};
}

// 11 ----------------------------------------------------------------------
Verdict square_root_trick() {
  const bool units = square_root_trick_bound(1.0, 8) == 1.0 && square_root_trick_bound(0.75, 2) == 0.5 &&
                     square_root_trick_bound(0.0, 3) == 0.0 && square_root_trick_bound(0.36, 1) == 0.36;
  // Arms from B_1 to the eight half sides of B_6.
  const double h = 6.0;
  const Box box = Box::centered(h);
  const std::vector<Segment> halves{{{h, 0}, {h, h}},   {{0, h}, {h, h}},   {{-h, 0}, {-h, h}}, {{-h, h}, {0, h}},
                                    {{-h, -h}, {-h, 0}}, {{-h, -h}, {0, -h}}, {{0, -h}, {h, -h}}, {{h, -h}, {h, 0}}};
  ModelConfig c;
  c.model = ModelKind::ercm;
  c.connection = ConnectionFunction::indicator(1.0);
  c.core = Box::centered(7.0);
  const std::uint64_t trials = 1000;
  bool ok = units;
  std::size_t union_mismatch = 0;
  std::string detail = units ? "unit values exact" : "unit values WRONG";
  for (double lam : {1.2, 1.4, 1.6, 1.8}) {
    c.lambda = lam;
    std::vector<std::uint64_t> hits(8, 0);
    std::uint64_t any = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      const auto r = sample_realization(c, RngStream(1111, t));
      bool some = false;
      for (std::size_t i = 0; i < 8; ++i) {
        const bool hit = detect_arm(r, {Box::centered(1.0), halves[i], box}, Linkage::enhanced).occurred;
        hits[i] += hit;
        some = some || hit;
      }
      const bool u = detect_arm(r, {Box::centered(1.0), BoxBoundary{box}, box}, Linkage::enhanced).occurred;
      union_mismatch += u != some;
      any += u;
    }
    const double p_union = double(any) / trials;
    const double bound = square_root_trick_bound(p_union, 8);
    const auto best = std::max_element(hits.begin(), hits.end());
    const auto w = wilson_interval(*best, trials);
    const bool run_ok = w.high >= bound;
    ok = ok && run_ok;
    detail += "; lambda " + fmt("%g", lam) + " union " + fmt("%.3f", p_union) + " bound " + fmt("%.4f", bound) +
              " max interval " + fmt("%.3f", double(*best) / trials) + " (upper CI " + fmt("%.3f", w.high) + ")";
  }
  ok = ok && union_mismatch == 0;
  return {ok, detail + "; union identity mismatches " + std::to_string(union_mismatch)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: none stated
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "oracle equivalence", 120, oracle_equivalence},
      {2, "circuit correctness", 300, circuit_correctness},
      {3, "enhancement dominance", 0, enhancement_dominance},
      {4, "longest-edge tail", 0, longest_edge_tail},  // per-model limit checked inside
      {5, "block-bound arithmetic", 60, block_arithmetic},
      {6, "region-integral identity", 60, region_integral},
      {7, "Deijfen bound and product density", 120, deijfen_and_density},
      {8, "expected-connection decay", 60, connection_decay},
      {9, "RSW probe", 1200, rsw_probe},
      {10, "determinism and monotone coupling", 0, determinism},
      {11, "square-root trick", 0, square_root_trick},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0 && secs > c.limit_seconds) {
      v.pass = false;
      v.detail += "; over the " + fmt("%.0f", c.limit_seconds) + " s limit";
    }
    failures += !v.pass;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", c.id, v.pass ? "PASS" : "FAIL", c.name, v.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
