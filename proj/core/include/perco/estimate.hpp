#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "perco/analysis.hpp"
#include "perco/connectivity.hpp"
#include "perco/events.hpp"
#include "perco/models.hpp"

namespace perco {

enum class StickSampling {
  exact,  // every stick meeting the core box, nothing else
  padded  // Poisson centres in the core expanded by the padding
};

struct ModelConfig {
  ModelKind model = ModelKind::ercm;
  double lambda = 1.0;
  ConnectionFunction connection = ConnectionFunction::indicator(1.0);
  double beta = 2.0;  // Pareto weight exponent (iercm)
  StickLaw sticks;
  StickSampling stick_sampling = StickSampling::exact;
  Box core{-10.0, -10.0, 10.0, 10.0};
  std::optional<double> truncation_radius;
  std::optional<double> padding;
  // Sample at this intensity and thin down to lambda; couples runs at
  // different lambda that share a seed.
  std::optional<double> lambda_ref;
  PairSampler sampler = PairSampler::tree;

  void validate() const;
  Linkage linkage() const { return model == ModelKind::rcm ? Linkage::direct : Linkage::enhanced; }
  RadialProfile profile() const;
  // Resolved values, defaults applied.
  double resolved_truncation() const;
  double resolved_padding() const;
  // Parameters outside the proven regime.
  std::vector<std::string> hypothesis_warnings() const;
};

struct CircuitEvent {
  Annulus annulus;
};
struct LongestEdgeEvent {
  Box box;
  double threshold = 0.0;  // occurs when the longest edge (stick half-length) exceeds it
};
struct LongEdgeAnnulusEvent {
  Annulus annulus;
  double threshold = 0.0;
};
struct CompositeEvent {
  double s = 1.0;
  double rho = 1.0;
};

using EventSpec = std::variant<CrossingSpec, CircuitEvent, ArmSpec, LongestEdgeEvent, LongEdgeAnnulusEvent,
                               CompositeEvent>;

std::string describe(const EventSpec& e);
// Smallest box containing everything the event looks at.
Box event_region(const EventSpec& e);
// Characteristic scale written to the s column.
double event_scale(const EventSpec& e);

// Pruning that keeps the event outcome unchanged: only segments at least
// min_length long that meet must_hit can matter.
struct SampleFilter {
  double min_length = 0.0;
  std::optional<Box> must_hit;
};
std::optional<SampleFilter> event_filter(const EventSpec& e);

// One realization for trial stream rng. Substreams: 0 points, 1 weights,
// 2 edges or sticks, 3 thinning marks.
Realization sample_realization(const ModelConfig& config, const RngStream& rng,
                               const std::optional<SampleFilter>& filter = std::nullopt);
// Realization at config.lambda_ref, with per-point thinning marks in [0,1).
struct MasterSample {
  Realization realization;
  std::vector<double> marks;
  double lambda_ref = 0.0;

  Realization thinned(double lambda) const;
};
MasterSample sample_master(const ModelConfig& config, double lambda_ref, const RngStream& rng,
                           const std::optional<SampleFilter>& filter = std::nullopt);

bool event_occurs(const Realization& r, const EventSpec& e, Linkage linkage);
EventOutcome evaluate_event(const Realization& r, const EventSpec& e, Linkage linkage);

// Thread count from PERCO_THREADS, else hardware concurrency.
unsigned default_thread_count();

// Runs body(k) for k in [first, last) on up to `threads` workers.
void parallel_for(std::uint64_t first, std::uint64_t last, unsigned threads,
                  const std::function<void(std::uint64_t)>& body);

struct EstimateResult {
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  std::uint64_t master_seed = 0;
  double wall_seconds = 0.0;
  std::vector<char> hit;  // per trial, kept when requested
};
EstimateResult make_estimate(std::uint64_t hits, std::uint64_t trials, std::uint64_t seed);

struct EstimateOptions {
  unsigned threads = 0;  // 0: default_thread_count()
  std::uint64_t first_trial = 0;
  bool keep_hits = false;
};

// Throws RegionError when the event region is not inside config.core.
void check_event_region(const ModelConfig& config, const EventSpec& e);

EstimateResult estimate_event_probability(const ModelConfig& config, const EventSpec& e,
                                          std::uint64_t trials, std::uint64_t master_seed,
                                          const EstimateOptions& opt = {});

struct LadderResult {
  std::vector<double> lambdas;
  std::vector<EstimateResult> estimates;  // one per lambda, with per-trial hits
  std::uint64_t monotonicity_violations = 0;
};
// One master realization per trial at max(lambdas), thinned to each level.
LadderResult coupled_lambda_ladder(const ModelConfig& config, const EventSpec& e,
                                   const std::vector<double>& lambdas, std::uint64_t trials,
                                   std::uint64_t master_seed, const EstimateOptions& opt = {});

struct ProxyRow {
  double n = 0.0;
  EstimateResult estimate;
};
// P(B_u <-> boundary of B_n) for each n, on shared realizations.
std::vector<ProxyRow> percolation_proxy_ladder(const ModelConfig& config, double u,
                                               const std::vector<double>& n_values, std::uint64_t trials,
                                               std::uint64_t master_seed, const EstimateOptions& opt = {});

struct TailRow {
  double s = 0.0;
  double threshold = 0.0;
  double truncation_radius = 0.0;
  double padding = 0.0;
  bool censored = false;
  EstimateResult estimate;
};
struct TailScan {
  double t = 1.0;
  double tau = 0.8;
  std::vector<TailRow> rows;
  std::vector<std::string> warnings;
};
// P(longest segment meeting B_{ts} exceeds s^tau), for each s.
TailScan longest_edge_tail_scan(const ModelConfig& config, double t, double tau,
                                const std::vector<double>& s_grid, std::uint64_t trials,
                                std::uint64_t master_seed, const EstimateOptions& opt = {});

struct BisectOptions {
  double tolerance = 0.05;
  std::uint64_t initial_trials = 200;
  std::uint64_t max_trials_per_point = 6400;
  std::uint64_t budget = 200000;  // total trials over the whole search
  unsigned threads = 0;
};
struct BisectStep {
  double lambda = 0.0;
  EstimateResult estimate;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
};
struct CriticalSearchResult {
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  double p_star = 0.5;
  int iterations = 0;
  std::uint64_t trials_used = 0;
  bool inconclusive = false;
  std::string diagnostics;
  std::vector<BisectStep> steps;
};
// Bracket moves only when the Wilson interval at the midpoint excludes
// p_star; otherwise trials double at that point.
CriticalSearchResult bisect_critical_intensity(const ModelConfig& config, const EventSpec& e, double p_star,
                                               double lambda_low, double lambda_high, std::uint64_t master_seed,
                                               const BisectOptions& opt = {});

}  // namespace perco
