#include "perco/estimate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace perco {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

unsigned resolve_threads(unsigned t) { return t == 0 ? default_thread_count() : t; }

// Copy with truncation and padding fixed, so per-trial sampling never
// recomputes them.
ModelConfig resolved(const ModelConfig& config) {
  config.validate();
  ModelConfig c = config;
  if (c.model != ModelKind::sticks) c.truncation_radius = c.resolved_truncation();
  c.padding = c.resolved_padding();
  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void ModelConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ModelError("lambda must be finite and >= 0");
  if (lambda_ref && (!(*lambda_ref >= lambda) || !std::isfinite(*lambda_ref)))
    throw ModelError("lambda_ref must be finite and >= lambda");
  if (truncation_radius && !(*truncation_radius > 0.0)) throw ModelError("truncation_radius must be > 0");
  if (padding && (!(*padding >= 0.0) || !std::isfinite(*padding))) throw ModelError("padding must be finite and >= 0");
  if (model == ModelKind::sticks) {
    sticks.half_length.validate();
    sticks.orientation.validate();
    return;
  }
  connection.validate();
  if (model == ModelKind::iercm) {
    if (!connection.weighted()) throw ModelError("iercm needs an inhomogeneous connection function");
    if (!(beta > 0.0)) throw ModelError("beta must be > 0");
  } else if (connection.weighted()) {
    throw ModelError("inhomogeneous connection function requires model iercm");
  }
}

RadialProfile ModelConfig::profile() const { return RadialProfile::from_connection(connection, beta); }

double ModelConfig::resolved_truncation() const {
  if (truncation_radius) return *truncation_radius;
  if (model == ModelKind::sticks) return INFINITY;
  if (auto r = connection.support_radius()) return *r;
  const double lam = std::max(lambda, lambda_ref.value_or(0.0));
  return default_truncation_radius(profile(), lam, core.area());
}

double ModelConfig::resolved_padding() const {
  if (padding) return *padding;
  if (model == ModelKind::sticks)
    return stick_sampling == StickSampling::exact ? 0.0 : 2.0 * sticks.half_length.quantile(0.999);
  return resolved_truncation();
}

std::vector<std::string> ModelConfig::hypothesis_warnings() const {
  std::vector<std::string> out;
  switch (model) {
    case ModelKind::rcm:
    case ModelKind::ercm:
      if (connection.kind == ConnectionFunction::Kind::power_min && !(connection.c > 4.0))
        out.push_back("connection exponent c=" + fmt(connection.c) + " violates c > 4");
      break;
    case ModelKind::iercm: {
      const double e = std::min(connection.alpha, connection.alpha * beta);
      if (!(e > 4.0)) out.push_back("min(alpha, alpha*beta)=" + fmt(e) + " violates min(alpha, alpha*beta) > 4");
      break;
    }
    case ModelKind::sticks:
      if (sticks.half_length.kind == HalfLengthLaw::Kind::power && !(sticks.half_length.a > 3.0))
        out.push_back("half-length exponent c=" + fmt(sticks.half_length.a) + " violates c > 3");
      if (sticks.orientation.degenerate()) out.push_back("orientation law is degenerate");
      break;
  }
  return out;
}

std::string describe(const EventSpec& e) {
  std::ostringstream os;
  auto box = [&](const Box& b) { os << "[" << b.lo.x << "," << b.lo.y << "," << b.hi.x << "," << b.hi.y << "]"; };
  if (auto* c = std::get_if<CrossingSpec>(&e)) {
    os << "crossing:" << to_string(c->direction) << ":";
    box(c->rect);
  } else if (auto* a = std::get_if<CircuitEvent>(&e)) {
    os << "circuit:";
    box(a->annulus.inner);
    box(a->annulus.outer);
  } else if (auto* arm = std::get_if<ArmSpec>(&e)) {
    os << "arm:";
    box(arm->confinement);
  } else if (auto* l = std::get_if<LongestEdgeEvent>(&e)) {
    os << "longest_edge>" << l->threshold << ":";
    box(l->box);
  } else if (auto* la = std::get_if<LongEdgeAnnulusEvent>(&e)) {
    os << "long_edge_annulus>" << la->threshold << ":";
    box(la->annulus.inner);
    box(la->annulus.outer);
  } else {
    const auto& f = std::get<CompositeEvent>(e);
    os << "composite_f:s=" << f.s << ":rho=" << f.rho;
  }
  return os.str();
}

Box event_region(const EventSpec& e) {
  if (auto* c = std::get_if<CrossingSpec>(&e)) return c->rect;
  if (auto* a = std::get_if<CircuitEvent>(&e)) return a->annulus.outer;
  if (auto* arm = std::get_if<ArmSpec>(&e)) return arm->confinement;
  if (auto* l = std::get_if<LongestEdgeEvent>(&e)) return l->box;
  if (auto* la = std::get_if<LongEdgeAnnulusEvent>(&e)) return la->annulus.outer;
  const auto& f = std::get<CompositeEvent>(e);
  return Box(0.0, 0.0, f.rho * f.s, f.s);
}

double event_scale(const EventSpec& e) {
  if (auto* c = std::get_if<CrossingSpec>(&e)) return std::min(c->rect.width(), c->rect.height());
  if (auto* a = std::get_if<CircuitEvent>(&e)) return 0.5 * a->annulus.inner.width();
  if (auto* arm = std::get_if<ArmSpec>(&e)) return 0.5 * arm->confinement.width();
  if (auto* l = std::get_if<LongestEdgeEvent>(&e)) return 0.5 * l->box.width();
  if (auto* la = std::get_if<LongEdgeAnnulusEvent>(&e)) return 0.5 * la->annulus.inner.width();
  return std::get<CompositeEvent>(e).s;
}

std::optional<SampleFilter> event_filter(const EventSpec& e) {
  if (auto* l = std::get_if<LongestEdgeEvent>(&e)) return SampleFilter{l->threshold, l->box};
  if (auto* la = std::get_if<LongEdgeAnnulusEvent>(&e)) return SampleFilter{la->threshold, la->annulus.outer};
  // Every detector clips to the event region, so edges missing it are never looked at.
  return SampleFilter{0.0, event_region(e)};
}

Realization sample_realization(const ModelConfig& config, const RngStream& rng,
                               const std::optional<SampleFilter>& filter) {
  RngStream point_rng = rng.substream(0);
  RngStream mark_rng = rng.substream(2);
  const double pad = config.resolved_padding();
  if (config.model == ModelKind::sticks) {
    if (config.stick_sampling == StickSampling::exact)
      return sample_sticks_hitting(config.core, config.lambda, config.sticks, mark_rng);
    Realization r = build_sticks(sample_ppp(config.core.expanded(pad), config.lambda, point_rng), config.sticks,
                                 mark_rng);
    r.window = config.core;
    r.padding = pad;
    return r;
  }
  const auto points = sample_ppp(config.core.expanded(pad), config.lambda, point_rng);
  std::vector<double> weights;
  if (config.model == ModelKind::iercm) {
    RngStream weight_rng = rng.substream(1);
    weights.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) weights.push_back(sample_pareto(config.beta, weight_rng));
  }
  RcmOptions opt;
  opt.sampler = config.sampler;
  if (filter) {
    opt.min_length = filter->min_length;
    opt.must_hit = filter->must_hit;
  }
  const double trunc = config.resolved_truncation();
  Realization r = build_rcm(points, config.connection, weights.empty() ? nullptr : &weights,
                            std::isfinite(trunc) ? std::optional<double>(trunc) : std::nullopt, mark_rng, opt);
  r.window = config.core;
  r.padding = pad;
  return r;
}

Realization MasterSample::thinned(double lambda) const {
  if (lambda >= lambda_ref) return realization;
  const double keep_below = lambda_ref > 0.0 ? lambda / lambda_ref : 0.0;
  std::vector<char> keep(marks.size());
  for (std::size_t i = 0; i < marks.size(); ++i) keep[i] = marks[i] <= keep_below;
  return realization.restricted(keep);
}

MasterSample sample_master(const ModelConfig& config, double lambda_ref, const RngStream& rng,
                           const std::optional<SampleFilter>& filter) {
  ModelConfig c = config;
  c.lambda = lambda_ref;
  MasterSample m;
  m.lambda_ref = lambda_ref;
  m.realization = sample_realization(c, rng, filter);
  RngStream thin_rng = rng.substream(3);
  m.marks.resize(m.realization.points.size());
  for (double& u : m.marks) u = thin_rng.uniform();
  return m;
}

EventOutcome evaluate_event(const Realization& r, const EventSpec& e, Linkage linkage) {
  if (auto* c = std::get_if<CrossingSpec>(&e)) return detect_crossing(r, *c, linkage);
  if (auto* a = std::get_if<CircuitEvent>(&e)) return detect_circuit(r, a->annulus, linkage);
  if (auto* arm = std::get_if<ArmSpec>(&e)) return detect_arm(r, *arm, linkage);
  if (auto* f = std::get_if<CompositeEvent>(&e)) return detect_composite_f(r, f->s, f->rho, linkage);
  EventOutcome out;
  out.occurred = event_occurs(r, e, linkage);
  return out;
}

bool event_occurs(const Realization& r, const EventSpec& e, Linkage linkage) {
  if (auto* l = std::get_if<LongestEdgeEvent>(&e)) {
    require_inside(r, l->box);
    return longest_edge_in_box(r, l->box) > l->threshold;
  }
  if (auto* la = std::get_if<LongEdgeAnnulusEvent>(&e)) {
    require_inside(r, la->annulus.outer);
    return long_edge_in_annulus(r, la->annulus, la->threshold);
  }
  return evaluate_event(r, e, linkage).occurred;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("PERCO_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::uint64_t first, std::uint64_t last, unsigned threads,
                  const std::function<void(std::uint64_t)>& body) {
  if (last <= first) return;
  const std::uint64_t count = last - first;
  const unsigned workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), count));
  if (workers == 1) {
    for (std::uint64_t k = first; k < last; ++k) body(k);
    return;
  }
  std::atomic<std::uint64_t> next{first};
  std::mutex mu;
  std::exception_ptr error;
  std::uint64_t error_index = UINT64_MAX;
  auto work = [&] {
    for (;;) {
      const std::uint64_t k = next.fetch_add(1);
      if (k >= last) return;
      try {
        body(k);
      } catch (...) {
        std::lock_guard lock(mu);
        // Report the failure of the lowest index so errors do not depend on scheduling.
        if (k < error_index) {
          error_index = k;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

EstimateResult make_estimate(std::uint64_t hits, std::uint64_t trials, std::uint64_t seed) {
  EstimateResult r;
  r.trials = trials;
  r.hits = hits;
  r.master_seed = seed;
  r.p_hat = trials ? static_cast<double>(hits) / static_cast<double>(trials) : 0.0;
  const WilsonInterval w = wilson_interval(hits, trials);
  r.ci_low = w.low;
  r.ci_high = w.high;
  return r;
}

void check_event_region(const ModelConfig& config, const EventSpec& e) {
  if (!config.core.contains(event_region(e)))
    throw RegionError("event region of " + describe(e) + " is not inside the core window");
}

EstimateResult estimate_event_probability(const ModelConfig& config, const EventSpec& e, std::uint64_t trials,
                                          std::uint64_t master_seed, const EstimateOptions& opt) {
  check_event_region(config, e);
  if (auto* arm = std::get_if<ArmSpec>(&e)) arm->validate();
  const ModelConfig c = resolved(config);
  const auto filter = event_filter(e);
  const Linkage linkage = c.linkage();
  const auto t0 = Clock::now();
  std::vector<char> hit(trials, 0);
  parallel_for(0, trials, resolve_threads(opt.threads), [&](std::uint64_t k) {
    const RngStream rng(master_seed, opt.first_trial + k);
    if (c.lambda_ref) {
      const MasterSample m = sample_master(c, *c.lambda_ref, rng, filter);
      hit[k] = event_occurs(m.thinned(c.lambda), e, linkage);
    } else {
      hit[k] = event_occurs(sample_realization(c, rng, filter), e, linkage);
    }
  });
  const auto hits = static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
  EstimateResult r = make_estimate(hits, trials, master_seed);
  r.wall_seconds = seconds_since(t0);
  if (opt.keep_hits) r.hit = std::move(hit);
  return r;
}

LadderResult coupled_lambda_ladder(const ModelConfig& config, const EventSpec& e, const std::vector<double>& lambdas,
                                   std::uint64_t trials, std::uint64_t master_seed, const EstimateOptions& opt) {
  if (lambdas.empty()) throw ModelError("lambda ladder is empty");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ModelError("ladder intensities must be finite and >= 0");
  check_event_region(config, e);
  ModelConfig c = config;
  const double top = std::max(*std::max_element(lambdas.begin(), lambdas.end()), config.lambda_ref.value_or(0.0));
  c.lambda = top;
  c.lambda_ref = top;
  c = resolved(c);
  const auto filter = event_filter(e);
  const Linkage linkage = c.linkage();
  const std::size_t levels = lambdas.size();
  std::vector<std::vector<char>> hit(levels, std::vector<char>(trials, 0));
  const auto t0 = Clock::now();
  parallel_for(0, trials, resolve_threads(opt.threads), [&](std::uint64_t k) {
    const MasterSample m = sample_master(c, top, RngStream(master_seed, opt.first_trial + k), filter);
    for (std::size_t l = 0; l < levels; ++l) hit[l][k] = event_occurs(m.thinned(lambdas[l]), e, linkage);
  });
  const double elapsed = seconds_since(t0);
  LadderResult out;
  out.lambdas = lambdas;
  for (std::size_t l = 0; l < levels; ++l) {
    const auto hits = static_cast<std::uint64_t>(std::count(hit[l].begin(), hit[l].end(), 1));
    EstimateResult r = make_estimate(hits, trials, master_seed);
    r.wall_seconds = elapsed / static_cast<double>(levels);
    r.hit = std::move(hit[l]);
    out.estimates.push_back(std::move(r));
  }
  std::vector<std::size_t> order(levels);
  for (std::size_t l = 0; l < levels; ++l) order[l] = l;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lambdas[a] < lambdas[b]; });
  for (std::uint64_t k = 0; k < trials; ++k)
    for (std::size_t l = 1; l < levels; ++l)
      if (out.estimates[order[l - 1]].hit[k] && !out.estimates[order[l]].hit[k]) ++out.monotonicity_violations;
  return out;
}

std::vector<ProxyRow> percolation_proxy_ladder(const ModelConfig& config, double u, const std::vector<double>& n_values,
                                               std::uint64_t trials, std::uint64_t master_seed,
                                               const EstimateOptions& opt) {
  if (n_values.empty()) throw ModelError("proxy ladder needs at least one scale");
  if (!(u > 0.0)) throw ModelError("inner box half-size u must be > 0");
  std::vector<ArmSpec> arms;
  for (double n : n_values) {
    if (!(n > u)) throw ModelError("every scale n must exceed u");
    ArmSpec a{Box::centered(u), BoxBoundary{Box::centered(n)}, Box::centered(n)};
    check_event_region(config, a);
    arms.push_back(a);
  }
  const ModelConfig c = resolved(config);
  const Linkage linkage = c.linkage();
  const SampleFilter filter{0.0, Box::centered(*std::max_element(n_values.begin(), n_values.end()))};
  std::vector<std::vector<char>> hit(arms.size(), std::vector<char>(trials, 0));
  const auto t0 = Clock::now();
  parallel_for(0, trials, resolve_threads(opt.threads), [&](std::uint64_t k) {
    const Realization r = sample_realization(c, RngStream(master_seed, opt.first_trial + k), filter);
    for (std::size_t l = 0; l < arms.size(); ++l) hit[l][k] = detect_arm(r, arms[l], linkage).occurred;
  });
  const double elapsed = seconds_since(t0);
  std::vector<ProxyRow> out;
  for (std::size_t l = 0; l < arms.size(); ++l) {
    const auto hits = static_cast<std::uint64_t>(std::count(hit[l].begin(), hit[l].end(), 1));
    ProxyRow row{n_values[l], make_estimate(hits, trials, master_seed)};
    row.estimate.wall_seconds = elapsed / static_cast<double>(arms.size());
    if (opt.keep_hits) row.estimate.hit = std::move(hit[l]);
    out.push_back(std::move(row));
  }
  return out;
}

TailScan longest_edge_tail_scan(const ModelConfig& config, double t, double tau, const std::vector<double>& s_grid,
                                std::uint64_t trials, std::uint64_t master_seed, const EstimateOptions& opt) {
  if (!(t > 0.0)) throw ModelError("t must be > 0");
  if (!(tau > 0.0)) throw ModelError("tau must be > 0");
  TailScan scan;
  scan.t = t;
  scan.tau = tau;
  scan.warnings = config.hypothesis_warnings();
  std::optional<double> tail;
  std::string tail_name;
  if (config.model == ModelKind::sticks) {
    if (config.sticks.half_length.kind == HalfLengthLaw::Kind::power) {
      tail = config.sticks.half_length.a - 1.0;
      tail_name = "2/(c-1)";
    }
  } else if (const auto e = config.profile().tail_exponent()) {
    tail = *e - 2.0;
    tail_name = config.model == ModelKind::iercm ? "2/(min(alpha,alpha*beta)-2)" : "2/(c-2)";
  }
  if (tail) {
    if (!(*tail > 0.0)) scan.warnings.push_back("tail too heavy: no tau satisfies tau > " + tail_name);
    else if (!(tau > 2.0 / *tail))
      scan.warnings.push_back("tau=" + fmt(tau) + " violates tau > " + tail_name + "=" + fmt(2.0 / *tail));
  }
  for (double s : s_grid) {
    if (!(s > 0.0)) throw ModelError("scan scales must be > 0");
    ModelConfig c = config;
    c.core = Box::centered(t * s);
    c = resolved(c);
    TailRow row;
    row.s = s;
    row.threshold = std::pow(s, tau);
    row.truncation_radius = c.resolved_truncation();
    row.padding = c.resolved_padding();
    if (c.model == ModelKind::sticks)
      row.censored = c.stick_sampling == StickSampling::padded && row.threshold >= row.padding;
    else
      row.censored = row.threshold >= row.truncation_radius;
    row.estimate = estimate_event_probability(c, LongestEdgeEvent{c.core, row.threshold}, trials, master_seed, opt);
    scan.rows.push_back(std::move(row));
  }
  return scan;
}

CriticalSearchResult bisect_critical_intensity(const ModelConfig& config, const EventSpec& e, double p_star,
                                               double lambda_low, double lambda_high, std::uint64_t master_seed,
                                               const BisectOptions& opt) {
  if (!(p_star > 0.0 && p_star < 1.0)) throw ModelError("p_star must lie in (0,1)");
  if (!(lambda_low >= 0.0 && lambda_low < lambda_high)) throw ModelError("bracket must satisfy 0 <= low < high");
  if (opt.initial_trials == 0) throw ModelError("initial_trials must be > 0");
  check_event_region(config, e);
  ModelConfig c = config;
  c.lambda = lambda_high;
  c.lambda_ref = std::max(lambda_high, config.lambda_ref.value_or(0.0));
  c = resolved(c);

  CriticalSearchResult out;
  out.p_star = p_star;
  out.bracket_low = lambda_low;
  out.bracket_high = lambda_high;

  // Estimate at lam, doubling trials until the interval excludes p_star.
  auto measure = [&](double lam, bool& decided) {
    ModelConfig at = c;
    at.lambda = lam;
    EstimateOptions eo;
    eo.threads = opt.threads;
    std::uint64_t n = std::min(opt.initial_trials, opt.max_trials_per_point);
    EstimateResult acc = make_estimate(0, 0, master_seed);
    std::uint64_t done = 0;
    decided = false;
    for (;;) {
      if (out.trials_used + (n - done) > opt.budget) break;
      eo.first_trial = done;
      const EstimateResult more = estimate_event_probability(at, e, n - done, master_seed, eo);
      out.trials_used += n - done;
      const double secs = acc.wall_seconds + more.wall_seconds;
      acc = make_estimate(acc.hits + more.hits, n, master_seed);
      acc.wall_seconds = secs;
      done = n;
      if (acc.ci_high < p_star || acc.ci_low > p_star) {
        decided = true;
        break;
      }
      if (2 * n > opt.max_trials_per_point) break;
      n *= 2;
    }
    return acc;
  };
  auto record = [&](double lam, const EstimateResult& r) {
    out.steps.push_back({lam, r, out.bracket_low, out.bracket_high});
  };

  bool decided = false;
  const EstimateResult lo = measure(lambda_low, decided);
  record(lambda_low, lo);
  if (!decided || !(lo.ci_high < p_star)) {
    out.inconclusive = true;
    out.diagnostics = "lower end not separated below p_star: p_hat=" + fmt(lo.p_hat) + " ci=[" + fmt(lo.ci_low) +
                      "," + fmt(lo.ci_high) + "]";
    return out;
  }
  const EstimateResult hi = measure(lambda_high, decided);
  record(lambda_high, hi);
  if (!decided || !(hi.ci_low > p_star)) {
    out.inconclusive = true;
    out.diagnostics = "upper end not separated above p_star: p_hat=" + fmt(hi.p_hat) + " ci=[" + fmt(hi.ci_low) +
                      "," + fmt(hi.ci_high) + "]";
    return out;
  }
  while (out.bracket_high - out.bracket_low > opt.tolerance) {
    const double mid = 0.5 * (out.bracket_low + out.bracket_high);
    const EstimateResult m = measure(mid, decided);
    ++out.iterations;
    if (!decided) {
      record(mid, m);
      out.inconclusive = true;
      out.diagnostics = "midpoint " + fmt(mid) + " not separated from p_star after " + fmt(double(m.trials)) +
                        " trials: ci=[" + fmt(m.ci_low) + "," + fmt(m.ci_high) + "]";
      return out;
    }
    (m.ci_high < p_star ? out.bracket_low : out.bracket_high) = mid;
    record(mid, m);
  }
  return out;
}

}  // namespace perco
