// perco command line: run, bisect, tailscan, bounds, plotdata.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "perco/experiment.hpp"
#include "perco/io.hpp"

namespace {

struct Common {
  std::string spec_path;
  double lambda = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("spec", spec_path, "experiment spec (YAML or JSON)")->required();
    lambda_opt = sub->add_option("--lambda", lambda, "override model.lambda");
    trials_opt = sub->add_option("--trials", trials, "override the trial count of every job");
    seed_opt = sub->add_option("--seed", seed, "override the master seed");
    threads_opt = sub->add_option("--threads", threads, "worker threads (default: PERCO_THREADS or all cores)")
                      ->check(CLI::PositiveNumber);
    out_opt = sub->add_option("--out", out, "results CSV path; the manifest goes next to it as .json");
  }

  perco::ExperimentSpec load() const {
    perco::Overrides ov;
    if (*lambda_opt) ov.lambda = lambda;
    if (*trials_opt) ov.trials = trials;
    if (*seed_opt) ov.seed = seed;
    if (*threads_opt) ov.threads = threads;
    if (*out_opt) ov.out = out;
    return perco::parse_experiment(perco::load_spec_file(spec_path), ov);
  }
};

void export_trial(const perco::ExperimentSpec& spec, std::uint64_t trial) {
  const auto stem = std::filesystem::path(spec.csv_path).replace_extension("").string();
  for (const auto& job : spec.jobs) {
    if (!job.event) continue;
    perco::check_event_region(spec.config, *job.event);
    const perco::RngStream rng(spec.seed, trial);
    const auto filter = perco::event_filter(*job.event);
    const perco::Realization r =
        spec.config.lambda_ref
            ? perco::sample_master(spec.config, *spec.config.lambda_ref, rng, filter).thinned(spec.config.lambda)
            : perco::sample_realization(spec.config, rng, filter);
    const auto outcome = perco::evaluate_event(r, *job.event, spec.config.linkage());
    const std::string path = stem + "." + job.name + ".trial" + std::to_string(trial) + ".json";
    std::ofstream(path) << perco::witness_to_json(r, outcome, perco::describe(*job.event)).dump() << "\n";
    std::cerr << "wrote " << path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar continuum percolation experiments"};
  app.require_subcommand(1);
  Common run_c, bisect_c, tail_c, bounds_c;
  auto* run = app.add_subcommand("run", "estimate event probabilities for every job in a spec");
  run_c.attach(run);
  std::uint64_t export_k = 0;
  auto* export_opt = run->add_option("--export-trial", export_k, "also write realization + witness JSON for this trial");
  auto* bisect = app.add_subcommand("bisect", "bracket the pseudo-critical intensity of a crossing event");
  bisect_c.attach(bisect);
  auto* tail = app.add_subcommand("tailscan", "longest-edge tail probabilities over a scale grid");
  tail_c.attach(tail);
  auto* bounds = app.add_subcommand("bounds", "block-structure bound series and moment integrals");
  bounds_c.attach(bounds);
  auto* plot = app.add_subcommand("plotdata", "reshape a results CSV into a tidy series for plotting");
  std::string results_path, kind, plot_out;
  plot->add_option("results", results_path, "results CSV")->required();
  plot->add_option("--kind", kind, "crossing_vs_lambda | tail_vs_s | bound_vs_n")->required();
  plot->add_option("--out", plot_out, "output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return perco::kExitUsage;
  }

  try {
    if (*plot) {
      std::ifstream in(results_path, std::ios::binary);
      if (!in) throw perco::SpecError(perco::kExitUsage, "", "cannot read results file '" + results_path + "'");
      const auto k = perco::plot_kind_from_string(kind);
      if (plot_out.empty()) {
        perco::emit_plot_data(in, k, std::cout);
      } else {
        std::ostringstream buf;
        perco::emit_plot_data(in, k, buf);
        std::ofstream(plot_out, std::ios::binary) << buf.str();
      }
      return perco::kExitOk;
    }
    perco::RunSummary summary;
    if (*run) {
      const auto spec = run_c.load();
      summary = perco::run_experiment(spec, std::cerr);
      if (*export_opt) export_trial(spec, export_k);
    } else if (*bisect) {
      summary = perco::run_bisect(bisect_c.load(), std::cerr);
    } else if (*tail) {
      summary = perco::run_tailscan(tail_c.load(), std::cerr);
    } else {
      summary = perco::run_bounds(bounds_c.load(), std::cerr);
    }
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    std::cerr << summary.rows << " rows written\n";
    return perco::kExitOk;
  } catch (const std::exception& e) {
    const int code = perco::exit_code_for(e);
    std::cerr << "error: " << e.what() << "\n";
    return code;
  }
}
