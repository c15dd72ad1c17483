#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perco/estimate.hpp"

namespace perco {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,       // unparseable spec file or bad command line
  kExitValidation = 3,  // well-formed spec with invalid values
  kExitRegion = 4,      // event region outside the core window
  kExitRuntime = 5,     // a job failed while running
  kExitSchema = 6       // results file does not match the expected columns
};

class SpecError : public std::runtime_error {
 public:
  SpecError(ExitCode code, const std::string& field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), code_(code), field_(field) {}
  ExitCode code() const { return code_; }
  const std::string& field() const { return field_; }

 private:
  ExitCode code_;
  std::string field_;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSpecVersion = 1;
inline constexpr const char* kResultsColumns =
    "job,model,lambda,connection,event,s,trials,hits,p_hat,ci_low,ci_high,seed,seconds";
inline constexpr const char* kBoundsColumns = "n,lambda,bound,assembled,nth_root,c_lambda,structures,enumerated";

struct AnalysisJob {
  std::string kind;  // moments, tail_mass, theta_bound, expected_connection
  nlohmann::json params;
};

struct ProxyJob {
  double u = 1.0;
  std::vector<double> n_values;
};

struct JobSpec {
  std::string name;
  std::optional<EventSpec> event;
  std::optional<AnalysisJob> analysis;
  std::optional<ProxyJob> proxy;
  std::vector<double> lambdas;  // coupled ladder; empty means the model lambda
  std::uint64_t trials = 100;
};

struct ExperimentSpec {
  ModelConfig config;
  std::vector<JobSpec> jobs;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string csv_path = "results.csv";
  std::string manifest_path = "results.json";
  nlohmann::json bisect;    // sections read by the matching subcommands
  nlohmann::json tailscan;
  nlohmann::json bounds;
  std::vector<std::string> warnings;
  nlohmann::json source;  // the parsed document, overrides applied
};

struct Overrides {
  std::optional<double> lambda;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
};

// YAML or JSON text to one JSON tree. Throws SpecError(kExitUsage).
nlohmann::json parse_spec_text(const std::string& text);
nlohmann::json load_spec_file(const std::string& path);

// Throws SpecError(kExitValidation) naming the offending field.
ModelConfig parse_model(const nlohmann::json& j);
EventSpec parse_event(const nlohmann::json& j, const std::string& field = "event");
ExperimentSpec parse_experiment(const nlohmann::json& doc, const Overrides& ov = {});

nlohmann::json to_json(const ModelConfig& c);
std::string model_label(const ModelConfig& c);

// Formatting shared by every CSV writer.
std::string csv_number(double v);
std::string csv_field(const std::string& s);
std::vector<std::vector<std::string>> read_csv(std::istream& in);

// One results row in the frozen column order.
std::string results_row(const std::string& job, const ModelConfig& c, double lambda, const std::string& event,
                        double s, const EstimateResult& r);

struct RunSummary {
  std::size_t rows = 0;
  std::vector<std::string> warnings;
};

// Each writes the CSV (atomically, nothing on failure) and the manifest.
RunSummary run_experiment(const ExperimentSpec& spec, std::ostream& log);
RunSummary run_bisect(const ExperimentSpec& spec, std::ostream& log);
RunSummary run_tailscan(const ExperimentSpec& spec, std::ostream& log);
RunSummary run_bounds(const ExperimentSpec& spec, std::ostream& log);

enum class PlotKind { crossing_vs_lambda, tail_vs_s, bound_vs_n };
PlotKind plot_kind_from_string(const std::string& s);
// Throws SchemaError when a required column is missing.
void emit_plot_data(std::istream& results, PlotKind kind, std::ostream& out);

// Maps an exception from the functions above to its exit code.
int exit_code_for(const std::exception& e);

}  // namespace perco
