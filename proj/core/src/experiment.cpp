#include "perco/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "perco/io.hpp"

namespace perco {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Undefined:
    case YAML::NodeType::Null: return nullptr;
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : n) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : n) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    case YAML::NodeType::Scalar: break;
  }
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted scalar stays a string
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (s == "null" || s == "~" || s == "Null" || s == "NULL") return nullptr;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  std::int64_t iv = 0;
  if (auto [p, ec] = std::from_chars(first, last, iv); ec == std::errc() && p == last) return iv;
  double dv = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, dv); ec == std::errc() && p == last) return dv;
  if (s == ".inf" || s == ".Inf") return INFINITY;
  return s;
}

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw SpecError(kExitValidation, field, msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
  if (!obj.is_object()) invalid(path, "expected a mapping");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) invalid(join(path, k), "unknown field");
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) invalid(field, "expected a number");
  const double d = v.get<double>();
  if (std::isnan(d)) invalid(field, "expected a number");
  return d;
}

double number(const json& obj, const std::string& key, const std::string& path, std::optional<double> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    invalid(join(path, key), "required field is missing");
  }
  return as_number(*v, join(path, key));
}

std::optional<double> opt_number(const json& obj, const std::string& key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return std::nullopt;
  return as_number(*v, join(path, key));
}

std::uint64_t count(const json& obj, const std::string& key, const std::string& path, std::uint64_t def) {
  const json* v = find(obj, key);
  if (!v) return def;
  if (!v->is_number_integer() || v->get<std::int64_t>() < 0)
    invalid(join(path, key), "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

std::string text(const json& obj, const std::string& key, const std::string& path,
                 std::optional<std::string> def = {}) {
  const json* v = find(obj, key);
  if (!v) {
    if (def) return *def;
    invalid(join(path, key), "required field is missing");
  }
  if (!v->is_string()) invalid(join(path, key), "expected a string");
  return v->get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& field, std::size_t exact = 0) {
  if (!v.is_array()) invalid(field, "expected a list of numbers");
  if (exact && v.size() != exact) invalid(field, "expected " + std::to_string(exact) + " numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

Point parse_point(const json& v, const std::string& field) {
  const auto xs = numbers(v, field, 2);
  return {xs[0], xs[1]};
}

Box parse_box(const json& v, const std::string& field) {
  try {
    if (v.is_array()) {
      const auto xs = numbers(v, field, 4);
      return Box(xs[0], xs[1], xs[2], xs[3]);
    }
    if (v.is_object()) {
      if (const json* b = find(v, "box")) return parse_box(*b, join(field, "box"));
      check_keys(v, {"half_size", "center"}, field);
      const Point c = find(v, "center") ? parse_point(v["center"], join(field, "center")) : Point{0.0, 0.0};
      return Box::centered(c, number(v, "half_size", field));
    }
  } catch (const GeometryError& e) {
    invalid(field, e.what());
  }
  invalid(field, "expected [x0, y0, x1, y1] or {half_size: h}");
}

Segment parse_segment(const json& v, const std::string& field) {
  const auto xs = numbers(v, field, 4);
  return {{xs[0], xs[1]}, {xs[2], xs[3]}};
}

Annulus parse_annulus(const json& obj, const std::string& path) {
  try {
    if (find(obj, "inner_box") || find(obj, "outer_box"))
      return Annulus(parse_box(obj.at("inner_box"), join(path, "inner_box")),
                     parse_box(obj.at("outer_box"), join(path, "outer_box")));
    const Point c = find(obj, "center") ? parse_point(obj["center"], join(path, "center")) : Point{0.0, 0.0};
    return Annulus::centered(c, number(obj, "inner", path), number(obj, "outer", path));
  } catch (const GeometryError& e) {
    invalid(path, e.what());
  } catch (const json::exception&) {
    invalid(path, "annulus needs inner and outer");
  }
}

HalfLengthLaw parse_half_length(const json& j, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  if (kind == "fixed") {
    check_keys(j, {"kind", "value"}, path);
    return HalfLengthLaw::fixed(number(j, "value", path));
  }
  if (kind == "uniform") {
    check_keys(j, {"kind", "low", "high"}, path);
    return HalfLengthLaw::uniform(number(j, "low", path), number(j, "high", path));
  }
  if (kind == "power") {
    check_keys(j, {"kind", "c", "l0"}, path);
    return HalfLengthLaw::power(number(j, "c", path), number(j, "l0", path, 1.0));
  }
  if (kind == "exponential") {
    check_keys(j, {"kind", "mean"}, path);
    return HalfLengthLaw::exponential(number(j, "mean", path));
  }
  invalid(join(path, "kind"), "unknown half-length law '" + kind + "'");
}

OrientationLaw parse_orientation(const json& j, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  if (kind == "uniform") {
    check_keys(j, {"kind"}, path);
    return OrientationLaw::uniform();
  }
  if (kind == "fixed") {
    check_keys(j, {"kind", "theta"}, path);
    return OrientationLaw::fixed(number(j, "theta", path));
  }
  if (kind == "two_point") {
    check_keys(j, {"kind", "theta1", "theta2", "p"}, path);
    return OrientationLaw::two_point(number(j, "theta1", path), number(j, "theta2", path), number(j, "p", path, 0.5));
  }
  if (kind == "von_mises") {
    check_keys(j, {"kind", "mean_axis", "kappa"}, path);
    return OrientationLaw::von_mises(number(j, "mean_axis", path, 0.0), number(j, "kappa", path));
  }
  invalid(join(path, "kind"), "unknown orientation law '" + kind + "'");
}

ConnectionFunction parse_connection(const json& j, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  if (kind == "indicator") {
    check_keys(j, {"kind", "r0"}, path);
    return ConnectionFunction::indicator(number(j, "r0", path, 1.0));
  }
  if (kind == "power_min") {
    check_keys(j, {"kind", "c"}, path);
    return ConnectionFunction::power_min(number(j, "c", path));
  }
  if (kind == "exponential") {
    check_keys(j, {"kind", "mu"}, path);
    return ConnectionFunction::exponential(number(j, "mu", path, 1.0));
  }
  if (kind == "inhomogeneous") {
    check_keys(j, {"kind", "eta", "alpha"}, path);
    return ConnectionFunction::inhomogeneous(number(j, "eta", path), number(j, "alpha", path));
  }
  invalid(join(path, "kind"), "unknown connection function '" + kind + "'");
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

// ---------------------------------------------------------------- output

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_atomically(const std::string& path, const std::string& content) {
  ensure_parent(path);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << content;
    if (!f) throw std::runtime_error("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_manifest(const ExperimentSpec& spec, json manifest) {
  manifest["schema"] = "perco.manifest/1";
  manifest["csv"] = spec.csv_path;
  manifest["spec"] = spec.source;
  manifest["seed"] = spec.seed;
  manifest["threads"] = spec.threads ? spec.threads : default_thread_count();
  manifest["model"] = to_json(spec.config);
  if (!manifest.contains("warnings")) manifest["warnings"] = spec.warnings;
  write_atomically(spec.manifest_path, manifest.dump(2) + "\n");
}

std::string csv_document(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

std::string connection_label(const ModelConfig& c) {
  if (c.model == ModelKind::sticks)
    return "sticks(" + c.sticks.half_length.describe() + ";" + c.sticks.orientation.describe() + ")";
  std::string s = c.connection.describe();
  if (c.model == ModelKind::iercm) s += ";beta=" + csv_number(c.beta);
  return s;
}

json estimate_json(const EstimateResult& r) {
  return {{"trials", r.trials}, {"hits", r.hits},   {"p_hat", r.p_hat},
          {"ci_low", r.ci_low}, {"ci_high", r.ci_high}, {"seconds", r.wall_seconds}};
}

json moment_json(const MomentReport& m) {
  json j = {{"j", m.j}, {"finite", m.finite}, {"integrand", m.integrand}};
  if (m.finite) {
    j["value"] = m.value;
    j["abs_error_bound"] = m.abs_error_bound;
  } else {
    j["divergence"] = m.divergence;
  }
  return j;
}

json run_analysis(const ExperimentSpec& spec, const JobSpec& job) {
  const AnalysisJob& a = *job.analysis;
  const std::string path = "jobs." + job.name + ".analysis";
  if (spec.config.model == ModelKind::sticks) invalid(path, "analysis jobs need a connection-function model");
  const RadialProfile g = spec.config.profile();
  json out = {{"job", job.name}, {"kind", a.kind}, {"profile", g.describe()}};
  if (a.kind == "moments") {
    json ms = json::array();
    for (int j = 1; j <= 3; ++j) ms.push_back(moment_json(moment_integral(g, j)));
    out["moments"] = std::move(ms);
  } else if (a.kind == "tail_mass") {
    const double radius = number(a.params, "radius", path);
    out["radius"] = radius;
    out["tail_mass"] = tail_mass(g, radius);
  } else if (a.kind == "theta_bound") {
    const double lambda = number(a.params, "lambda", path, spec.config.lambda);
    const int n_max = static_cast<int>(count(a.params, "n_max", path, 12));
    const BoundSeries s = theta_bound_series(lambda, n_max, g);
    out["lambda"] = lambda;
    out["c1"] = s.c1;
    out["constant"] = s.constant;
    json terms = json::array();
    for (const auto& t : s.terms)
      terms.push_back({{"n", t.n}, {"bound", t.value}, {"assembled", t.assembled}, {"enumerated", t.enumerated}});
    out["terms"] = std::move(terms);
  } else if (a.kind == "expected_connection") {
    if (spec.config.model != ModelKind::iercm) invalid(path, "expected_connection needs model iercm");
    std::vector<double> d;
    if (const json* v = find(a.params, "distances")) d = numbers(*v, join(path, "distances"));
    else {
      const double lo = number(a.params, "from", path, 10.0), hi = number(a.params, "to", path, 100.0);
      const auto k = count(a.params, "count", path, 19);
      if (!(lo > 0.0 && hi > lo) || k < 3) invalid(path, "need 0 < from < to and count >= 3");
      for (std::uint64_t i = 0; i < k; ++i) d.push_back(lo * std::pow(hi / lo, double(i) / double(k - 1)));
    }
    const auto& cf = spec.config.connection;
    const ConnectionTable t = expected_connection_vs_distance(cf.eta, cf.alpha, spec.config.beta, d);
    json rows = json::array();
    for (const auto& r : t.rows) rows.push_back({{"dist", r.dist}, {"value", r.value}, {"abs_error", r.abs_error}});
    out["rows"] = std::move(rows);
    out["ols_slope"] = t.ols_slope;
    out["fitted_exponent"] = t.fitted_exponent;
    out["expected_exponent"] = t.expected_exponent;
    out["relative_error"] = t.relative_error;
    out["within_tolerance"] = t.within_tolerance;
  } else {
    invalid(path + ".kind", "unknown analysis '" + a.kind + "'");
  }
  return out;
}

std::string proxy_label(double u, double n) {
  return "arm:B_" + csv_number(u) + "->boundary(B_" + csv_number(n) + ")";
}

json parse_section(const json& doc, const std::string& key) {
  const json* v = find(doc, key);
  if (!v) return json::object();
  if (!v->is_object()) invalid(key, "expected a mapping");
  return *v;
}

}  // namespace

// ---------------------------------------------------------------- public

json parse_spec_text(const std::string& text) {
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && (text[start] == '{' || text[start] == '[')) {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw SpecError(kExitUsage, "", std::string("JSON parse error: ") + e.what());
    }
  }
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw SpecError(kExitUsage, "", std::string("YAML parse error: ") + e.what());
  }
}

json load_spec_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SpecError(kExitUsage, "", "cannot read spec file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_spec_text(ss.str());
}

ModelConfig parse_model(const json& j) {
  const std::string path = "model";
  check_keys(j, {"kind", "lambda", "lambda_ref", "connection", "beta", "sticks", "core", "truncation_radius",
                 "padding", "sampler"},
             path);
  ModelConfig c;
  try {
    c.model = model_kind_from_string(text(j, "kind", path));
  } catch (const ModelError& e) {
    invalid("model.kind", e.what());
  }
  c.lambda = number(j, "lambda", path);
  c.lambda_ref = opt_number(j, "lambda_ref", path);
  c.truncation_radius = opt_number(j, "truncation_radius", path);
  c.padding = opt_number(j, "padding", path);
  c.beta = number(j, "beta", path, 2.0);
  if (const json* core = find(j, "core")) c.core = parse_box(*core, "model.core");
  else invalid("model.core", "required field is missing");
  const std::string sampler = text(j, "sampler", path, "tree");
  if (sampler == "tree") c.sampler = PairSampler::tree;
  else if (sampler == "scan") c.sampler = PairSampler::scan;
  else invalid("model.sampler", "expected tree or scan");
  try {
    if (c.model == ModelKind::sticks) {
      const json* st = find(j, "sticks");
      if (!st) invalid("model.sticks", "required for model sticks");
      check_keys(*st, {"half_length", "orientation", "sampling"}, "model.sticks");
      if (!find(*st, "half_length")) invalid("model.sticks.half_length", "required field is missing");
      c.sticks.half_length = parse_half_length((*st)["half_length"], "model.sticks.half_length");
      c.sticks.orientation = find(*st, "orientation")
                                 ? parse_orientation((*st)["orientation"], "model.sticks.orientation")
                                 : OrientationLaw::uniform();
      const std::string mode = text(*st, "sampling", "model.sticks", "exact");
      if (mode == "exact") c.stick_sampling = StickSampling::exact;
      else if (mode == "padded") c.stick_sampling = StickSampling::padded;
      else invalid("model.sticks.sampling", "expected exact or padded");
    } else {
      const json* cf = find(j, "connection");
      if (!cf) invalid("model.connection", "required for this model");
      c.connection = parse_connection(*cf, "model.connection");
    }
    c.validate();
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    // Messages start with the parameter they reject.
    const std::string msg = e.what();
    const std::string word = msg.substr(0, msg.find(' '));
    if (word == "lambda" || word == "lambda_ref" || word == "truncation_radius" || word == "padding" || word == "beta")
      invalid(join(path, word), msg);
    invalid(join(path, c.model == ModelKind::sticks ? "sticks" : "connection"), msg);
  }
  return c;
}

EventSpec parse_event(const json& j, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  try {
    if (kind == "crossing") {
      check_keys(j, {"kind", "rect", "direction"}, path);
      if (!find(j, "rect")) invalid(join(path, "rect"), "required field is missing");
      CrossingSpec c{parse_box(j["rect"], join(path, "rect")), Direction::left_right};
      const std::string dir = text(j, "direction", path, "left_right");
      if (dir == "top_down") c.direction = Direction::top_down;
      else if (dir != "left_right") invalid(join(path, "direction"), "expected left_right or top_down");
      return c;
    }
    if (kind == "circuit") {
      check_keys(j, {"kind", "center", "inner", "outer", "inner_box", "outer_box"}, path);
      return CircuitEvent{parse_annulus(j, path)};
    }
    if (kind == "arm") {
      check_keys(j, {"kind", "source", "target", "confinement"}, path);
      for (const char* k : {"source", "target", "confinement"})
        if (!find(j, k)) invalid(join(path, k), "required field is missing");
      ArmSpec a;
      a.confinement = parse_box(j["confinement"], join(path, "confinement"));
      const json& src = j["source"];
      if (src.is_object() && find(src, "segment")) a.source = parse_segment(src["segment"], join(path, "source.segment"));
      else a.source = parse_box(src, join(path, "source"));
      const json& dst = j["target"];
      const std::string tp = join(path, "target");
      if (!dst.is_object()) invalid(tp, "expected {boundary: box}, {box: box} or {segment: [...]}");
      if (find(dst, "boundary")) a.target = BoxBoundary{parse_box(dst["boundary"], join(tp, "boundary"))};
      else if (find(dst, "box")) a.target = parse_box(dst["box"], join(tp, "box"));
      else if (find(dst, "segment")) a.target = parse_segment(dst["segment"], join(tp, "segment"));
      else invalid(tp, "expected {boundary: box}, {box: box} or {segment: [...]}");
      a.validate();
      return a;
    }
    if (kind == "longest_edge") {
      check_keys(j, {"kind", "box", "threshold"}, path);
      if (!find(j, "box")) invalid(join(path, "box"), "required field is missing");
      return LongestEdgeEvent{parse_box(j["box"], join(path, "box")), number(j, "threshold", path)};
    }
    if (kind == "long_edge_annulus") {
      check_keys(j, {"kind", "center", "inner", "outer", "inner_box", "outer_box", "threshold"}, path);
      return LongEdgeAnnulusEvent{parse_annulus(j, path), number(j, "threshold", path)};
    }
    if (kind == "composite_f") {
      check_keys(j, {"kind", "s", "rho"}, path);
      const CompositeEvent f{number(j, "s", path), number(j, "rho", path)};
      composite_layout(f.s, f.rho);
      return f;
    }
  } catch (const GeometryError& e) {
    invalid(path, e.what());
  }
  invalid(join(path, "kind"), "unknown event kind '" + kind + "'");
}

ExperimentSpec parse_experiment(const json& input, const Overrides& ov) {
  if (!input.is_object()) throw SpecError(kExitValidation, "", "spec must be a mapping at the top level");
  json doc = input;
  check_keys(doc, {"version", "seed", "threads", "output", "model", "jobs", "bisect", "tailscan", "bounds"}, "");
  if (const json* v = find(doc, "version"); v && !(v->is_number_integer() && v->get<int>() == kSpecVersion))
    invalid("version", "unsupported spec version (expected " + std::to_string(kSpecVersion) + ")");
  if (ov.lambda) doc["model"]["lambda"] = *ov.lambda;
  if (ov.seed) doc["seed"] = *ov.seed;
  if (ov.threads) doc["threads"] = *ov.threads;
  if (ov.out) {
    doc["output"]["csv"] = *ov.out;
    doc["output"].erase("manifest");
  }
  if (ov.trials) {
    if (doc.contains("jobs") && doc["jobs"].is_array())
      for (auto& job : doc["jobs"]) job["trials"] = *ov.trials;
    if (doc.contains("tailscan") && doc["tailscan"].is_object()) doc["tailscan"]["trials"] = *ov.trials;
  }

  ExperimentSpec spec;
  spec.source = doc;
  spec.seed = count(doc, "seed", "", 1);
  spec.threads = static_cast<unsigned>(count(doc, "threads", "", 0));
  const json output = parse_section(doc, "output");
  check_keys(output, {"csv", "manifest"}, "output");
  spec.csv_path = text(output, "csv", "output", "results.csv");
  spec.manifest_path =
      text(output, "manifest", "output", std::filesystem::path(spec.csv_path).replace_extension(".json").string());
  if (spec.manifest_path == spec.csv_path) invalid("output.manifest", "must differ from output.csv");

  const json* model = find(doc, "model");
  if (!model) invalid("model", "required field is missing");
  spec.config = parse_model(*model);
  spec.warnings = spec.config.hypothesis_warnings();

  if (const json* jobs = find(doc, "jobs")) {
    if (!jobs->is_array()) invalid("jobs", "expected a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < jobs->size(); ++i) {
      const json& jj = (*jobs)[i];
      const std::string path = "jobs[" + std::to_string(i) + "]";
      check_keys(jj, {"name", "trials", "lambdas", "event", "analysis", "proxy"}, path);
      JobSpec job;
      job.name = text(jj, "name", path, "job" + std::to_string(i));
      if (!names.insert(job.name).second) invalid(join(path, "name"), "duplicate job name '" + job.name + "'");
      job.trials = count(jj, "trials", path, 100);
      if (const json* l = find(jj, "lambdas")) {
        job.lambdas = numbers(*l, join(path, "lambdas"));
        if (job.lambdas.empty()) invalid(join(path, "lambdas"), "must not be empty");
        for (double x : job.lambdas)
          if (!(x >= 0.0) || !std::isfinite(x)) invalid(join(path, "lambdas"), "intensities must be finite and >= 0");
      }
      const int kinds = (find(jj, "event") != nullptr) + (find(jj, "analysis") != nullptr) + (find(jj, "proxy") != nullptr);
      if (kinds != 1) invalid(path, "a job needs exactly one of event, analysis, proxy");
      if (const json* e = find(jj, "event")) job.event = parse_event(*e, join(path, "event"));
      if (const json* a = find(jj, "analysis")) {
        job.analysis = AnalysisJob{text(*a, "kind", join(path, "analysis")), *a};
      }
      if (const json* p = find(jj, "proxy")) {
        const std::string pp = join(path, "proxy");
        check_keys(*p, {"u", "n"}, pp);
        ProxyJob pj;
        pj.u = number(*p, "u", pp);
        if (!find(*p, "n")) invalid(join(pp, "n"), "required field is missing");
        pj.n_values = numbers((*p)["n"], join(pp, "n"));
        if (!(pj.u > 0.0)) invalid(join(pp, "u"), "must be > 0");
        for (double n : pj.n_values)
          if (!(n > pj.u)) invalid(join(pp, "n"), "every scale must exceed u");
        job.proxy = pj;
      }
      spec.jobs.push_back(std::move(job));
    }
  }
  spec.bisect = parse_section(doc, "bisect");
  spec.tailscan = parse_section(doc, "tailscan");
  spec.bounds = parse_section(doc, "bounds");
  return spec;
}

json to_json(const ModelConfig& c) {
  json j;
  j["kind"] = to_string(c.model);
  j["lambda"] = c.lambda;
  j["lambda_ref"] = c.lambda_ref ? json(*c.lambda_ref) : json(nullptr);
  j["connection"] = connection_label(c);
  j["core"] = to_json(c.core);
  j["linkage"] = c.linkage() == Linkage::direct ? "direct" : "enhanced";
  if (c.model == ModelKind::sticks) {
    j["stick_sampling"] = c.stick_sampling == StickSampling::exact ? "exact" : "padded";
    j["padding"] = c.resolved_padding();
  } else {
    const double r = c.resolved_truncation();
    j["truncation_radius"] = r;
    j["padding"] = c.resolved_padding();
    j["sampler"] = c.sampler == PairSampler::tree ? "tree" : "scan";
    if (c.connection.kind != ConnectionFunction::Kind::indicator) {
      // Expected number of pairs with an endpoint in the core dropped by truncation.
      const double lam = std::max(c.lambda, c.lambda_ref.value_or(0.0));
      try {
        j["truncation_bias_edges"] = lam * lam * c.core.area() * tail_mass(c.profile(), r);
      } catch (const DivergenceError& e) {
        j["truncation_bias_edges"] = e.what();
      }
    }
  }
  return j;
}

std::string model_label(const ModelConfig& c) { return to_string(c.model); }

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  char ch;
  auto end_row = [&] {
    row.push_back(field);
    field.clear();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
    row.clear();
    any = false;
  };
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      row.push_back(field);
      field.clear();
    } else if (ch == '\n') {
      end_row();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  if (quoted) throw SchemaError("unterminated quoted field");
  if (any || !row.empty() || !field.empty()) end_row();
  return rows;
}

std::string results_row(const std::string& job, const ModelConfig& c, double lambda, const std::string& event,
                        double s, const EstimateResult& r) {
  std::ostringstream os;
  os << csv_field(job) << ',' << model_label(c) << ',' << csv_number(lambda) << ',' << csv_field(connection_label(c))
     << ',' << csv_field(event) << ',' << csv_number(s) << ',' << r.trials << ',' << r.hits << ','
     << csv_number(r.p_hat) << ',' << csv_number(r.ci_low) << ',' << csv_number(r.ci_high) << ',' << r.master_seed
     << ',' << csv_number(r.wall_seconds);
  return os.str();
}

RunSummary run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  // Every region is checked before any work so a bad job leaves no output.
  for (const JobSpec& job : spec.jobs) {
    if (job.event) check_event_region(spec.config, *job.event);
    if (job.proxy)
      for (double n : job.proxy->n_values)
        if (!spec.config.core.contains(Box::centered(n)))
          throw RegionError("proxy box B_" + csv_number(n) + " of job " + job.name + " is not inside the core window");
  }
  const std::string started = iso_now();
  EstimateOptions eo;
  eo.threads = spec.threads;
  std::vector<std::string> rows;
  json jobs = json::array();
  json analyses = json::array();
  for (const JobSpec& job : spec.jobs) {
    log << "job " << job.name << "\n";
    if (job.analysis) {
      analyses.push_back(run_analysis(spec, job));
      continue;
    }
    json jm = {{"name", job.name}, {"trials", job.trials}};
    if (job.proxy) {
      const auto ladder = percolation_proxy_ladder(spec.config, job.proxy->u, job.proxy->n_values, job.trials,
                                                   spec.seed, eo);
      json est = json::array();
      for (const auto& row : ladder) {
        const std::string ev = proxy_label(job.proxy->u, row.n);
        rows.push_back(results_row(job.name, spec.config, spec.config.lambda, ev, row.n, row.estimate));
        est.push_back(estimate_json(row.estimate));
      }
      jm["proxy"] = {{"u", job.proxy->u}, {"n", job.proxy->n_values}, {"estimates", est}};
    } else if (job.lambdas.empty()) {
      const EstimateResult r = estimate_event_probability(spec.config, *job.event, job.trials, spec.seed, eo);
      rows.push_back(results_row(job.name, spec.config, spec.config.lambda, describe(*job.event),
                                 event_scale(*job.event), r));
      jm["event"] = describe(*job.event);
      jm["estimate"] = estimate_json(r);
    } else {
      const LadderResult lr = coupled_lambda_ladder(spec.config, *job.event, job.lambdas, job.trials, spec.seed, eo);
      json est = json::array();
      for (std::size_t l = 0; l < lr.lambdas.size(); ++l) {
        rows.push_back(results_row(job.name, spec.config, lr.lambdas[l], describe(*job.event),
                                   event_scale(*job.event), lr.estimates[l]));
        est.push_back(estimate_json(lr.estimates[l]));
      }
      jm["event"] = describe(*job.event);
      jm["lambdas"] = lr.lambdas;
      jm["estimates"] = est;
      jm["monotonicity_violations"] = lr.monotonicity_violations;
    }
    jobs.push_back(std::move(jm));
  }
  write_atomically(spec.csv_path, csv_document(kResultsColumns, rows));
  write_manifest(spec, {{"command", "run"},
                        {"started_at", started},
                        {"finished_at", iso_now()},
                        {"csv_columns", kResultsColumns},
                        {"jobs", jobs},
                        {"analysis", analyses}});
  return {rows.size(), spec.warnings};
}

RunSummary run_bisect(const ExperimentSpec& spec, std::ostream& log) {
  const json& b = spec.bisect;
  if (b.empty()) invalid("bisect", "section is missing");
  check_keys(b, {"event", "p_star", "bracket", "tolerance", "initial_trials", "max_trials_per_point", "budget"},
             "bisect");
  if (!find(b, "event")) invalid("bisect.event", "required field is missing");
  const EventSpec e = parse_event(b["event"], "bisect.event");
  if (!find(b, "bracket")) invalid("bisect.bracket", "required field is missing");
  const auto br = numbers(b["bracket"], "bisect.bracket", 2);
  BisectOptions opt;
  opt.tolerance = number(b, "tolerance", "bisect", 0.05);
  opt.initial_trials = count(b, "initial_trials", "bisect", 200);
  opt.max_trials_per_point = count(b, "max_trials_per_point", "bisect", 6400);
  opt.budget = count(b, "budget", "bisect", 200000);
  opt.threads = spec.threads;
  const double p_star = number(b, "p_star", "bisect", 0.5);
  if (!(p_star > 0.0 && p_star < 1.0)) invalid("bisect.p_star", "must lie in (0,1)");
  if (!(br[0] >= 0.0 && br[0] < br[1])) invalid("bisect.bracket", "need 0 <= low < high");
  if (!(opt.tolerance > 0.0)) invalid("bisect.tolerance", "must be > 0");
  check_event_region(spec.config, e);
  const std::string started = iso_now();
  const CriticalSearchResult res = bisect_critical_intensity(spec.config, e, p_star, br[0], br[1], spec.seed, opt);
  std::vector<std::string> rows;
  json steps = json::array();
  for (const auto& st : res.steps) {
    rows.push_back(results_row("bisect", spec.config, st.lambda, describe(e), event_scale(e), st.estimate));
    json sj = estimate_json(st.estimate);
    sj["lambda"] = st.lambda;
    sj["bracket"] = {st.bracket_low, st.bracket_high};
    steps.push_back(std::move(sj));
  }
  log << "bracket [" << res.bracket_low << ", " << res.bracket_high << "]"
      << (res.inconclusive ? " inconclusive: " + res.diagnostics : std::string()) << "\n";
  write_atomically(spec.csv_path, csv_document(kResultsColumns, rows));
  write_manifest(spec, {{"command", "bisect"},
                        {"started_at", started},
                        {"finished_at", iso_now()},
                        {"csv_columns", kResultsColumns},
                        {"event", describe(e)},
                        {"scale", event_scale(e)},
                        {"p_star", p_star},
                        {"bracket_low", res.bracket_low},
                        {"bracket_high", res.bracket_high},
                        {"iterations", res.iterations},
                        {"trials_used", res.trials_used},
                        {"inconclusive", res.inconclusive},
                        {"diagnostics", res.diagnostics},
                        {"steps", steps}});
  return {rows.size(), spec.warnings};
}

RunSummary run_tailscan(const ExperimentSpec& spec, std::ostream& log) {
  const json& t = spec.tailscan;
  if (t.empty()) invalid("tailscan", "section is missing");
  check_keys(t, {"t", "tau", "s", "trials"}, "tailscan");
  const double tt = number(t, "t", "tailscan", 1.0);
  const double tau = number(t, "tau", "tailscan");
  if (!find(t, "s")) invalid("tailscan.s", "required field is missing");
  const auto s_grid = numbers(t["s"], "tailscan.s");
  if (!(tt > 0.0)) invalid("tailscan.t", "must be > 0");
  if (!(tau > 0.0)) invalid("tailscan.tau", "must be > 0");
  for (double s : s_grid)
    if (!(s > 0.0)) invalid("tailscan.s", "scales must be > 0");
  const auto trials = count(t, "trials", "tailscan", 1000);
  EstimateOptions eo;
  eo.threads = spec.threads;
  const std::string started = iso_now();
  const TailScan scan = longest_edge_tail_scan(spec.config, tt, tau, s_grid, trials, spec.seed, eo);
  std::vector<std::string> rows;
  json jr = json::array();
  for (const auto& row : scan.rows) {
    const std::string ev = describe(LongestEdgeEvent{Box::centered(tt * row.s), row.threshold});
    rows.push_back(results_row("tailscan", spec.config, spec.config.lambda, ev, row.s, row.estimate));
    json rj = estimate_json(row.estimate);
    rj["s"] = row.s;
    rj["threshold"] = row.threshold;
    rj["truncation_radius"] = std::isfinite(row.truncation_radius) ? json(row.truncation_radius) : json(nullptr);
    rj["padding"] = row.padding;
    rj["censored"] = row.censored;
    jr.push_back(std::move(rj));
    log << "s=" << row.s << " p_hat=" << row.estimate.p_hat << (row.censored ? " (censored)" : "") << "\n";
  }
  for (const auto& w : scan.warnings) log << "warning: " << w << "\n";
  write_atomically(spec.csv_path, csv_document(kResultsColumns, rows));
  write_manifest(spec, {{"command", "tailscan"},
                        {"started_at", started},
                        {"finished_at", iso_now()},
                        {"csv_columns", kResultsColumns},
                        {"t", tt},
                        {"tau", tau},
                        {"rows", jr},
                        {"warnings", scan.warnings}});
  return {rows.size(), scan.warnings};
}

RunSummary run_bounds(const ExperimentSpec& spec, std::ostream& log) {
  const json& b = spec.bounds;
  check_keys(b, {"lambda", "n_max"}, "bounds");
  if (spec.config.model == ModelKind::sticks) invalid("model.kind", "bounds need a connection-function model");
  const double lambda = number(b, "lambda", "bounds", spec.config.lambda);
  const int n_max = static_cast<int>(count(b, "n_max", "bounds", 12));
  if (!(lambda >= 0.0)) invalid("bounds.lambda", "must be >= 0");
  if (n_max < 1) invalid("bounds.n_max", "must be >= 1");
  const RadialProfile g = spec.config.profile();
  json moments = json::array();
  for (int j = 1; j <= 3; ++j) moments.push_back(moment_json(moment_integral(g, j)));
  const BoundSeries series = theta_bound_series(lambda, n_max, g);
  std::vector<std::string> rows;
  for (const auto& t : series.terms) {
    std::ostringstream os;
    os << t.n << ',' << csv_number(lambda) << ',' << csv_number(t.value) << ',' << csv_number(t.assembled) << ','
       << csv_number(std::pow(t.value, 1.0 / t.n)) << ',' << csv_number(series.constant * lambda) << ','
       << t.structures << ',' << (t.enumerated ? 1 : 0);
    rows.push_back(os.str());
  }
  log << "C = " << series.constant << ", C*lambda = " << series.constant * lambda << "\n";
  write_atomically(spec.csv_path, csv_document(kBoundsColumns, rows));
  write_manifest(spec, {{"command", "bounds"},
                        {"csv_columns", kBoundsColumns},
                        {"profile", g.describe()},
                        {"lambda", lambda},
                        {"moments", moments},
                        {"c1", series.c1},
                        {"constant", series.constant}});
  return {rows.size(), spec.warnings};
}

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "crossing_vs_lambda") return PlotKind::crossing_vs_lambda;
  if (s == "tail_vs_s") return PlotKind::tail_vs_s;
  if (s == "bound_vs_n") return PlotKind::bound_vs_n;
  throw SpecError(kExitUsage, "kind", "expected crossing_vs_lambda, tail_vs_s or bound_vs_n");
}

void emit_plot_data(std::istream& results, PlotKind kind, std::ostream& out) {
  const auto rows = read_csv(results);
  if (rows.empty()) throw SchemaError("results file has no header");
  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  std::vector<std::string> need, emit;
  std::string key;
  switch (kind) {
    case PlotKind::crossing_vs_lambda:
      need = {"job", "event", "lambda", "trials", "p_hat", "ci_low", "ci_high"};
      emit = {"lambda", "trials", "p_hat", "ci_low", "ci_high"};
      key = "lambda";
      break;
    case PlotKind::tail_vs_s:
      need = {"job", "event", "s", "trials", "p_hat", "ci_low", "ci_high"};
      emit = {"s", "trials", "p_hat", "ci_low", "ci_high"};
      key = "s";
      break;
    case PlotKind::bound_vs_n:
      need = {"n", "lambda", "bound", "nth_root", "c_lambda"};
      emit = {"n", "bound", "nth_root", "c_lambda"};
      key = "n";
      break;
  }
  for (const auto& c : need)
    if (!col.count(c)) throw SchemaError("results file lacks column '" + c + "'");
  struct Item {
    std::string series;
    double key;
    std::vector<std::string> fields;
  };
  std::vector<Item> items;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw SchemaError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) + " fields, expected " +
                        std::to_string(header.size()));
    Item it;
    it.series = kind == PlotKind::bound_vs_n ? "lambda=" + row[col["lambda"]] : row[col["job"]] + ":" + row[col["event"]];
    const std::string& kv = row[col[key]];
    double v = 0.0;
    if (auto [p, ec] = std::from_chars(kv.data(), kv.data() + kv.size(), v); ec != std::errc() || p != kv.data() + kv.size())
      throw SchemaError("row " + std::to_string(r + 1) + ": column '" + key + "' is not a number");
    it.key = v;
    for (const auto& c : emit) it.fields.push_back(row[col[c]]);
    items.push_back(std::move(it));
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.series < b.series || (a.series == b.series && a.key < b.key);
  });
  out << "series";
  for (const auto& c : emit) out << ',' << c;
  out << '\n';
  for (const auto& it : items) {
    out << csv_field(it.series);
    for (const auto& f : it.fields) out << ',' << csv_field(f);
    out << '\n';
  }
}

int exit_code_for(const std::exception& e) {
  if (auto* s = dynamic_cast<const SpecError*>(&e)) return s->code();
  if (dynamic_cast<const RegionError*>(&e)) return kExitRegion;
  if (dynamic_cast<const SchemaError*>(&e)) return kExitSchema;
  return kExitRuntime;
}

}  // namespace perco
