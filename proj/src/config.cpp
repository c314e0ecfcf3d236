#include "gct/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gct/error.hpp"
#include "gct/kernels.hpp"

namespace gct {

namespace {

using nlohmann::json;

template <typename T>
std::vector<T> as_list(const json& value, const char* key) {
  try {
    if (value.is_array()) return value.get<std::vector<T>>();
    return {value.get<T>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
T as_value(const json& value, const char* key) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::simulate:
      return "simulate";
    case Mode::recover:
      return "recover";
    case Mode::phase_diagram:
      return "phase-diagram";
    case Mode::theory_curve:
      return "theory-curve";
    case Mode::diagnose:
      return "diagnose";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  if (text == "simulate") return Mode::simulate;
  if (text == "recover") return Mode::recover;
  if (text == "phase-diagram") return Mode::phase_diagram;
  if (text == "theory-curve") return Mode::theory_curve;
  if (text == "diagnose") return Mode::diagnose;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (trials < 1 && mode != Mode::theory_curve && mode != Mode::phase_diagram) fail("trials must be >= 1");
  if (!p.empty() && !gamma.empty()) fail("give either p or gamma, not both");
  if (!m.empty() && !beta.empty()) fail("give either m or beta, not both");
  for (double g : gamma)
    if (!(g > 0.0)) fail("gamma must be positive");
  for (double b : beta)
    if (!(b > 0.0)) fail("beta must be positive");
  for (double l : lambda)
    if (!(l >= 1.0)) fail("lambda must be >= 1");
  for (double t : t_grid)
    if (!(t >= 0.0)) fail("t_grid entries must be >= 0");
  if (!(eps_exponent > 0.25 && eps_exponent < 0.5)) fail("eps_exponent must lie in (1/4, 1/2)");
  if (detect_eps && !(*detect_eps > 0.0)) fail("detect_eps must be positive");
  if (detect_lambda && !(*detect_lambda > 1.0)) fail("detect_lambda must exceed 1");
  if (threads < 0) fail("threads must be >= 0");
  if (pair != "equal" && pair != "orthogonal") fail("pair must be 'equal' or 'orthogonal'");
  if (!(z_offset > 0.0)) fail("z_offset must be positive");
  if (output.empty()) fail("output path must be set");

  switch (mode) {
    case Mode::theory_curve:
      if (gamma.empty() || beta.empty()) fail("theory-curve needs gamma and beta grids");
      return;
    case Mode::phase_diagram:
      if (gamma.empty() || beta.empty() || lambda.empty()) fail("phase-diagram needs gamma, beta and lambda grids");
      break;
    case Mode::diagnose:
      if (n.empty() || gamma.empty()) fail("diagnose needs n and gamma grids");
      break;
    case Mode::simulate:
    case Mode::recover:
      if (n.empty() || lambda.empty()) fail("n and lambda grids must be non-empty");
      if (p.empty() && gamma.empty()) fail("give p or gamma");
      if (m.empty() && beta.empty()) fail("give m or beta");
      for (int v : n)
        if (v < 2) fail("n must be >= 2");
      break;
  }
  if (kernels.empty()) fail("kernel list must be non-empty");
  for (const auto& k : kernels) {
    if (k == "pca" || k == "adaptive") {
      if (mode == Mode::phase_diagram || mode == Mode::diagnose)
        fail("'" + k + "' is only available in simulate/recover");
      if (k == "adaptive" && t_grid.empty()) fail("adaptive kernel needs a non-empty t_grid");
      continue;
    }
    try {
      (void)KernelSpec::parse(k);
    } catch (const Error& e) {
      fail(std::string("kernel '") + k + "': " + e.what());
    }
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!doc.contains("schema")) throw ConfigError("config is missing 'schema'");
  if (as_value<int>(doc["schema"], "schema") != ExperimentConfig::kSchema)
    throw ConfigError("unsupported config schema (expected 1)");

  static const std::set<std::string> known = {
      "schema",  "mode",         "n",      "p",          "gamma",        "m",          "beta",
      "lambda",  "kernels",      "kernel", "prior",      "trials",       "base_seed",  "eps_exponent",
      "detect_eps", "detect_lambda", "t_grid", "exact_tau", "z_offset",   "pair",       "threads",
      "timing",  "output",       "summary"};
  for (const auto& item : doc.items())
    if (!known.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  if (doc.contains("kernel") && doc.contains("kernels")) throw ConfigError("give 'kernel' or 'kernels', not both");

  ExperimentConfig c;
  if (doc.contains("mode")) c.mode = parse_mode(as_value<std::string>(doc["mode"], "mode"));
  if (doc.contains("n")) c.n = as_list<int>(doc["n"], "n");
  if (doc.contains("p")) c.p = as_list<int>(doc["p"], "p");
  if (doc.contains("gamma")) c.gamma = as_list<double>(doc["gamma"], "gamma");
  if (doc.contains("m")) c.m = as_list<int>(doc["m"], "m");
  if (doc.contains("beta")) c.beta = as_list<double>(doc["beta"], "beta");
  if (doc.contains("lambda")) c.lambda = as_list<double>(doc["lambda"], "lambda");
  if (doc.contains("kernels")) c.kernels = as_list<std::string>(doc["kernels"], "kernels");
  if (doc.contains("kernel")) c.kernels = as_list<std::string>(doc["kernel"], "kernel");
  if (doc.contains("prior")) {
    try {
      c.prior = parse_prior(as_value<std::string>(doc["prior"], "prior"));
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
  }
  if (doc.contains("trials")) c.trials = as_value<int>(doc["trials"], "trials");
  if (doc.contains("base_seed")) c.base_seed = as_value<std::uint64_t>(doc["base_seed"], "base_seed");
  if (doc.contains("eps_exponent")) c.eps_exponent = as_value<double>(doc["eps_exponent"], "eps_exponent");
  if (doc.contains("detect_eps") && !doc["detect_eps"].is_null())
    c.detect_eps = as_value<double>(doc["detect_eps"], "detect_eps");
  if (doc.contains("detect_lambda") && !doc["detect_lambda"].is_null())
    c.detect_lambda = as_value<double>(doc["detect_lambda"], "detect_lambda");
  if (doc.contains("t_grid")) c.t_grid = as_list<double>(doc["t_grid"], "t_grid");
  if (doc.contains("exact_tau")) c.exact_tau = as_value<bool>(doc["exact_tau"], "exact_tau");
  if (doc.contains("z_offset")) c.z_offset = as_value<double>(doc["z_offset"], "z_offset");
  if (doc.contains("pair")) c.pair = as_value<std::string>(doc["pair"], "pair");
  if (doc.contains("threads")) c.threads = as_value<int>(doc["threads"], "threads");
  if (doc.contains("timing")) c.timing = as_value<bool>(doc["timing"], "timing");
  if (doc.contains("output")) c.output = as_value<std::string>(doc["output"], "output");
  if (doc.contains("summary")) c.summary = as_value<std::string>(doc["summary"], "summary");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["schema"] = ExperimentConfig::kSchema;
  doc["mode"] = std::string(to_string(c.mode));
  doc["n"] = c.n;
  if (!c.p.empty()) doc["p"] = c.p;
  if (!c.gamma.empty()) doc["gamma"] = c.gamma;
  if (!c.m.empty()) doc["m"] = c.m;
  if (!c.beta.empty()) doc["beta"] = c.beta;
  doc["lambda"] = c.lambda;
  doc["kernels"] = c.kernels;
  doc["prior"] = std::string(to_string(c.prior));
  doc["trials"] = c.trials;
  doc["base_seed"] = c.base_seed;
  doc["eps_exponent"] = c.eps_exponent;
  doc["detect_eps"] = c.detect_eps ? json(*c.detect_eps) : json(nullptr);
  doc["detect_lambda"] = c.detect_lambda ? json(*c.detect_lambda) : json(nullptr);
  doc["t_grid"] = c.t_grid;
  doc["exact_tau"] = c.exact_tau;
  doc["z_offset"] = c.z_offset;
  doc["pair"] = c.pair;
  doc["timing"] = c.timing;
  doc["output"] = c.output;
  doc["summary"] = c.summary;
  return doc.dump(2);
}

}  // namespace gct
