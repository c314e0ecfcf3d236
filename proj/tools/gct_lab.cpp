// gct-lab: command-line front end of the GCT experiment harness.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gct/config.hpp"
#include "gct/error.hpp"
#include "gct/harness.hpp"
#include "gct/io.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kPartial = 3, kIo = 4 };

struct Flags {
  std::string config_path;
  std::string out;
  std::string summary;
  int threads = 0;
  std::vector<int> n;
  std::vector<int> p;
  std::vector<double> gamma;
  std::vector<int> m;
  std::vector<double> beta;
  std::vector<double> lambda;
  std::vector<std::string> kernels;
  std::string prior;
  int trials = -1;
  std::uint64_t base_seed = 1;
  double eps_exponent = 0.375;
  double detect_eps = 0.0;
  double detect_lambda = 0.0;
  std::vector<double> t_grid;
  bool exact_tau = false;
  double z_offset = 1.0;
  std::string pair = "equal";
  bool timing = false;
};

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config_path, "JSON config; its values override the flags below");
  sub.add_option("--out", f.out, "output CSV path");
  sub.add_option("--summary", f.summary, "summary JSON path (default: output with .json extension)");
  sub.add_option("--threads", f.threads, "worker threads (default: GCT_LAB_THREADS, then all cores)");
  sub.add_option("--n", f.n, "sample sizes")->delimiter(',');
  sub.add_option("--p", f.p, "dimensions")->delimiter(',');
  sub.add_option("--gamma", f.gamma, "aspect ratios p/n")->delimiter(',');
  sub.add_option("--m", f.m, "sparsities")->delimiter(',');
  sub.add_option("--beta", f.beta, "m/sqrt(n)")->delimiter(',');
  sub.add_option("--lambda", f.lambda, "spike strengths")->delimiter(',');
  sub.add_option("--kernel", f.kernels, "kernel string, 'pca' or 'adaptive' (repeatable)");
  sub.add_option("--prior", f.prior, "rademacher or uniform-shell");
  sub.add_option("--trials", f.trials, "trials per cell");
  sub.add_option("--base-seed", f.base_seed, "base seed");
  sub.add_option("--eps-exponent", f.eps_exponent, "support threshold n^-eps exponent");
  sub.add_option("--detect-eps", f.detect_eps, "detection margin");
  sub.add_option("--detect-lambda", f.detect_lambda, "lambda at which the default margin is computed");
  sub.add_option("--t-grid", f.t_grid, "soft-threshold grid")->delimiter(',');
  sub.add_flag("--exact-tau", f.exact_tau, "use the exact tau instead of the truncated series");
  sub.add_option("--z-offset", f.z_offset, "diagnose: z = edge + offset");
  sub.add_option("--pair", f.pair, "diagnose: equal or orthogonal test vectors");
  sub.add_flag("--timing", f.timing, "record runtime_ms");
}

gct::ExperimentConfig from_flags(const Flags& f, const CLI::App& sub, gct::Mode mode) {
  gct::ExperimentConfig c;
  c.mode = mode;
  if (!f.n.empty()) c.n = f.n;
  c.p = f.p;
  c.gamma = f.gamma;
  c.m = f.m;
  c.beta = f.beta;
  if (!f.lambda.empty()) c.lambda = f.lambda;
  if (!f.kernels.empty()) c.kernels = f.kernels;
  if (!f.prior.empty()) {
    try {
      c.prior = gct::parse_prior(f.prior);
    } catch (const gct::Error& e) {
      throw gct::ConfigError(e.what());
    }
  }
  if (f.trials >= 0) c.trials = f.trials;
  c.base_seed = f.base_seed;
  c.eps_exponent = f.eps_exponent;
  if (sub.count("--detect-eps")) c.detect_eps = f.detect_eps;
  if (sub.count("--detect-lambda")) c.detect_lambda = f.detect_lambda;
  c.t_grid = f.t_grid;
  c.exact_tau = f.exact_tau;
  c.z_offset = f.z_offset;
  c.pair = f.pair;
  c.timing = f.timing;
  c.validate();
  return c;
}

gct::ExperimentConfig from_file(const std::string& path, gct::Mode mode) {
  const std::string text = gct::read_text(path);
  gct::ExperimentConfig c = gct::parse_config(text);
  const auto doc = nlohmann::json::parse(text);
  if (doc.contains("mode") && c.mode != mode)
    throw gct::ConfigError("config mode '" + std::string(gct::to_string(c.mode)) + "' does not match subcommand '" +
                           std::string(gct::to_string(mode)) + "'");
  c.mode = mode;
  c.validate();
  return c;
}

std::string default_summary_path(const std::string& out) {
  std::filesystem::path path(out);
  path.replace_extension(".json");
  return path.string();
}

int execute(const Flags& f, const CLI::App& sub, gct::Mode mode) {
  gct::ExperimentConfig c = f.config_path.empty() ? from_flags(f, sub, mode) : from_file(f.config_path, mode);
  if (!f.out.empty()) c.output = f.out;
  if (!f.summary.empty()) c.summary = f.summary;
  const int threads = gct::resolve_threads(f.threads > 0 ? f.threads : c.threads);

  const gct::RunOutput result = gct::run(c, threads);
  gct::write_csv(c.output, result.table);
  gct::write_text(c.summary.empty() ? default_summary_path(c.output) : c.summary, result.summary_json);
  if (result.failures > 0) {
    std::cerr << "gct-lab: " << result.failures << " trial(s) failed; see the error column of " << c.output << "\n";
    return kPartial;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized covariance thresholding experiments"};
  app.set_version_flag("--version", GCT_VERSION);
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Monte Carlo overlap and detection runs"},
      {"recover", "Monte Carlo support recovery runs"},
      {"phase-diagram", "theoretical regime, outlier and overlap on a (gamma, beta, lambda) grid"},
      {"theory-curve", "lambda*, soft-threshold lambda* and t* against beta"},
      {"diagnose", "resolvent quadratic forms against their deterministic equivalents"},
  };
  std::vector<Flags> flags(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].first, commands[i].second);
    add_flags(*sub, flags[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      return execute(flags[i], *subs[i], gct::parse_mode(commands[i].first));
    } catch (const gct::ConfigError& e) {
      std::cerr << "gct-lab: config error: " << e.what() << "\n";
      return kConfig;
    } catch (const gct::IoError& e) {
      std::cerr << "gct-lab: I/O error: " << e.what() << "\n";
      return kIo;
    } catch (const gct::InvalidParameter& e) {
      std::cerr << "gct-lab: config error: " << e.what() << "\n";
      return kConfig;
    } catch (const std::exception& e) {
      std::cerr << "gct-lab: " << e.what() << "\n";
      return kFailure;
    }
  }
  return kFailure;
}
