#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gct/model.hpp"

namespace gct {

enum class Mode { simulate, recover, phase_diagram, theory_curve, diagnose };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Declarative sweep. Grids combine as a Cartesian product. Dimension is
/// given either as p or as gamma (p = round(gamma n)); sparsity either as m or
/// as beta (m = round(beta sqrt(n))).
struct ExperimentConfig {
  static constexpr int kSchema = 1;

  Mode mode = Mode::simulate;
  std::vector<int> n = {2000};
  std::vector<int> p;
  std::vector<double> gamma;
  std::vector<int> m;
  std::vector<double> beta;
  std::vector<double> lambda = {1.0};
  /// Kernel grammar strings, plus "pca" (top eigenpair of Y) and "adaptive"
  /// (soft threshold chosen by the spectral gap over t_grid).
  std::vector<std::string> kernels = {"soft:t=2"};
  SpikePrior prior = SpikePrior::rademacher;
  int trials = 20;
  std::uint64_t base_seed = 1;
  double eps_exponent = 0.375;
  /// Detection margin. Unset: half of the theoretical outlier gap, taken at
  /// detect_lambda when given and at the cell's own lambda otherwise.
  std::optional<double> detect_eps;
  std::optional<double> detect_lambda;
  std::vector<double> t_grid;
  bool exact_tau = false;
  /// diagnose: z = lambda_plus + z_offset; pair is "equal" or "orthogonal".
  double z_offset = 1.0;
  std::string pair = "equal";
  int threads = 0;
  bool timing = false;
  std::string output = "results.csv";
  std::string summary;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
};

/// Parses a JSON document; unknown keys and a missing or wrong schema are errors.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);

/// JSON rendering of the config (the echo in summaries). The thread count is
/// left out so summaries do not depend on it.
std::string config_to_json(const ExperimentConfig& config);

}  // namespace gct
