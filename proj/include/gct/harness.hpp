#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gct/config.hpp"
#include "gct/io.hpp"

namespace gct {

/// One record per (cell, trial) of a simulate/recover run.
struct ResultRow {
  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

  double gamma = kNaN;
  double beta = kNaN;
  double lambda = kNaN;
  std::string kernel;
  double t = kNaN;
  int trial = 0;
  std::uint64_t seed = 0;
  double lambda1 = kNaN;
  double lambda2 = kNaN;
  double gap = kNaN;
  double cos2 = kNaN;
  std::optional<bool> detected;
  double support_score = kNaN;
  std::optional<bool> exact_recovery;
  double theory_lambda = kNaN;
  double theory_cos2 = kNaN;
  double runtime_ms = kNaN;
  std::string error;
};

/// Column order of the result CSV.
const std::vector<std::string>& result_columns();

CsvTable rows_to_table(const std::vector<ResultRow>& rows);

/// FNV-1a over the cell description followed by the trial index, finalized
/// with mix64. Independent of platform and scheduling.
std::uint64_t stable_hash(int n, int p, int m, double lambda, int prior, int trial);

/// base_seed XOR stable_hash(cell, trial).
std::uint64_t cell_seed(std::uint64_t base_seed, int n, int p, int m, double lambda, int prior, int trial);

/// --threads, else GCT_LAB_THREADS, else hardware concurrency (at least 1).
int resolve_threads(int requested);

struct RunOutput {
  CsvTable table;
  std::string summary_json;
  int failures = 0;
};

/// Executes the config. Rows come out in (cell, trial) order for every thread
/// count. Trial failures are recorded per row and counted, not thrown.
RunOutput run(const ExperimentConfig& config, int threads);

/// simulate/recover engine on its own.
std::vector<ResultRow> run_trials(const ExperimentConfig& config, int threads);

/// Per-cell mean and standard error of the numeric columns, with theory values.
std::string summarize(const ExperimentConfig& config, const std::vector<ResultRow>& rows);

CsvTable theory_curve_table(const ExperimentConfig& config);
CsvTable phase_diagram_table(const ExperimentConfig& config);
CsvTable diagnose_table(const ExperimentConfig& config, int threads, int* failures);

}  // namespace gct
