#include "gct/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <functional>
#include <thread>

#include <json.hpp>

#include "gct/error.hpp"
#include "gct/estimator.hpp"
#include "gct/rng.hpp"
#include "gct/theory.hpp"

namespace gct {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct DataCell {
  int n = 0;
  int p = 0;
  int m = 0;
  double gamma = 0.0;
  double beta = 0.0;
  double lambda = 1.0;
};

std::vector<DataCell> data_cells(const ExperimentConfig& c) {
  std::vector<DataCell> cells;
  for (int n : c.n) {
    std::vector<int> ps = c.p;
    for (double g : c.gamma) ps.push_back(static_cast<int>(std::lround(g * n)));
    std::vector<int> ms = c.m;
    for (double b : c.beta) ms.push_back(static_cast<int>(std::lround(b * std::sqrt(static_cast<double>(n)))));
    for (int p : ps) {
      for (int m : ms) {
        if (p < 1 || m < 1 || m > p)
          throw ConfigError("cell n=" + std::to_string(n) + " p=" + std::to_string(p) + " m=" + std::to_string(m) +
                            " is invalid");
        for (double l : c.lambda) {
          DataCell cell;
          cell.n = n;
          cell.p = p;
          cell.m = m;
          cell.gamma = static_cast<double>(p) / n;
          cell.beta = m / std::sqrt(static_cast<double>(n));
          cell.lambda = l;
          cells.push_back(cell);
        }
      }
    }
  }
  return cells;
}

enum class Method { kernel, pca, adaptive };

struct KernelEntry {
  Method method = Method::kernel;
  std::optional<KernelSpec> spec;
  std::string label;
};

std::vector<KernelEntry> kernel_entries(const ExperimentConfig& c) {
  std::vector<KernelEntry> out;
  for (const auto& text : c.kernels) {
    KernelEntry e;
    if (text == "pca") {
      e.method = Method::pca;
      e.label = "pca";
    } else if (text == "adaptive") {
      e.method = Method::adaptive;
      e.label = "adaptive";
    } else {
      e.spec = KernelSpec::parse(text);
      e.label = e.spec->label();
    }
    out.push_back(std::move(e));
  }
  return out;
}

// Theory prediction and detection margin of one (cell, kernel).
struct CellTheory {
  double lambda = kNaN;
  double cos2 = kNaN;
  double edge = kNaN;
  double eps = kNaN;
};

double half_gap(const KernelSpec& spec, double gamma, double beta, double lambda, const TheoryOptions& opts) {
  if (!(lambda > 1.0)) return kNaN;
  try {
    const TheoryResult r = spike_forward(spec, gamma, beta, lambda, opts);
    return r.informative() ? 0.5 * (r.lambda_limit - r.bulk.lambda_plus) : kNaN;
  } catch (const Error&) {
    return kNaN;
  }
}

CellTheory kernel_theory(const KernelSpec& spec, const DataCell& cell, const ExperimentConfig& c) {
  TheoryOptions opts;
  opts.exact_tau = c.exact_tau;
  CellTheory th;
  try {
    th.edge = noise_law(spec, cell.gamma).lambda_plus;
    if (cell.lambda == 1.0) {
      th.lambda = th.edge;
      th.cos2 = 0.0;
    } else {
      const TheoryResult r = spike_forward(spec, cell.gamma, cell.beta, cell.lambda, opts);
      th.lambda = r.lambda_limit;
      th.cos2 = r.cos2_limit;
    }
  } catch (const Error&) {
  }
  th.eps = c.detect_eps ? *c.detect_eps : half_gap(spec, cell.gamma, cell.beta, c.detect_lambda.value_or(cell.lambda), opts);
  return th;
}

CellTheory pca_theory(const DataCell& cell, const ExperimentConfig& c) {
  CellTheory th;
  const double root = std::sqrt(cell.gamma);
  th.edge = (1.0 + root) * (1.0 + root);
  const BbpLimits b = bbp_limits(cell.gamma, cell.lambda);
  th.lambda = b.lambda1;
  th.cos2 = b.cos2;
  const double ref = c.detect_lambda.value_or(cell.lambda);
  if (c.detect_eps) {
    th.eps = *c.detect_eps;
  } else if (ref > 1.0 + root) {
    th.eps = 0.5 * (bbp_limits(cell.gamma, ref).lambda1 - th.edge);
  }
  return th;
}

void fill_estimate(ResultRow& row, const SpectralEstimate& est) {
  row.lambda1 = est.lambda1;
  row.lambda2 = est.lambda2;
  row.gap = est.gap;
  row.cos2 = est.cos2;
  row.support_score = est.support_score.value_or(kNaN);
  if (est.v_hat) row.exact_recovery = est.exact_recovery;
}

void set_detection(ResultRow& row, double edge, double eps) {
  if (std::isfinite(edge) && std::isfinite(eps) && eps > 0.0) row.detected = row.lambda1 > edge + eps;
}

std::string opt_bool(const std::optional<bool>& b) {
  if (!b) return {};
  return *b ? "1" : "0";
}

double mean_of(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "gamma",   "beta",          "lambda",         "kernel",        "t",           "trial",
      "seed",    "lambda1",       "lambda2",        "gap",           "cos2",        "detected",
      "support_score", "exact_recovery", "theory_lambda", "theory_cos2", "runtime_ms", "error"};
  return cols;
}

CsvTable rows_to_table(const std::vector<ResultRow>& rows) {
  CsvTable table;
  table.header = result_columns();
  table.rows.reserve(rows.size());
  for (const auto& r : rows) {
    table.rows.push_back({format_float(r.gamma), format_float(r.beta), format_float(r.lambda), r.kernel,
                          format_float(r.t), std::to_string(r.trial), std::to_string(r.seed), format_float(r.lambda1),
                          format_float(r.lambda2), format_float(r.gap), format_float(r.cos2), opt_bool(r.detected),
                          format_float(r.support_score), opt_bool(r.exact_recovery), format_float(r.theory_lambda),
                          format_float(r.theory_cos2), format_float(r.runtime_ms), r.error});
  }
  return table;
}

std::uint64_t stable_hash(int n, int p, int m, double lambda, int prior, int trial) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  std::uint64_t lambda_bits = 0;
  std::memcpy(&lambda_bits, &lambda, sizeof lambda_bits);
  feed(static_cast<std::uint64_t>(n));
  feed(static_cast<std::uint64_t>(p));
  feed(static_cast<std::uint64_t>(m));
  feed(lambda_bits);
  feed(static_cast<std::uint64_t>(prior));
  feed(static_cast<std::uint64_t>(trial));
  return mix64(h);
}

std::uint64_t cell_seed(std::uint64_t base_seed, int n, int p, int m, double lambda, int prior, int trial) {
  return base_seed ^ stable_hash(n, p, m, lambda, prior, trial);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GCT_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

std::vector<ResultRow> run_trials(const ExperimentConfig& c, int threads) {
  c.validate();
  const std::vector<DataCell> cells = data_cells(c);
  const std::vector<KernelEntry> kernels = kernel_entries(c);
  const std::size_t K = kernels.size();
  const std::size_t T = static_cast<std::size_t>(c.trials);

  std::vector<CellTheory> theory(cells.size() * K);
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    for (std::size_t k = 0; k < K; ++k) {
      if (kernels[k].method == Method::kernel) theory[ci * K + k] = kernel_theory(*kernels[k].spec, cells[ci], c);
      if (kernels[k].method == Method::pca) theory[ci * K + k] = pca_theory(cells[ci], c);
    }
  }

  EstimatorOptions est_opts;
  est_opts.eps_exponent = c.eps_exponent;
  TheoryOptions theory_opts;
  theory_opts.exact_tau = c.exact_tau;

  std::vector<ResultRow> rows(cells.size() * K * T);
  parallel_for(cells.size() * T, threads, [&](std::size_t task) {
    const std::size_t ci = task / T;
    const int trial = static_cast<int>(task % T);
    const DataCell& cell = cells[ci];
    const std::uint64_t seed =
        cell_seed(c.base_seed, cell.n, cell.p, cell.m, cell.lambda, static_cast<int>(c.prior), trial);

    auto row_at = [&](std::size_t k) -> ResultRow& { return rows[(ci * K + k) * T + static_cast<std::size_t>(trial)]; };
    for (std::size_t k = 0; k < K; ++k) {
      ResultRow& row = row_at(k);
      row.gamma = cell.gamma;
      row.beta = cell.beta;
      row.lambda = cell.lambda;
      row.kernel = kernels[k].label;
      row.trial = trial;
      row.seed = seed;
      row.theory_lambda = theory[ci * K + k].lambda;
      row.theory_cos2 = theory[ci * K + k].cos2;
      if (kernels[k].spec && (kernels[k].spec->kind() == KernelKind::soft || kernels[k].spec->kind() == KernelKind::hard))
        row.t = kernels[k].spec->threshold();
    }

    SpikeVector v;
    SampleCov data;
    try {
      ModelParams params{cell.n, cell.p, cell.m, cell.lambda, c.prior, seed};
      v = make_spike(cell.p, cell.m, c.prior, seed);
      data = sample_covariance(params, v);
    } catch (const std::exception& e) {
      for (std::size_t k = 0; k < K; ++k) row_at(k).error = std::string("data: ") + e.what();
      return;
    }

    for (std::size_t k = 0; k < K; ++k) {
      ResultRow& row = row_at(k);
      const auto start = std::chrono::steady_clock::now();
      try {
        switch (kernels[k].method) {
          case Method::kernel: {
            fill_estimate(row, run_gct(data, cell.n, *kernels[k].spec, &v, est_opts));
            set_detection(row, theory[ci * K + k].edge, theory[ci * K + k].eps);
            break;
          }
          case Method::pca: {
            fill_estimate(row, pca(data, cell.n, &v, est_opts));
            set_detection(row, theory[ci * K + k].edge, theory[ci * K + k].eps);
            break;
          }
          case Method::adaptive: {
            const AdaptiveResult ar = adaptive_threshold(data, cell.n, c.t_grid, &v, est_opts);
            fill_estimate(row, ar.estimate);
            row.t = ar.t_hat;
            const KernelSpec chosen = KernelSpec::soft(ar.t_hat);
            const double eps = c.detect_eps ? *c.detect_eps
                                            : half_gap(chosen, cell.gamma, cell.beta,
                                                       c.detect_lambda.value_or(cell.lambda), theory_opts);
            set_detection(row, noise_law(chosen, cell.gamma).lambda_plus, eps);
            break;
          }
        }
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      if (c.timing)
        row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  });
  return rows;
}

std::string summarize(const ExperimentConfig& c, const std::vector<ResultRow>& rows) {
  using nlohmann::json;
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json doc;
  doc["version"] = GCT_VERSION;
  doc["config"] = json::parse(config_to_json(c));
  json cells = json::array();

  std::size_t i = 0;
  while (i < rows.size()) {
    const std::size_t j = std::min(rows.size(), i + static_cast<std::size_t>(std::max(c.trials, 1)));
    json cell;
    cell["gamma"] = rows[i].gamma;
    cell["beta"] = rows[i].beta;
    cell["lambda"] = rows[i].lambda;
    cell["kernel"] = rows[i].kernel;
    cell["trials"] = j - i;
    int failed = 0;
    for (std::size_t r = i; r < j; ++r) failed += rows[r].error.empty() ? 0 : 1;
    cell["failed"] = failed;
    cell["theory_lambda"] = num(rows[i].theory_lambda);
    cell["theory_cos2"] = num(rows[i].theory_cos2);

    const std::vector<std::pair<const char*, std::function<double(const ResultRow&)>>> fields = {
        {"lambda1", [](const ResultRow& r) { return r.lambda1; }},
        {"lambda2", [](const ResultRow& r) { return r.lambda2; }},
        {"gap", [](const ResultRow& r) { return r.gap; }},
        {"cos2", [](const ResultRow& r) { return r.cos2; }},
        {"t", [](const ResultRow& r) { return r.t; }},
        {"detected", [](const ResultRow& r) { return r.detected ? (*r.detected ? 1.0 : 0.0) : kNaN; }},
        {"support_score", [](const ResultRow& r) { return r.support_score; }},
        {"exact_recovery", [](const ResultRow& r) { return r.exact_recovery ? (*r.exact_recovery ? 1.0 : 0.0) : kNaN; }},
        {"runtime_ms", [](const ResultRow& r) { return r.runtime_ms; }},
    };
    json mean = json::object();
    json stderr_ = json::object();
    json count = json::object();
    for (const auto& [name, get] : fields) {
      std::vector<double> xs;
      for (std::size_t r = i; r < j; ++r) {
        const double x = get(rows[r]);
        if (std::isfinite(x)) xs.push_back(x);
      }
      count[name] = xs.size();
      if (xs.empty()) {
        mean[name] = nullptr;
        stderr_[name] = nullptr;
        continue;
      }
      const double mu = mean_of(xs);
      mean[name] = mu;
      if (xs.size() < 2) {
        stderr_[name] = nullptr;
        continue;
      }
      double ss = 0.0;
      for (double x : xs) ss += (x - mu) * (x - mu);
      stderr_[name] = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    cell["mean"] = mean;
    cell["stderr"] = stderr_;
    cell["count"] = count;
    cells.push_back(cell);
    i = j;
  }
  doc["cells"] = cells;
  return doc.dump(2) + "\n";
}

CsvTable theory_curve_table(const ExperimentConfig& c) {
  CsvTable table;
  table.header = {"gamma", "beta", "lambda_star", "lambda_s_star", "t_star", "a1_star"};
  const std::vector<double> grid = c.t_grid.empty() ? default_t_grid() : c.t_grid;
  std::vector<std::pair<double, double>> jobs;
  for (double g : c.gamma)
    for (double b : c.beta) jobs.emplace_back(g, b);
  std::vector<std::vector<std::string>> rows(jobs.size());
  parallel_for(jobs.size(), resolve_threads(c.threads), [&](std::size_t i) {
    const auto [g, b] = jobs[i];
    const TransitionCurve curve = transition_curve(g, {b}, grid);
    const TransitionPoint& pt = curve.points.front();
    rows[i] = {format_float(g), format_float(b), format_float(pt.lambda_star), format_float(pt.lambda_s_star),
               format_float(pt.t_star), format_float(pt.a1_star)};
  });
  table.rows = std::move(rows);
  return table;
}

CsvTable phase_diagram_table(const ExperimentConfig& c) {
  CsvTable table;
  table.header = {"gamma",      "beta",          "lambda",      "kernel",      "regime", "tau",
                  "lambda_plus", "s_plus",       "theory_lambda", "theory_cos2", "lambda_star"};
  TheoryOptions opts;
  opts.exact_tau = c.exact_tau;
  for (double g : c.gamma) {
    for (double b : c.beta) {
      for (const auto& text : c.kernels) {
        const KernelSpec spec = KernelSpec::parse(text);
        double lstar = kNaN;
        try {
          lstar = lambda_star_kernel(spec, g, b, 1e-10, opts);
        } catch (const Error&) {
        }
        for (double l : c.lambda) {
          std::vector<std::string> row = {format_float(g), format_float(b), format_float(l), spec.label()};
          const BulkLaw law = noise_law(spec, g);
          if (l == 1.0) {
            row.insert(row.end(), {"null", format_float(0.0), format_float(law.lambda_plus), "",
                                   format_float(law.lambda_plus), format_float(0.0), format_float(lstar)});
          } else {
            try {
              const TheoryResult r = spike_forward(spec, g, b, l, opts);
              row.insert(row.end(), {std::string(to_string(r.regime)), format_float(r.tau),
                                     format_float(r.bulk.lambda_plus), r.s_plus ? format_float(*r.s_plus) : "",
                                     format_float(r.lambda_limit), format_float(r.cos2_limit), format_float(lstar)});
            } catch (const Error&) {
              row.insert(row.end(), {"error", "", format_float(law.lambda_plus), "", "", "", format_float(lstar)});
            }
          }
          table.rows.push_back(std::move(row));
        }
      }
    }
  }
  return table;
}

CsvTable diagnose_table(const ExperimentConfig& c, int threads, int* failures) {
  CsvTable table;
  table.header = {"n",       "p", "gamma", "kernel", "z",      "trial",   "seed",   "inner",
                  "s",       "s_breve", "s_ring", "dev_r", "dev_sr", "dev_srs", "error"};
  struct Job {
    int n;
    int p;
    double gamma;
    std::size_t kernel;
    int trial;
  };
  std::vector<KernelSpec> specs;
  for (const auto& text : c.kernels) specs.push_back(KernelSpec::parse(text));
  std::vector<Job> jobs;
  for (int n : c.n)
    for (double g : c.gamma)
      for (std::size_t k = 0; k < specs.size(); ++k)
        for (int t = 0; t < c.trials; ++t) jobs.push_back({n, static_cast<int>(std::lround(g * n)), g, k, t});

  std::vector<std::vector<std::string>> rows(jobs.size());
  std::atomic<int> failed{0};
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const KernelSpec& spec = specs[job.kernel];
    const std::uint64_t seed = cell_seed(c.base_seed, job.n, job.p, 0, 1.0, 0, job.trial);
    std::vector<std::string>& row = rows[i];
    row = {std::to_string(job.n), std::to_string(job.p), format_float(static_cast<double>(job.p) / job.n),
           spec.label()};
    try {
      const double gamma = static_cast<double>(job.p) / job.n;
      const double z = noise_law(spec, gamma).lambda_plus + c.z_offset;
      CounterRng rng(seed, 2);
      Eigen::VectorXd u(job.p);
      Eigen::VectorXd w(job.p);
      rng.fill_normal(std::span<double>(u.data(), static_cast<std::size_t>(job.p)));
      u.normalize();
      if (c.pair == "equal") {
        w = u;
      } else {
        rng.fill_normal(std::span<double>(w.data(), static_cast<std::size_t>(job.p)));
        w -= w.dot(u) * u;
        w.normalize();
      }
      const QuadraticFormCheck q = quadratic_form_check(job.n, job.p, spec, z, u, w, seed);
      row.insert(row.end(), {format_float(z), std::to_string(job.trial), std::to_string(seed), format_float(q.inner),
                             format_float(q.s), format_float(q.s_breve), format_float(q.s_ring), format_float(q.dev_r),
                             format_float(q.dev_sr), format_float(q.dev_srs), ""});
    } catch (const std::exception& e) {
      row.resize(4);
      row.insert(row.end(), {"", std::to_string(job.trial), std::to_string(seed), "", "", "", "", "", "", "", e.what()});
      failed.fetch_add(1);
    }
  });
  table.rows = std::move(rows);
  if (failures) *failures = failed.load();
  return table;
}

RunOutput run(const ExperimentConfig& c, int threads) {
  c.validate();
  RunOutput out;
  switch (c.mode) {
    case Mode::simulate:
    case Mode::recover: {
      const std::vector<ResultRow> rows = run_trials(c, threads);
      out.table = rows_to_table(rows);
      out.summary_json = summarize(c, rows);
      for (const auto& r : rows) out.failures += r.error.empty() ? 0 : 1;
      break;
    }
    case Mode::theory_curve:
      out.table = theory_curve_table(c);
      break;
    case Mode::phase_diagram:
      out.table = phase_diagram_table(c);
      break;
    case Mode::diagnose:
      out.table = diagnose_table(c, threads, &out.failures);
      break;
  }
  if (out.summary_json.empty()) {
    nlohmann::json doc;
    doc["version"] = GCT_VERSION;
    doc["config"] = nlohmann::json::parse(config_to_json(c));
    doc["rows"] = out.table.rows.size();
    doc["failures"] = out.failures;
    out.summary_json = doc.dump(2) + "\n";
  }
  return out;
}

}  // namespace gct
