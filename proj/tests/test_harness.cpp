#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "gct/harness.hpp"
#include "gct/io.hpp"
#include "gct/theory.hpp"

using namespace gct;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.mode = Mode::simulate;
  c.n = {400};
  c.p = {200};
  c.m = {6};
  c.lambda = {1.0, 2.5};
  c.kernels = {"soft:t=1.5", "pca", "adaptive"};
  c.t_grid = {0.5, 1.0, 1.5};
  c.trials = 3;
  c.base_seed = 11;
  return c;
}

}  // namespace

TEST_CASE("stable hash") {
  CHECK(stable_hash(2000, 1000, 11, 1.5, 0, 3) == stable_hash(2000, 1000, 11, 1.5, 0, 3));
  CHECK(stable_hash(2000, 1000, 11, 1.5, 0, 3) != stable_hash(2000, 1000, 11, 1.5, 0, 4));
  CHECK(stable_hash(2000, 1000, 11, 1.5, 0, 3) != stable_hash(2000, 1000, 11, 1.6, 0, 3));
  CHECK(cell_seed(5, 1, 2, 3, 1.0, 0, 0) == (5 ^ stable_hash(1, 2, 3, 1.0, 0, 0)));
}

TEST_CASE("thread resolution") {
  CHECK(resolve_threads(3) == 3);
  setenv("GCT_LAB_THREADS", "2", 1);
  CHECK(resolve_threads(0) == 2);
  unsetenv("GCT_LAB_THREADS");
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("result table schema") {
  const CsvTable empty = rows_to_table({});
  CHECK(to_csv(empty) ==
        "gamma,beta,lambda,kernel,t,trial,seed,lambda1,lambda2,gap,cos2,detected,support_score,"
        "exact_recovery,theory_lambda,theory_cos2,runtime_ms,error\n");
  ResultRow row;
  row.kernel = "soft:t=2";
  const CsvTable one = rows_to_table({row});
  CHECK(one.rows[0][one.column("cos2")].empty());
  CHECK(one.rows[0][one.column("detected")].empty());
}

TEST_CASE("simulate runs are deterministic and thread invariant") {
  const ExperimentConfig c = small_config();
  const RunOutput a = run(c, 1);
  const RunOutput b = run(c, 1);
  const RunOutput d = run(c, 3);
  CHECK(a.failures == 0);
  CHECK(to_csv(a.table) == to_csv(b.table));
  CHECK(to_csv(a.table) == to_csv(d.table));
  CHECK(a.summary_json == d.summary_json);

  REQUIRE(a.table.rows.size() == 2 * 3 * 3);
  const auto col = [&](const char* name) { return a.table.column(name); };
  // Order: lambda cell, then kernel, then trial.
  CHECK(a.table.rows[0][col("kernel")] == "soft:t=1.5");
  CHECK(a.table.rows[3][col("kernel")] == "pca");
  CHECK(a.table.rows[6][col("kernel")] == "adaptive");
  CHECK(a.table.rows[2][col("trial")] == "2");
  CHECK(a.table.rows[9][col("lambda")] == "2.5");
  // The same data feed every kernel of a trial.
  CHECK(a.table.rows[0][col("seed")] == a.table.rows[3][col("seed")]);
  CHECK(a.table.rows[0][col("seed")] != a.table.rows[1][col("seed")]);

  // Theory columns.
  const double gamma = 0.5;
  const double beta = 6.0 / std::sqrt(400.0);
  const TheoryResult th = spike_forward(KernelSpec::soft(1.5), gamma, beta, 2.5);
  CHECK(parse_float(a.table.rows[9][col("theory_cos2")]) == doctest::Approx(th.cos2_limit).epsilon(1e-8));
  CHECK(parse_float(a.table.rows[12][col("theory_cos2")]) == doctest::Approx(bbp_limits(gamma, 2.5).cos2).epsilon(1e-8));
  CHECK(a.table.rows[15][col("theory_cos2")].empty());
  CHECK(parse_float(a.table.rows[0][col("theory_cos2")]) == 0.0);
  // Adaptive rows carry the selected threshold.
  CHECK(!a.table.rows[15][col("t")].empty());
  CHECK(a.table.rows[0][col("t")] == "1.5");
  CHECK(a.table.rows[3][col("t")].empty());
  CHECK(a.table.rows[0][col("runtime_ms")].empty());
}

TEST_CASE("summary means equal the row means") {
  const ExperimentConfig c = small_config();
  const std::vector<ResultRow> rows = run_trials(c, 2);
  const auto doc = nlohmann::json::parse(summarize(c, rows));
  CHECK(doc["version"] == GCT_VERSION);
  CHECK(doc["config"]["base_seed"] == 11);
  const auto& cells = doc["cells"];
  REQUIRE(cells.size() == 6);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    double sum = 0.0;
    for (int t = 0; t < 3; ++t) sum += rows[k * 3 + t].lambda1;
    CHECK(std::abs(cells[k]["mean"]["lambda1"].get<double>() - sum / 3.0) < 1e-12);
    CHECK(cells[k]["trials"] == 3);
    CHECK(cells[k]["kernel"] == rows[k * 3].kernel);
  }
}

TEST_CASE("trial errors are recorded, not thrown") {
  ExperimentConfig c = small_config();
  c.kernels = {"poly:c1=1,c3=1e306"};
  c.lambda = {2.0};
  c.trials = 2;
  const RunOutput out = run(c, 1);
  CHECK(out.failures == 2);
  CHECK(!out.table.rows[0][out.table.column("error")].empty());
}

TEST_CASE("theory-curve and phase-diagram tables") {
  ExperimentConfig c;
  c.mode = Mode::theory_curve;
  c.gamma = {1.0};
  c.beta = {0.5, 2.0};
  const RunOutput tc = run(c, 1);
  CHECK(tc.table.header == std::vector<std::string>{"gamma", "beta", "lambda_star", "lambda_s_star", "t_star", "a1_star"});
  REQUIRE(tc.table.rows.size() == 2);
  CHECK(parse_float(tc.table.rows[0][2]) < parse_float(tc.table.rows[1][2]));
  CHECK(parse_float(tc.table.rows[0][3]) >= parse_float(tc.table.rows[0][2]) - 1e-6);

  ExperimentConfig pd;
  pd.mode = Mode::phase_diagram;
  pd.gamma = {0.5};
  pd.beta = {0.25};
  pd.lambda = {1.0, 1.2, 1.8};
  pd.kernels = {"soft:t=2", "identity"};
  const RunOutput out = run(pd, 1);
  REQUIRE(out.table.rows.size() == 6);
  const auto regime = out.table.column("regime");
  CHECK(out.table.rows[0][regime] == "null");
  CHECK(out.table.rows[1][regime] == "bulk");
  CHECK(out.table.rows[2][regime] == "informative");
  CHECK(out.table.rows[5][regime] == "bbp_linear");
}

TEST_CASE("diagnose table") {
  ExperimentConfig c;
  c.mode = Mode::diagnose;
  c.n = {400};
  c.gamma = {0.5};
  c.kernels = {"soft:t=2,series=1"};
  c.trials = 2;
  c.pair = "orthogonal";
  const RunOutput out = run(c, 2);
  CHECK(out.failures == 0);
  REQUIRE(out.table.rows.size() == 2);
  CHECK(std::abs(parse_float(out.table.rows[0][out.table.column("inner")])) < 1e-12);
  CHECK(parse_float(out.table.rows[0][out.table.column("dev_r")]) < 10.0 / std::sqrt(400.0));
}
