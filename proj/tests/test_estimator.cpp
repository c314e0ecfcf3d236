#include <doctest.h>

#include <cmath>

#include "gct/error.hpp"
#include "gct/estimator.hpp"
#include "gct/model.hpp"
#include "gct/rng.hpp"
#include "gct/theory.hpp"

using namespace gct;

namespace {

SampleCov draw(int n, int p, int m, double lambda, std::uint64_t seed, SpikeVector& v) {
  v = make_spike(p, m, SpikePrior::rademacher, seed);
  return sample_covariance({n, p, m, lambda, SpikePrior::rademacher, seed}, v);
}

}  // namespace

TEST_CASE("kernel matrix") {
  SpikeVector v;
  const SampleCov data = draw(200, 60, 5, 3.0, 4, v);
  const KernelMatrix id = kernel_matrix(data.Y, 200, KernelSpec::identity());
  for (int i = 0; i < 60; ++i) {
    CHECK(id.K(i, i) == 0.0);
    for (int j = 0; j < 60; ++j)
      if (i != j) CHECK(id.K(i, j) == doctest::Approx(data.Y(i, j)).epsilon(1e-14));
  }
  const KernelMatrix soft = kernel_matrix(data.Y, 200, KernelSpec::soft(2.0));
  CHECK((soft.K - soft.K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(soft.K.diagonal().cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < i; ++j) {
      const double x = std::sqrt(200.0) * data.Y(i, j);
      CHECK(soft.K(i, j) == doctest::Approx(soft_threshold(x, 2.0) / std::sqrt(200.0)).epsilon(1e-14));
    }
  Eigen::MatrixXd off = data.Y;
  off.diagonal().setZero();
  const double big = std::sqrt(200.0) * off.cwiseAbs().maxCoeff() + 1.0;
  CHECK(kernel_matrix(data.Y, 200, KernelSpec::soft(big)).K.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity kernel reproduces the BBP outlier without the diagonal") {
  const int n = 2000;
  const double gamma = 0.5;
  const double lambda = 2.5;
  SpikeVector v;
  const SampleCov data = draw(n, 1000, 11, lambda, 31, v);
  const SpectralEstimate est = run_gct(data, n, KernelSpec::identity(), &v);
  const double bbp = lambda + lambda * gamma / (lambda - 1.0);
  CHECK(std::abs(est.lambda1 - (bbp - 1.0)) < 5.0 / std::sqrt(static_cast<double>(n)));
  const SpectralEstimate full = pca(data, n, &v);
  CHECK(std::abs(full.lambda1 - bbp) < 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("no spike: overlap with an unrelated unit vector is at the 1/p scale") {
  const int n = 600;
  const int p = 300;
  SpikeVector v;
  const SampleCov data = draw(n, p, 10, 1.0, 8, v);
  const SpikeVector probe = make_spike(p, p, SpikePrior::uniform_shell, 99);
  for (const char* k : {"soft:t=2", "hard:t=1.5", "identity"}) {
    const SpectralEstimate est = run_gct(data, n, KernelSpec::parse(k), &probe);
    CHECK(est.cos2 < 10.0 / p);
  }
}

TEST_CASE("overlap above the transition tracks the theory") {
  const int n = 2000;
  const int p = 1000;
  const int m = 11;
  const double lambda = 1.85;
  const KernelSpec f = KernelSpec::soft(2.0);
  const TheoryResult th = spike_forward(f, static_cast<double>(p) / n, m / std::sqrt(2000.0), lambda);
  REQUIRE(th.informative());
  double mean = 0.0;
  const int trials = 3;
  for (int s = 0; s < trials; ++s) {
    SpikeVector v;
    const SampleCov data = draw(n, p, m, lambda, 500 + s, v);
    mean += run_gct(data, n, f, &v).cos2 / trials;
  }
  CHECK(std::abs(mean - th.cos2_limit) < 0.08);
}

TEST_CASE("adaptive threshold") {
  const int n = 800;
  SpikeVector v;
  const SampleCov data = draw(n, 400, 7, 2.2, 17, v);
  const AdaptiveResult single = adaptive_threshold(data, n, {1.3}, &v);
  CHECK(single.t_hat == 1.3);
  CHECK(single.estimate.lambda1 == doctest::Approx(run_gct(data, n, KernelSpec::soft(1.3), &v).lambda1));

  const std::vector<double> grid = {0.5, 1.0, 1.5, 2.0, 2.5};
  const AdaptiveResult r = adaptive_threshold(data, n, grid, &v);
  REQUIRE(r.gaps.size() == grid.size());
  double best = -1.0;
  for (double g : r.gaps)
    if (!std::isnan(g)) best = std::max(best, g);
  CHECK(r.estimate.gap == best);
  CHECK_THROWS_AS(adaptive_threshold(data, n, {}, &v), InvalidParameter);
}

TEST_CASE("detection") {
  SpectralEstimate est;
  est.lambda1 = 1.0;
  BulkLaw bulk;
  bulk.lambda_plus = 0.7;
  CHECK(detect(est, bulk, 0.2));
  CHECK_FALSE(detect(est, bulk, 0.3));
  bool previous = true;
  for (double eps = 0.01; eps < 1.0; eps += 0.01) {
    const bool now = detect(est, bulk, eps);
    CHECK((previous || !now));
    previous = now;
  }
  CHECK_THROWS_AS(detect(est, bulk, 0.0), InvalidParameter);
}

TEST_CASE("support recovery") {
  const int n = 2000;
  const int p = 1000;
  const int m = 11;
  const SpikeVector v = make_spike(p, m, SpikePrior::rademacher, 3);
  REQUIRE(1.0 / std::sqrt(static_cast<double>(m)) > std::pow(n, -0.375));

  SUBCASE("exact spike") {
    const SupportEstimate s = recover_support(v.entries, n);
    CHECK_FALSE(s.empty);
    CHECK((s.v_hat - v.entries).norm() < 1e-12);
    CHECK(exact_recovery(s.v_hat, v));
    CHECK(support_score(s.v_hat, v) == doctest::Approx(1.0));
  }
  SUBCASE("noisy overlap") {
    const double theta = 0.5;
    REQUIRE(theta / std::sqrt(static_cast<double>(m)) - 1.0 / std::sqrt(static_cast<double>(n)) >
            std::pow(n, -0.375));
    CounterRng rng(4);
    Eigen::VectorXd u = theta * v.entries;
    for (int i = 0; i < p; ++i) u[i] += (2.0 * rng.uniform() - 1.0) * 0.99 / std::sqrt(static_cast<double>(n));
    const SupportEstimate s = recover_support(u, n);
    CHECK(exact_recovery(s.v_hat, v));
    CHECK(s.support == v.support);
  }
  SUBCASE("everything below the threshold") {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(p, 0.5 * std::pow(n, -0.375));
    const SupportEstimate s = recover_support(u, n);
    CHECK(s.empty);
    CHECK(s.v_hat.norm() == 0.0);
    CHECK(support_score(s.v_hat, v) == 0.0);
    CHECK_FALSE(exact_recovery(s.v_hat, v));
  }
  SUBCASE("disjoint support scores -1") {
    Eigen::VectorXd vh = Eigen::VectorXd::Zero(p);
    int placed = 0;
    for (int i = 0; i < p && placed < m; ++i) {
      if (v.entries[i] == 0.0) {
        vh[i] = 1.0;
        ++placed;
      }
    }
    CHECK(support_score(vh, v) == doctest::Approx(-1.0));
  }
  SUBCASE("wrong sign is not exact") {
    Eigen::VectorXd vh = v.entries;
    vh[v.support[0]] *= -1.0;
    CHECK_FALSE(exact_recovery(vh, v));
    CHECK(support_score(vh, v) == doctest::Approx(1.0));
  }
}

TEST_CASE("resolvent quadratic forms") {
  const KernelSpec f = KernelSpec::parse("soft:t=2,series=1");
  const int n = 1000;
  const int p = 500;
  const double z = noise_law(f, 0.5).lambda_plus + 1.0;
  CounterRng rng(12);
  Eigen::VectorXd u(p);
  Eigen::VectorXd w(p);
  for (int i = 0; i < p; ++i) u[i] = rng.normal();
  for (int i = 0; i < p; ++i) w[i] = rng.normal();
  u.normalize();
  w -= w.dot(u) * u;
  w.normalize();
  const double bound = 10.0 / std::sqrt(static_cast<double>(n));

  const QuadraticFormCheck same = quadratic_form_check(n, p, f, z, u, u, 77);
  CHECK(same.inner == doctest::Approx(1.0));
  CHECK(same.s < 0.0);
  CHECK(same.s_breve == doctest::Approx(s_breve(same.s, f.a1(), 0.5)));
  CHECK(same.s_ring == doctest::Approx(same.s_breve * (1.0 + 0.5 - f.a1() * 0.5 * same.s_breve)));
  CHECK(same.dev_r < bound);
  CHECK(same.dev_sr < bound);
  CHECK(same.dev_srs < bound);

  const QuadraticFormCheck orth = quadratic_form_check(n, p, f, z, u, w, 77);
  CHECK(std::abs(orth.inner) < 1e-12);
  CHECK(orth.dev_r < bound);
  CHECK(orth.dev_sr < bound);
  CHECK(orth.dev_srs < bound);

  CHECK_THROWS_AS(quadratic_form_check(n, p, f, 0.1, u, u, 1), DomainError);
}
