#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "gct/error.hpp"
#include "gct/kernels.hpp"
#include "gct/theory.hpp"

using namespace gct;

namespace {

// Independent transcription of psi' and of the outlier root, used as oracles.
double dpsi(double s, double a1, double nu2, double gamma) {
  const double d = 1.0 + a1 * gamma * s;
  return 1.0 / (s * s) - a1 * a1 * gamma / (d * d) - gamma * (nu2 - a1 * a1);
}

double outlier_root(double a1, double gamma, double tau, double lambda) {
  const double A = a1 * gamma * tau;
  const double B = a1 * (lambda + gamma - 1.0) + tau;
  if (A == 0.0) return -1.0 / B;
  const double disc = B * B - 4.0 * A;
  if (disc < 0.0) return std::nan("");
  const double r1 = (-B + std::sqrt(disc)) / (2.0 * A);
  const double r2 = (-B - std::sqrt(disc)) / (2.0 * A);
  return std::abs(r1) < std::abs(r2) ? r1 : r2;
}

bool informative_oracle(double a1, double nu2, double gamma, double tau, double lambda) {
  const double s = outlier_root(a1, gamma, tau, lambda);
  if (!std::isfinite(s) || s >= 0.0) return false;
  if (a1 > 0.0 && !(s > -1.0 / (a1 * gamma))) return false;
  return dpsi(s, a1, nu2, gamma) > 0.0;
}

double mp_density(double y, double gamma) {
  const double a = std::pow(1.0 - std::sqrt(gamma), 2);
  const double b = std::pow(1.0 + std::sqrt(gamma), 2);
  if (y <= a || y >= b) return 0.0;
  return std::sqrt((b - y) * (y - a)) / (2.0 * std::numbers::pi * gamma * y);
}

}  // namespace

TEST_CASE("bbp limits") {
  const auto r = bbp_limits(0.5, 2.0);
  CHECK(r.lambda1 == doctest::Approx(3.0));
  CHECK(r.cos2 == doctest::Approx(1.0 / 3.0));
  const auto below = bbp_limits(0.5, 1.0 + std::sqrt(0.5));
  CHECK(below.cos2 == 0.0);
  CHECK(below.lambda1 == doctest::Approx(std::pow(1.0 + std::sqrt(0.5), 2)));
}

TEST_CASE("psi derivative matches finite differences") {
  const double h = 1e-5;
  for (double a1 : {0.0, 0.3, 1.0}) {
    const double gamma = 0.7;
    const double nu2 = std::max(1.0, a1 * a1);
    const double lo = a1 > 0.0 ? -1.0 / (a1 * gamma) : -5.0;
    for (int i = 1; i < 20; ++i) {
      const double s = lo * i / 20.0;
      const double fd = (psi(s + h, a1, nu2, gamma) - psi(s - h, a1, nu2, gamma)) / (2.0 * h);
      CHECK(std::abs(psi_prime(s, a1, nu2, gamma) - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
      CHECK(psi_prime(s, a1, nu2, gamma) == doctest::Approx(dpsi(s, a1, nu2, gamma)));
    }
  }
  CHECK_THROWS_AS(psi(0.0, 0.5, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(psi(-1.0 / (0.5 * 0.5), 0.5, 1.0, 0.5), DomainError);
}

TEST_CASE("bulk edges") {
  for (double gamma : {0.25, 0.5, 1.0, 1.5}) {
    const BulkLaw lin = bulk_edge(1.0, 1.0, gamma);
    CHECK(lin.lambda_plus == doctest::Approx(gamma + 2.0 * std::sqrt(gamma)).epsilon(1e-10));
    CHECK(lin.s0 == doctest::Approx(-1.0 / (std::sqrt(gamma) * (1.0 + std::sqrt(gamma)))).epsilon(1e-8));
    const BulkLaw wig = bulk_edge(0.0, 2.0, gamma);
    CHECK(wig.lambda_plus == doctest::Approx(2.0 * std::sqrt(gamma * 2.0)).epsilon(1e-12));
    CHECK(wig.s0 == doctest::Approx(-1.0 / std::sqrt(gamma * 2.0)));
  }
  CHECK(noise_law(KernelSpec::identity(), 1.0).lambda_plus == doctest::Approx(3.0));
  CHECK(noise_law(KernelSpec::identity(), 0.25).lambda_plus == doctest::Approx(1.25));
  const KernelSpec soft = KernelSpec::soft(2.0);
  CHECK(noise_law(soft, 0.5).lambda_plus > 2.0 * std::sqrt(0.5 * soft.nu2()));
}

TEST_CASE("stieltjes transform") {
  SUBCASE("semicircle closed form") {
    const double gamma = 0.5;
    const double nu2 = 1.3;
    for (std::complex<double> z : {std::complex<double>(3.0, 0.1), std::complex<double>(-0.4, 0.5),
                                   std::complex<double>(0.2, 0.01)}) {
      // Branch with Im > 0: s = (-z + sqrt(z^2 - 4 g)) / (2 g), sign chosen by Im.
      const double g = gamma * nu2;
      std::complex<double> root = std::sqrt(z * z - 4.0 * g);
      std::complex<double> s = (-z + root) / (2.0 * g);
      if (s.imag() <= 0.0) s = (-z - root) / (2.0 * g);
      CHECK(std::abs(stieltjes(z, 0.0, nu2, gamma) - s) < 1e-9);
    }
    const double x = 4.0;
    CHECK(stieltjes_real(x, 0.0, nu2, gamma) ==
          doctest::Approx((-x + std::sqrt(x * x - 4 * gamma * nu2)) / (2 * gamma * nu2)).epsilon(1e-8));
  }
  SUBCASE("large |z| asymptotics") {
    const std::complex<double> z(100.0, 0.0);
    const double s = stieltjes_real(100.0, 0.4, 1.0, 0.5);
    CHECK(std::abs(s + 0.01) / 0.01 < 2e-3);
    CHECK(std::abs(stieltjes(std::complex<double>(0.0, 100.0), 0.4, 1.0, 0.5) + 1.0 / std::complex<double>(0.0, 100.0)) <
          2e-3 * 0.01);
    (void)z;
  }
  SUBCASE("defining equation and its cubic form") {
    for (double a1 : {0.2, 0.6, 1.0}) {
      const double gamma = 0.8;
      const double nu2 = 1.0;
      for (std::complex<double> z : {std::complex<double>(0.3, 0.05), std::complex<double>(-1.0, 0.2),
                                     std::complex<double>(2.5, 1e-3)}) {
        const std::complex<double> s = stieltjes(z, a1, nu2, gamma);
        CHECK(s.imag() > 0.0);
        const std::complex<double> rhs = z + a1 * (1.0 - 1.0 / (1.0 + a1 * gamma * s)) + gamma * (nu2 - a1 * a1) * s;
        CHECK(std::abs(-1.0 / s - rhs) < 1e-10 * std::max(1.0, std::abs(rhs)));
        const double c = a1 * gamma;
        const double d = gamma * (nu2 - a1 * a1);
        const std::complex<double> cubic = c * d * s * s * s + (c * z + a1 * c + d) * s * s + (z + c) * s + 1.0;
        CHECK(std::abs(cubic) < 1e-9);
      }
    }
  }
  SUBCASE("real z below the edge is rejected") {
    CHECK_THROWS_AS(stieltjes_real(0.5, 1.0, 1.0, 0.5), DomainError);
  }
}

TEST_CASE("bulk density oracles") {
  SUBCASE("semicircle") {
    const double gamma = 0.5;
    std::vector<double> xs;
    for (int i = 1; i < 40; ++i) xs.push_back(-2 * std::sqrt(gamma) + 4 * std::sqrt(gamma) * i / 40.0);
    const auto dens = bulk_density(0.0, 1.0, gamma, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double exact = std::sqrt(4 * gamma - xs[i] * xs[i]) / (2 * std::numbers::pi * gamma);
      CHECK(std::abs(dens[i] - exact) < 1e-3);
    }
  }
  SUBCASE("shifted Marchenko-Pastur") {
    const double gamma = 0.5;
    const double a = std::pow(1 - std::sqrt(gamma), 2);
    const double b = std::pow(1 + std::sqrt(gamma), 2);
    std::vector<double> xs;
    for (int i = 1; i < 40; ++i) xs.push_back(a - 1.0 + (b - a) * i / 40.0);
    const auto dens = bulk_density(1.0, 1.0, gamma, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(dens[i] - mp_density(xs[i] + 1.0, gamma)) < 1e-3);
  }
  SUBCASE("no mass above the edge") {
    const KernelSpec f = KernelSpec::soft(2.0);
    const BulkLaw law = noise_law(f, 0.5);
    const auto dens = bulk_density(law.a1, law.nu2, 0.5, {law.lambda_plus + 0.05, law.lambda_plus + 0.5}, 1e-5);
    CHECK(dens[0] < 1e-3);
    CHECK(dens[1] < 1e-3);
  }
}

TEST_CASE("spike_forward") {
  SUBCASE("identity kernel reduces to the sample-covariance limits shifted by the diagonal") {
    const TheoryResult r = spike_forward(KernelSpec::identity(), 0.5, 0.25, 2.0);
    CHECK(r.regime == Regime::bbp_linear);
    CHECK(r.lambda_limit + 1.0 == doctest::Approx(2.0 + 2.0 * 0.5 / 1.0));
    CHECK(r.cos2_limit == doctest::Approx((1.0 - 0.5) / (1.0 + 0.5)));
    const TheoryResult at = spike_forward(KernelSpec::identity(), 0.5, 0.25, 1.0 + std::sqrt(0.5));
    CHECK(at.regime == Regime::bulk);
    CHECK(at.cos2_limit == 0.0);
  }
  SUBCASE("a1 = 0 kernel at tau = 2 sqrt(gamma) ||f||") {
    const double gamma = 0.5;
    const KernelSpec h3 = KernelSpec::parse("hermite:a3=1");
    const double lambda = 1.0 + std::cbrt(2.0 * std::sqrt(gamma) * std::sqrt(6.0));
    const TheoryResult r = spike_forward(h3, gamma, 1.0, lambda);
    CHECK(r.tau == doctest::Approx(2.0 * std::sqrt(gamma)));
    CHECK(r.regime == Regime::wigner_informative);
    CHECK(r.cos2_limit == doctest::Approx(0.75));
  }
  SUBCASE("outlier root satisfies the master equation") {
    const KernelSpec f = KernelSpec::soft(2.0);
    const double gamma = 0.5;
    const double beta = 0.246;
    for (double lambda : {1.5, 1.6, 1.75, 1.9}) {
      const TheoryResult r = spike_forward(f, gamma, beta, lambda);
      REQUIRE(r.informative());
      const double s = *r.s_plus;
      const double a1 = f.a1();
      CHECK(std::abs(1.0 + r.tau * s + a1 * s * (lambda + gamma + r.tau * gamma * s - 1.0)) < 1e-9);
      CHECK(s == doctest::Approx(outlier_root(a1, gamma, r.tau, lambda)));
      CHECK(r.lambda_limit == doctest::Approx(psi(s, a1, f.nu2(), gamma)));
      CHECK(r.cos2_limit == doctest::Approx(r.theta2_alt).epsilon(1e-9));
      CHECK(r.lambda_limit > r.bulk.lambda_plus);
    }
  }
  SUBCASE("bulk regime reports the edge") {
    const TheoryResult r = spike_forward(KernelSpec::soft(2.0), 0.5, 0.246, 1.1);
    CHECK(r.regime == Regime::bulk);
    CHECK(r.cos2_limit == 0.0);
    CHECK(r.lambda_limit == doctest::Approx(r.bulk.lambda_plus));
  }
  SUBCASE("lambda = 1 is outside the domain") {
    CHECK_THROWS_AS(spike_forward(KernelSpec::soft(2.0), 0.5, 0.246, 1.0), DomainError);
  }
}

TEST_CASE("transition of a fixed kernel") {
  CHECK(lambda_star_kernel(KernelSpec::identity(), 0.5, 0.25) == doctest::Approx(1.0 + std::sqrt(0.5)));
  const KernelSpec f = KernelSpec::soft(2.0);
  const double ls = lambda_star_kernel(f, 0.5, 0.25);
  CHECK(ls < 1.0 + std::sqrt(0.5));
  CHECK(spike_forward(f, 0.5, 0.25, ls + 1e-3).informative());
  CHECK_FALSE(spike_forward(f, 0.5, 0.25, ls - 1e-3).informative());
  // Direct oracle: first informative lambda on a fine grid.
  double first = 0.0;
  for (double l = 1.001; l < 2.0; l += 1e-4) {
    if (informative_oracle(f.a1(), f.nu2(), 0.5, tau(f, 0.25, l), l)) {
      first = l;
      break;
    }
  }
  CHECK(std::abs(first - ls) < 2e-4);
  CHECK_THROWS_AS(lambda_star_kernel(KernelSpec::parse("hermite:a1=1,a3=-0.3"), 0.5, 0.25), UnsupportedKernel);
}

TEST_CASE("soft-threshold transition") {
  CHECK(lambda_star_soft(0.5, 0.25, {0.0}).lambda_star == doctest::Approx(1.0 + std::sqrt(0.5)));
  const auto coarse = lambda_star_soft(0.5, 0.25, {1.0, 2.0, 3.0});
  const auto fine = lambda_star_soft(0.5, 0.25, {1.0, 1.5, 2.0, 2.5, 3.0});
  CHECK(fine.lambda_star <= coarse.lambda_star);
  const auto refined = lambda_star_soft(0.5, 0.25, default_t_grid(), true);
  CHECK(refined.lambda_star <= lambda_star_soft(0.5, 0.25, default_t_grid()).lambda_star + 1e-12);
  CHECK(refined.lambda_star == doctest::Approx(lambda_star_kernel(KernelSpec::soft(refined.t_star), 0.5, 0.25)));
  const auto large_beta = lambda_star_soft(0.5, 5.0, default_t_grid(), true);
  CHECK(std::abs(large_beta.lambda_star - (1.0 + std::sqrt(0.5))) < 0.05);
  // Truncated tau of soft(0.1) at beta = 0.1 never turns informative; it is skipped.
  CHECK_THROWS_AS(lambda_star_kernel(KernelSpec::soft(0.1), 0.5, 0.1), SolverError);
  const auto skip = lambda_star_soft(0.5, 0.1, {0.1, 3.5});
  CHECK(skip.t_star == 3.5);
  CHECK_THROWS_AS(lambda_star_soft(0.5, 0.1, {0.1}), SolverError);
}

TEST_CASE("optimal kernel transition") {
  const double gamma = 1.0;
  const double beta = 0.5;
  const OptimalTransition opt = lambda_star_opt(gamma, beta);
  const SoftTransition soft = lambda_star_soft(gamma, beta, default_t_grid(), true);
  CHECK(opt.lambda_star <= soft.lambda_star + 1e-6);
  CHECK(soft.lambda_star - opt.lambda_star < 0.05);
  CHECK(opt.kernel.nu2() == doctest::Approx(1.0));
  CHECK(opt.kernel.a1() == doctest::Approx(opt.a1_star));

  // Oracle: for each a1 the best unit-norm kernel of degree 21 attains the
  // Cauchy-Schwarz bound on tau; scan a1 and lambda directly.
  auto tau_cs = [&](double a1, double lambda) {
    double w2 = 0.0;
    for (int k = 3; k <= 21; k += 2) w2 += std::pow(tau_weight(k, beta, lambda), 2);
    return std::sqrt(1.0 - a1 * a1) * std::sqrt(w2);
  };
  double best = 1e9;
  for (int i = 1; i <= 400; ++i) {
    const double a1 = i / 400.0;
    double lo = 1.0 + 1e-9;
    double hi = 1.0 + std::sqrt(gamma) + 1e-9;
    if (informative_oracle(a1, 1.0, gamma, tau_cs(a1, lo), lo)) {
      best = std::min(best, lo);
      continue;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (informative_oracle(a1, 1.0, gamma, tau_cs(a1, mid), mid) ? hi : lo) = mid;
    }
    best = std::min(best, hi);
  }
  CHECK(opt.lambda_star == doctest::Approx(best).epsilon(2e-4));
}

TEST_CASE("transition curves") {
  const std::vector<double> betas = {0.25, 0.5, 1.0, 2.0};
  const TransitionCurve curve = transition_curve(1.0, betas, default_t_grid());
  REQUIRE(curve.points.size() == betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    const auto& pt = curve.points[i];
    CHECK(pt.beta == betas[i]);
    CHECK(pt.lambda_star <= 2.0 + 1e-9);
    CHECK(pt.lambda_s_star - pt.lambda_star >= -1e-6);
    CHECK(pt.lambda_s_star - pt.lambda_star < 0.05);
    if (i > 0) {
      CHECK(pt.lambda_star > curve.points[i - 1].lambda_star);
      CHECK(pt.lambda_s_star > curve.points[i - 1].lambda_s_star);
    }
  }
}
