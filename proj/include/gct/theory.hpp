#pragma once

#include <complex>
#include <optional>
#include <string_view>
#include <vector>

#include "gct/kernels.hpp"

namespace gct {

/// Limiting noise spectrum of K_0(f): its Stieltjes transform is characterized
/// by (a1, nu2, gamma); s0 is the critical point of psi and lambda_plus = psi(s0)
/// the upper edge.
struct BulkLaw {
  double a1 = 0.0;
  double nu2 = 0.0;
  double gamma = 0.0;
  double s0 = 0.0;
  double lambda_plus = 0.0;
};

enum class Regime { informative, bulk, wigner_informative, wigner_bulk, bbp_linear };

std::string_view to_string(Regime regime);

/// Asymptotic prediction for the top eigenpair of K(f).
///
/// lambda_limit is stated for K(f) itself (zero diagonal). For the linear
/// kernel c x this is c (lambda + lambda gamma/(lambda-1) - 1) above the BBP
/// point; bbp_limits() gives the sample-covariance values.
struct TheoryResult {
  Regime regime = Regime::bulk;
  double tau = 0.0;
  std::optional<double> s_plus;
  double lambda_limit = 0.0;
  double cos2_limit = 0.0;
  BulkLaw bulk;
  /// theta^2(s_plus) through -s(1 + a1 gamma s) psi'(s) / (a1(lambda+gamma-1) + tau + 2 a1 tau gamma s);
  /// NaN outside the informative regime.
  double theta2_alt = 0.0;

  bool informative() const {
    return regime == Regime::informative || regime == Regime::wigner_informative ||
           regime == Regime::bbp_linear;
  }
};

struct TheoryOptions {
  /// Apply the outlier formulas with their tau -> 0 limit when a nonlinear
  /// kernel has tau = 0 at lambda > 1. Off: such inputs raise DomainError.
  bool allow_tau_zero = false;
  /// Use tau_exact instead of the series truncated at the kernel's degree.
  bool exact_tau = false;
};

/// Top eigenvalue and squared overlap of PCA on the sample covariance.
struct BbpLimits {
  double lambda1 = 0.0;
  double cos2 = 0.0;
};

BbpLimits bbp_limits(double gamma, double lambda);

/// psi(s) = -1/s - a1 (1 - 1/(1 + a1 gamma s)) - gamma (nu2 - a1^2) s.
/// Throws DomainError at s = 0 or 1 + a1 gamma s = 0.
double psi(double s, double a1, double nu2, double gamma);
double psi_prime(double s, double a1, double nu2, double gamma);

/// Stieltjes transform s(z) of the noise law, the solution of
///   -1/s = z + a1 (1 - 1/(1 + a1 gamma s)) + gamma (nu2 - a1^2) s
/// with Im s > 0. Real z must lie above the edge; it is evaluated at
/// z + 1e-9 i and the real part is returned.
std::complex<double> stieltjes(std::complex<double> z, double a1, double nu2, double gamma);
/// Same, starting Newton from a caller-supplied guess (continuation along a path).
std::complex<double> stieltjes(std::complex<double> z, double a1, double nu2, double gamma,
                               std::complex<double> guess);
double stieltjes_real(double x, double a1, double nu2, double gamma);

/// Upper edge of the noise law. For a1 > 0, s0 is the root of psi' in
/// (-1/(a1 gamma), 0); for a1 = 0 the law is a semicircle of radius
/// 2 sqrt(gamma nu2).
BulkLaw bulk_edge(double a1, double nu2, double gamma);
BulkLaw noise_law(const KernelSpec& spec, double gamma);

/// theta^2(x) in its closed form.
double theta2(double x, double a1, double nu2, double gamma, double tau, double lambda);

/// Root of a1 gamma tau s^2 + (a1(lambda+gamma-1) + tau) s + 1 = 0 closest to 0
/// (the outlier location). Continuous at tau = 0.
double s_plus(double a1, double gamma, double tau, double lambda);

TheoryResult spike_forward(const KernelSpec& spec, double gamma, double beta, double lambda,
                           const TheoryOptions& options = {});

/// Transition lambda* of a fixed kernel, accurate to tol. Requires
/// spec.tau_monotone(); UnsupportedKernel otherwise.
double lambda_star_kernel(const KernelSpec& spec, double gamma, double beta, double tol = 1e-10,
                          const TheoryOptions& options = {});

struct SoftTransition {
  double lambda_star = 0.0;
  double t_star = 0.0;
};

/// Minimum over t in t_grid of lambda_star_kernel(soft(t)). With refine set,
/// the best grid cell is polished by golden-section search between its
/// neighbours. Thresholds without a transition are skipped; SolverError if
/// none has one.
SoftTransition lambda_star_soft(double gamma, double beta, const std::vector<double>& t_grid,
                                bool refine = false);
std::vector<double> default_t_grid();

struct OptSearch {
  int a1_points = 60;
  double a1_min = 1e-3;
  int degree = KernelSpec::kDefaultDegree;
  double damping = 0.7;
  double fixed_point_tol = 1e-9;
  int max_iter = 500;
  bool refine = true;
};

struct OptimalTransition {
  double lambda_star = 0.0;
  double a1_star = 0.0;
  KernelSpec kernel = KernelSpec::identity();
};

/// The unit-norm kernel with first coefficient a1 and tail coefficients
/// proportional to (lambda_c - 1)^k / (sqrt(k!) beta^{k-1}), odd k in [3, degree].
KernelSpec optimal_family_kernel(double a1, double lambda_c, double beta, int degree);

/// Transition of the optimal family member with first coefficient a1, found by
/// iterating lambda_c <- lambda*(f(a1, lambda_c)) to its fixed point.
double lambda_star_family(double a1, double gamma, double beta, const OptSearch& search = {});

OptimalTransition lambda_star_opt(double gamma, double beta, const OptSearch& search = {});

/// One row of a transition-curve table.
struct TransitionPoint {
  double beta = 0.0;
  double lambda_star = 0.0;
  double lambda_s_star = 0.0;
  double t_star = 0.0;
  double a1_star = 0.0;
};

struct TransitionCurve {
  double gamma = 0.0;
  std::vector<TransitionPoint> points;
};

TransitionCurve transition_curve(double gamma, const std::vector<double>& betas,
                                 const std::vector<double>& t_grid, const OptSearch& search = {});

/// Noise-law density Im s(x + i eta)/pi on x_grid.
std::vector<double> bulk_density(double a1, double nu2, double gamma, const std::vector<double>& x_grid,
                                 double eta = 1e-4);

}  // namespace gct
