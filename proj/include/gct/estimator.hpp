#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gct/eigensolver.hpp"
#include "gct/kernels.hpp"
#include "gct/model.hpp"
#include "gct/theory.hpp"

namespace gct {

/// K_ij = f(sqrt(n) Y_ij)/sqrt(n) off the diagonal, K_ii = 0.
struct KernelMatrix {
  Eigen::MatrixXd K;
  int n = 0;
};

/// Only the upper triangle of Y is read; the result is mirrored, so it is
/// exactly symmetric. Throws NumericError naming (i, j) on a non-finite entry.
KernelMatrix kernel_matrix(const Eigen::MatrixXd& Y, int n, const KernelSpec& spec);

struct SpectralEstimate {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  Eigen::VectorXd u1;
  /// <u1, v>^2 when a reference spike was supplied, NaN otherwise.
  double cos2 = std::numeric_limits<double>::quiet_NaN();
  /// (lambda1 - lambda2)/lambda2, NaN when lambda2 <= 0.
  double gap = std::numeric_limits<double>::quiet_NaN();
  std::optional<Eigen::VectorXd> v_hat;
  std::optional<double> support_score;
  bool exact_recovery = false;
};

struct EstimatorOptions {
  double eps_exponent = 0.375;
  EigOptions eig;
};

/// Top two eigenpairs of K(f). With a reference spike, u1 is signed so that
/// <u1, v> >= 0 and cos2 / support metrics are filled in.
SpectralEstimate run_gct(const SampleCov& data, int n, const KernelSpec& spec, const SpikeVector* v_ref = nullptr,
                     const EstimatorOptions& options = {});

/// Baseline: top eigenpair of the sample covariance Y itself.
SpectralEstimate pca(const SampleCov& data, int n, const SpikeVector* v_ref = nullptr,
                     const EstimatorOptions& options = {});

struct AdaptiveResult {
  double t_hat = 0.0;
  SpectralEstimate estimate;
  std::vector<double> gaps;  // one per grid point, in grid order
};

/// Soft threshold with t chosen to maximize the normalized spectral gap;
/// NaN gaps are skipped and ties go to the smaller t.
AdaptiveResult adaptive_threshold(const SampleCov& data, int n, const std::vector<double>& t_grid,
                                  const SpikeVector* v_ref = nullptr, const EstimatorOptions& options = {});

/// lambda1 > lambda_plus + eps.
bool detect(const SpectralEstimate& estimate, const BulkLaw& bulk, double eps);

struct SupportEstimate {
  Eigen::VectorXd v_hat;  // normalized sign vector, zero when empty
  std::vector<int> support;
  bool empty = true;
};

/// sign(eta_h(u1, n^-eps)) normalized to unit length.
SupportEstimate recover_support(const Eigen::VectorXd& u1, int n, double eps_exponent = 0.375);

/// (|supp(v_hat) & supp(v)| - |supp(v_hat) \ supp(v)|) / m.
double support_score(const Eigen::VectorXd& v_hat, const SpikeVector& v);

/// Same support and the same sign on it.
bool exact_recovery(const Eigen::VectorXd& v_hat, const SpikeVector& v);

/// s(z)/(1 + a1 gamma s(z)).
double s_breve(double s, double a1, double gamma);
/// s_breve (1 + gamma - a1 gamma s_breve).
double s_ring(double s, double a1, double gamma);

struct QuadraticFormCheck {
  double z = 0.0;
  double inner = 0.0;  // <u, w>
  double s = 0.0;
  double s_breve = 0.0;
  double s_ring = 0.0;
  double dev_r = 0.0;    // |u'R w - <u,w> s|
  double dev_sr = 0.0;   // |u'S R w - <u,w> s_breve|
  double dev_srs = 0.0;  // |u'S R S w - <u,w> s_ring|
};

/// Pure-noise resolvent quadratic forms against their deterministic
/// equivalents, R = (K_0 - z)^{-1}. z must lie above the edge of the noise law.
QuadraticFormCheck quadratic_form_check(int n, int p, const KernelSpec& spec, double z, const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& w, std::uint64_t seed);

/// Same for every column pair (U.col(k), W.col(k)), sharing one noise draw and
/// one factorization.
std::vector<QuadraticFormCheck> quadratic_form_checks(int n, int p, const KernelSpec& spec, double z,
                                                      const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                                                      std::uint64_t seed);

}  // namespace gct
