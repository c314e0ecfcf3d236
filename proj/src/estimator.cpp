#include "gct/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gct/error.hpp"
#include "gct/rng.hpp"

namespace gct {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SpectralEstimate from_pairs(const EigenPairs& pairs, int n, const SpikeVector* v_ref,
                            const EstimatorOptions& options) {
  SpectralEstimate est;
  est.lambda1 = pairs.values[0];
  est.lambda2 = pairs.values[1];
  est.u1 = pairs.vectors.col(0);
  est.gap = est.lambda2 > 0.0 ? (est.lambda1 - est.lambda2) / est.lambda2 : kNaN;
  if (v_ref != nullptr) {
    if (v_ref->dim() != est.u1.size()) throw InvalidParameter("reference spike has the wrong dimension");
    const double overlap = est.u1.dot(v_ref->entries);
    if (overlap < 0.0) est.u1 = -est.u1;
    est.cos2 = overlap * overlap;
  }
  const SupportEstimate support = recover_support(est.u1, n, options.eps_exponent);
  est.v_hat = support.v_hat;
  if (v_ref != nullptr) {
    est.support_score = support_score(support.v_hat, *v_ref);
    est.exact_recovery = exact_recovery(support.v_hat, *v_ref);
  }
  return est;
}

}  // namespace

KernelMatrix kernel_matrix(const Eigen::MatrixXd& Y, int n, const KernelSpec& spec) {
  if (Y.rows() != Y.cols()) throw InvalidParameter("kernel_matrix needs a square matrix");
  if (n < 1) throw InvalidParameter("n must be positive");
  const Eigen::Index p = Y.rows();
  const double root = std::sqrt(static_cast<double>(n));
  KernelMatrix out;
  out.n = n;
  out.K.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    out.K(j, j) = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double value = spec(root * Y(i, j)) / root;
      if (!std::isfinite(value))
        throw NumericError("non-finite kernel entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      out.K(i, j) = value;
      out.K(j, i) = value;
    }
  }
  return out;
}

SpectralEstimate run_gct(const SampleCov& data, int n, const KernelSpec& spec, const SpikeVector* v_ref,
                     const EstimatorOptions& options) {
  const KernelMatrix km = kernel_matrix(data.Y, n, spec);
  return from_pairs(top_eigs(km.K, 2, options.eig), n, v_ref, options);
}

SpectralEstimate pca(const SampleCov& data, int n, const SpikeVector* v_ref, const EstimatorOptions& options) {
  return from_pairs(top_eigs(data.Y, 2, options.eig), n, v_ref, options);
}

AdaptiveResult adaptive_threshold(const SampleCov& data, int n, const std::vector<double>& t_grid,
                                  const SpikeVector* v_ref, const EstimatorOptions& options) {
  if (t_grid.empty()) throw InvalidParameter("t grid must be non-empty");
  AdaptiveResult out;
  bool have = false;
  for (double t : t_grid) {
    SpectralEstimate est = run_gct(data, n, KernelSpec::soft(t), v_ref, options);
    out.gaps.push_back(est.gap);
    if (std::isnan(est.gap)) continue;
    const bool better = !have || est.gap > out.estimate.gap || (est.gap == out.estimate.gap && t < out.t_hat);
    if (better) {
      out.t_hat = t;
      out.estimate = std::move(est);
      have = true;
    }
  }
  if (!have) {
    // Every gap undefined: fall back to the smallest threshold.
    const double t = *std::min_element(t_grid.begin(), t_grid.end());
    out.t_hat = t;
    out.estimate = run_gct(data, n, KernelSpec::soft(t), v_ref, options);
  }
  return out;
}

bool detect(const SpectralEstimate& estimate, const BulkLaw& bulk, double eps) {
  if (!(eps > 0.0)) throw InvalidParameter("detection eps must be positive");
  return estimate.lambda1 > bulk.lambda_plus + eps;
}

SupportEstimate recover_support(const Eigen::VectorXd& u1, int n, double eps_exponent) {
  if (!(eps_exponent > 0.25 && eps_exponent < 0.5)) throw InvalidParameter("eps_exponent must lie in (1/4, 1/2)");
  const double level = std::pow(static_cast<double>(n), -eps_exponent);
  SupportEstimate out;
  out.v_hat = Eigen::VectorXd::Zero(u1.size());
  for (Eigen::Index i = 0; i < u1.size(); ++i) {
    if (std::abs(u1[i]) >= level) {
      out.v_hat[i] = u1[i] > 0.0 ? 1.0 : -1.0;
      out.support.push_back(static_cast<int>(i));
    }
  }
  out.empty = out.support.empty();
  if (!out.empty) out.v_hat /= std::sqrt(static_cast<double>(out.support.size()));
  return out;
}

double support_score(const Eigen::VectorXd& v_hat, const SpikeVector& v) {
  if (v_hat.size() != v.dim()) throw InvalidParameter("support_score: dimension mismatch");
  int hits = 0;
  int false_pos = 0;
  for (Eigen::Index i = 0; i < v_hat.size(); ++i) {
    if (v_hat[i] == 0.0) continue;
    if (v.entries[i] != 0.0) {
      ++hits;
    } else {
      ++false_pos;
    }
  }
  return static_cast<double>(hits - false_pos) / v.sparsity();
}

bool exact_recovery(const Eigen::VectorXd& v_hat, const SpikeVector& v) {
  if (v_hat.size() != v.dim()) throw InvalidParameter("exact_recovery: dimension mismatch");
  for (Eigen::Index i = 0; i < v_hat.size(); ++i) {
    const int a = (v_hat[i] > 0.0) - (v_hat[i] < 0.0);
    const int b = (v.entries[i] > 0.0) - (v.entries[i] < 0.0);
    if (a != b) return false;
  }
  return true;
}

double s_breve(double s, double a1, double gamma) { return s / (1.0 + a1 * gamma * s); }

double s_ring(double s, double a1, double gamma) {
  const double b = s_breve(s, a1, gamma);
  return b * (1.0 + gamma - a1 * gamma * b);
}

std::vector<QuadraticFormCheck> quadratic_form_checks(int n, int p, const KernelSpec& spec, double z,
                                                      const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                                                      std::uint64_t seed) {
  if (n < 1 || p < 1) throw InvalidParameter("n and p must be positive");
  if (U.rows() != p || W.rows() != p || U.cols() != W.cols())
    throw InvalidParameter("U and W must be p x k with the same k");
  const double gamma = static_cast<double>(p) / n;
  const BulkLaw law = noise_law(spec, gamma);
  if (!(z > law.lambda_plus)) throw DomainError("z lies inside the bulk");

  const Eigen::MatrixXd S = noise_gram(n, p, seed);
  Eigen::MatrixXd A = kernel_matrix(S, n, spec).K;
  A.diagonal().array() -= z;
  const Eigen::Index k = U.cols();
  Eigen::MatrixXd rhs(p, 2 * k);
  rhs.leftCols(k) = W;
  rhs.rightCols(k) = S * W;
  const Eigen::MatrixXd sol = A.partialPivLu().solve(rhs);  // R W, R S W
  const Eigen::MatrixXd SU = S * U;

  const double s = stieltjes_real(z, spec.a1(), spec.nu2(), gamma);
  std::vector<QuadraticFormCheck> out(static_cast<std::size_t>(k));
  for (Eigen::Index c = 0; c < k; ++c) {
    QuadraticFormCheck& q = out[static_cast<std::size_t>(c)];
    q.z = z;
    q.inner = U.col(c).dot(W.col(c));
    q.s = s;
    q.s_breve = s_breve(s, spec.a1(), gamma);
    q.s_ring = s_ring(s, spec.a1(), gamma);
    q.dev_r = std::abs(U.col(c).dot(sol.col(c)) - q.inner * q.s);
    q.dev_sr = std::abs(SU.col(c).dot(sol.col(c)) - q.inner * q.s_breve);
    q.dev_srs = std::abs(SU.col(c).dot(sol.col(k + c)) - q.inner * q.s_ring);
  }
  return out;
}

QuadraticFormCheck quadratic_form_check(int n, int p, const KernelSpec& spec, double z, const Eigen::VectorXd& u,
                                        const Eigen::VectorXd& w, std::uint64_t seed) {
  if (u.size() != p || w.size() != p) throw InvalidParameter("u and w must have length p");
  return quadratic_form_checks(n, p, spec, z, u, w, seed).front();
}

}  // namespace gct
