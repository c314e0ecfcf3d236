#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gct/hermite.hpp"

namespace gct {

enum class KernelKind { identity, soft, hard, hermite_series, polynomial };

/// Soft threshold sign(x) (|x| - t)_+.
double soft_threshold(double x, double t);
/// Hard threshold x 1{|x| >= t}.
double hard_threshold(double x, double t);

/// An odd kernel f together with its Hermite representation.
///
/// Construction normalizes the sign: when a_1 < 0 (or a_1 = 0 and the first
/// nonzero coefficient is negative) the kernel is replaced by -f and
/// negated() reports it. The spectral limits of K(f) are stated for a_1 >= 0,
/// and K(-f) = -K(f) carries the same eigenvectors.
class KernelSpec {
 public:
  static constexpr int kDefaultDegree = 21;

  static KernelSpec identity();
  static KernelSpec soft(double t, int L = kDefaultDegree);
  static KernelSpec hard(double t, int L = kDefaultDegree);
  /// Coefficients a_0..a_L in the orthonormal Hermite basis.
  static KernelSpec hermite_series(std::vector<double> coeffs);
  /// Coefficients c_0..c_d of sum_j c_j x^j.
  static KernelSpec polynomial(std::vector<double> monomial);

  /// Kernel grammar: `identity`, `soft:t=2.0`, `hard:t=1.5`,
  /// `hermite:a1=0.3,a3=0.7`, `poly:c1=1,c3=0.5`. soft/hard accept `L=<deg>`;
  /// every kind accepts `scale=<c>` (`identity:scale=2`).
  /// soft/hard also accept `series=1`: the kernel is replaced by its Hermite
  /// series truncated at L. A leading '-' negates the kernel (and is then
  /// normalized away).
  static KernelSpec parse(std::string_view text);

  /// c * f for c != 0.
  KernelSpec scaled(double c) const;

  /// Truncated Hermite series of this kernel as a hermite_series kernel.
  KernelSpec truncated() const;

  double operator()(double x) const;

  KernelKind kind() const { return kind_; }
  double threshold() const { return threshold_; }
  int degree() const { return static_cast<int>(a_.size()) - 1; }
  const std::vector<double>& coeffs() const { return a_; }
  double coeff(int k) const;
  double a1() const { return coeff(1); }
  /// ||f||_phi^2 by direct quadrature (soft/hard) or sum of a_k^2 (series).
  double nu2() const { return nu2_; }
  bool odd() const { return odd_; }
  /// The sign normalization flipped the kernel.
  bool negated() const { return negated_; }
  double scale() const { return scale_; }

  /// Linear kernels c x: tau vanishes identically.
  bool is_linear() const;

  /// tau(f, beta, lambda) is non-decreasing in lambda: nonnegative coefficients
  /// from degree 3 up, or soft thresholding.
  bool tau_monotone() const;

  /// Grammar string that reproduces this kernel.
  std::string label() const;

 private:
  KernelSpec() = default;
  void finalize();

  KernelKind kind_ = KernelKind::identity;
  double threshold_ = 0.0;
  double scale_ = 1.0;
  bool negated_ = false;
  std::vector<double> base_;     // hermite or monomial coefficients before scaling
  std::vector<double> base_a_;   // Hermite coefficients of the unscaled kernel
  double base_nu2_ = 1.0;
  std::vector<double> a_;
  double nu2_ = 1.0;
  bool odd_ = true;
  std::string series_of_;  // label of the kernel this series was truncated from
};

/// a_l = <f, h_l>_phi, l = 0..L, for a pointwise function.
std::vector<double> hermite_coeffs_of(const KernelSpec& f, int L, const HermiteBasis& basis);

/// ||f||_phi^2. Direct quadrature of f^2 for threshold kernels (split at the
/// threshold), sum of a_k^2 for series and polynomial kernels.
double kernel_norm(const KernelSpec& spec);

/// (lambda - 1)^l / (sqrt(l!) beta^{l-1}), the weight of a_l in tau.
double tau_weight(int l, double beta, double lambda);

/// tau(f, beta, lambda) = sum_{l=3}^{L} a_l (lambda-1)^l / (sqrt(l!) beta^{l-1}).
double tau(const KernelSpec& spec, double beta, double lambda);

/// tau without truncation, from E[h_l(Z + mu)] = mu^l / sqrt(l!):
///   tau = beta (E f(Z + mu) - a1 mu),  mu = (lambda - 1)/beta.
/// Threshold kernels integrate piecewise around the shifted cut points;
/// series and polynomial kernels are finite, so this equals tau().
double tau_exact(const KernelSpec& spec, double beta, double lambda);

/// Cauchy-Schwarz bound on the series beyond the truncation degree:
///   sqrt(nu2 - sum_{k<=L} a_k^2) * sqrt(sum_{k>L, k odd} w_k^2).
double tau_tail_bound(const KernelSpec& spec, double beta, double lambda);

}  // namespace gct
