#pragma once

#include <functional>
#include <span>
#include <vector>

namespace gct {

/// Orthonormal probabilists' Hermite polynomial h_k(x), normalized so that
/// E[h_j(Z) h_k(Z)] = 1{j = k} for Z ~ N(0, 1). Three-term recurrence
///   h_{k+1}(x) = (x h_k(x) - sqrt(k) h_{k-1}(x)) / sqrt(k + 1).
double hermite_eval(int k, double x);

/// Writes h_0(x) .. h_{out.size()-1}(x).
void hermite_all(double x, std::span<double> out);

/// Nodes and weights for integrals against the standard normal density:
///   sum_i weights[i] g(nodes[i]) ~ E[g(Z)].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double integrate(const std::function<double(double)>& g) const;
};

/// N-point Gauss-Hermite rule for the weight phi. Nodes come from the Jacobi
/// matrix and are Newton-polished on h_N; weights use the Christoffel form
/// 1 / (N h_{N-1}(x)^2) evaluated in log scale so the tail weights keep full
/// relative accuracy.
QuadratureRule gauss_hermite_rule(int nodes);

/// Composite Gauss-Legendre rule on [-half_width, half_width] with the
/// Gaussian density folded into the weights. Every breakpoint is a panel
/// boundary, so integrands with kinks or jumps there are integrated piecewise
/// smooth.
QuadratureRule split_gaussian_rule(std::span<const double> breakpoints, int order = 20,
                                   double panel_width = 0.5, double half_width = 20.0);

/// Gauss-Hermite rule together with the degree range it is trusted for.
class HermiteBasis {
 public:
  static constexpr int kDefaultNodes = 201;
  static constexpr int kDefaultMaxDegree = 41;

  explicit HermiteBasis(int max_degree = kDefaultMaxDegree, int nodes = kDefaultNodes);

  int max_degree() const { return max_degree_; }
  const QuadratureRule& rule() const { return rule_; }

  /// <h_j, h_k>_phi under the stored rule.
  double inner(int j, int k) const;

 private:
  int max_degree_;
  QuadratureRule rule_;
};

/// a_l = <f, h_l>_phi for l = 0..L using the given rule.
/// Throws NumericError if f is not finite at a node.
std::vector<double> hermite_coeffs(const std::function<double(double)>& f, int L,
                                   const QuadratureRule& rule);
std::vector<double> hermite_coeffs(const std::function<double(double)>& f, int L,
                                   const HermiteBasis& basis);

/// sum_k coeffs[k] h_k(x).
double hermite_series_eval(std::span<const double> coeffs, double x);

}  // namespace gct
