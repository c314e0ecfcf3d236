#include "gct/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "gct/error.hpp"

namespace gct {

namespace {

// Log of |h_{n-1}(x)| and the ratio h_n(x) / h_{n-1}(x), computed with
// periodic rescaling so large degrees and far nodes do not overflow.
struct ScaledPair {
  double log_abs_prev;  // log |h_{n-1}(x)|
  double ratio;         // h_n(x) / h_{n-1}(x)
};

ScaledPair scaled_hermite(int n, double x) {
  double prev = 1.0;  // h_0
  double cur = x;     // h_1
  double log_scale = 0.0;
  for (int k = 1; k < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) /
                        std::sqrt(static_cast<double>(k + 1));
    prev = cur;
    cur = next;
    const double mag = std::max(std::abs(prev), std::abs(cur));
    if (mag > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  return {std::log(std::abs(prev)) + log_scale, cur / prev};
}

// Symmetric tridiagonal eigenvalues (zero diagonal, given off-diagonal).
Eigen::VectorXd jacobi_eigen(const Eigen::VectorXd& offdiag, Eigen::MatrixXd* vectors) {
  const Eigen::Index n = offdiag.size() + 1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  const Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  solver.computeFromTridiagonal(diag, offdiag,
                                vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (vectors) *vectors = solver.eigenvectors();
  return solver.eigenvalues();
}

}  // namespace

double hermite_eval(int k, double x) {
  if (k < 0) throw InvalidParameter("Hermite degree must be non-negative");
  if (k == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int j = 1; j < k; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                        std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

void hermite_all(double x, std::span<double> out) {
  if (out.empty()) return;
  out[0] = 1.0;
  if (out.size() == 1) return;
  out[1] = x;
  for (std::size_t j = 1; j + 1 < out.size(); ++j) {
    out[j + 1] = (x * out[j] - std::sqrt(static_cast<double>(j)) * out[j - 1]) /
                 std::sqrt(static_cast<double>(j + 1));
  }
}

double hermite_series_eval(std::span<const double> coeffs, double x) {
  if (coeffs.empty()) return 0.0;
  double prev = 1.0;
  double cur = x;
  double sum = coeffs[0];
  if (coeffs.size() > 1) sum += coeffs[1] * x;
  for (std::size_t j = 1; j + 1 < coeffs.size(); ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                        std::sqrt(static_cast<double>(j + 1));
    prev = cur;
    cur = next;
    sum += coeffs[j + 1] * cur;
  }
  return sum;
}

double QuadratureRule::integrate(const std::function<double(double)>& g) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * g(nodes[i]);
  return sum;
}

QuadratureRule gauss_hermite_rule(int nodes) {
  if (nodes < 1) throw InvalidParameter("quadrature needs at least one node");
  QuadratureRule rule;
  if (nodes == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }
  Eigen::VectorXd offdiag(nodes - 1);
  for (int k = 1; k < nodes; ++k) offdiag[k - 1] = std::sqrt(static_cast<double>(k));
  const Eigen::VectorXd eig = jacobi_eigen(offdiag, nullptr);

  rule.nodes.resize(static_cast<std::size_t>(nodes));
  rule.weights.resize(static_cast<std::size_t>(nodes));
  const double sqrt_n = std::sqrt(static_cast<double>(nodes));
  for (int i = 0; i < nodes; ++i) {
    double x = eig[i];
    // h_N'(x) = sqrt(N) h_{N-1}(x), so the Newton step is ratio / sqrt(N).
    for (int iter = 0; iter < 8; ++iter) {
      const double step = scaled_hermite(nodes, x).ratio / sqrt_n;
      x -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    const double log_w = -std::log(static_cast<double>(nodes)) - 2.0 * scaled_hermite(nodes, x).log_abs_prev;
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = std::exp(log_w);
  }
  // Symmetrize: the rule is exactly symmetric in exact arithmetic.
  for (int i = 0, j = nodes - 1; i < j; ++i, --j) {
    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(j);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    rule.weights[a] = rule.weights[b] = w;
  }
  if (nodes % 2 == 1) rule.nodes[static_cast<std::size_t>(nodes / 2)] = 0.0;
  return rule;
}

QuadratureRule split_gaussian_rule(std::span<const double> breakpoints, int order,
                                   double panel_width, double half_width) {
  if (order < 1 || !(panel_width > 0.0) || !(half_width > 0.0))
    throw InvalidParameter("invalid composite quadrature parameters");

  // Gauss-Legendre on [-1, 1] via Golub-Welsch.
  Eigen::VectorXd offdiag(order - 1);
  for (int k = 1; k < order; ++k) offdiag[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::MatrixXd vecs;
  const Eigen::VectorXd gl_nodes = order > 1 ? jacobi_eigen(offdiag, &vecs) : Eigen::VectorXd::Zero(1);
  Eigen::VectorXd gl_weights(order);
  for (int i = 0; i < order; ++i) gl_weights[i] = order > 1 ? 2.0 * vecs(0, i) * vecs(0, i) : 2.0;

  std::vector<double> edges;
  for (double x = -half_width; x < half_width; x += panel_width) edges.push_back(x);
  edges.push_back(half_width);
  for (double b : breakpoints) {
    if (std::abs(b) < half_width) edges.push_back(b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              edges.end());

  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  QuadratureRule rule;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double lo = edges[e];
    const double hi = edges[e + 1];
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < order; ++i) {
      const double x = mid + half * gl_nodes[i];
      rule.nodes.push_back(x);
      rule.weights.push_back(half * gl_weights[i] * inv_sqrt_2pi * std::exp(-0.5 * x * x));
    }
  }
  return rule;
}

HermiteBasis::HermiteBasis(int max_degree, int nodes)
    : max_degree_(max_degree), rule_(gauss_hermite_rule(nodes)) {
  if (max_degree < 0) throw InvalidParameter("max_degree must be non-negative");
  if (2 * max_degree + 1 > 2 * nodes - 1)
    throw InvalidParameter("quadrature rule too small for the requested degree");
}

double HermiteBasis::inner(int j, int k) const {
  return rule_.integrate([j, k](double x) { return hermite_eval(j, x) * hermite_eval(k, x); });
}

std::vector<double> hermite_coeffs(const std::function<double(double)>& f, int L,
                                   const QuadratureRule& rule) {
  if (L < 0) throw InvalidParameter("truncation degree must be non-negative");
  std::vector<double> a(static_cast<std::size_t>(L + 1), 0.0);
  std::vector<double> h(static_cast<std::size_t>(L + 1));
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    const double fx = f(x);
    if (!std::isfinite(fx))
      throw NumericError("kernel is not finite at quadrature node x = " + std::to_string(x));
    const double wf = rule.weights[i] * fx;
    if (wf == 0.0) continue;
    hermite_all(x, h);
    for (int l = 0; l <= L; ++l) a[static_cast<std::size_t>(l)] += wf * h[static_cast<std::size_t>(l)];
  }
  return a;
}

std::vector<double> hermite_coeffs(const std::function<double(double)>& f, int L,
                                   const HermiteBasis& basis) {
  if (L > basis.max_degree())
    throw InvalidParameter("truncation degree exceeds the basis degree");
  return hermite_coeffs(f, L, basis.rule());
}

}  // namespace gct
