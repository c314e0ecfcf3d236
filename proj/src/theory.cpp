#include "gct/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "gct/error.hpp"

namespace gct {

namespace {

using cd = std::complex<double>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kRealShift = 1e-9;
constexpr double kResidualTol = 1e-10;

double excess_norm(double a1, double nu2) { return std::max(nu2 - a1 * a1, 0.0); }

void check_law(double a1, double nu2, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be positive");
  if (!(a1 >= 0.0) || !std::isfinite(a1)) throw InvalidParameter("a1 must be finite and >= 0");
  if (!(nu2 > 0.0) || !std::isfinite(nu2)) throw InvalidParameter("nu2 must be positive");
  if (nu2 < a1 * a1 - 1e-10) throw InvalidParameter("nu2 must be at least a1^2");
}

cd shift_term(cd s, double a1, double nu2, double gamma) {
  return a1 * (1.0 - 1.0 / (1.0 + a1 * gamma * s)) + gamma * excess_norm(a1, nu2) * s;
}

cd shift_term_prime(cd s, double a1, double nu2, double gamma) {
  const cd d = 1.0 + a1 * gamma * s;
  return a1 * a1 * gamma / (d * d) + gamma * excess_norm(a1, nu2);
}

// s (z + F(s)) + 1, a scaled form of the fixed-point equation.
cd residual(cd s, cd z, double a1, double nu2, double gamma) {
  return s * (z + shift_term(s, a1, nu2, gamma)) + 1.0;
}

bool accept(cd s, cd z, double a1, double nu2, double gamma) {
  return std::isfinite(s.real()) && std::isfinite(s.imag()) && s.imag() > 0.0 &&
         std::abs(residual(s, z, a1, nu2, gamma)) < kResidualTol;
}

bool newton(cd& s, cd z, double a1, double nu2, double gamma) {
  for (int it = 0; it < 100; ++it) {
    const cd g = residual(s, z, a1, nu2, gamma);
    const cd dg = z + shift_term(s, a1, nu2, gamma) + s * shift_term_prime(s, a1, nu2, gamma);
    if (dg == 0.0) return false;
    cd step = g / dg;
    // Stay in the upper half plane.
    int halvings = 0;
    while ((s - step).imag() <= 0.0 && halvings < 60) {
      step *= 0.5;
      ++halvings;
    }
    if (halvings == 60) return false;
    s -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(s))) break;
  }
  return accept(s, z, a1, nu2, gamma);
}

// Multiplying through by 1 + a1 gamma s turns the equation into a cubic;
// exactly one root lies in the upper half plane.
cd cubic_root(cd z, double a1, double nu2, double gamma) {
  const double c = a1 * gamma;
  const double d = gamma * excess_norm(a1, nu2);
  std::vector<cd> coeffs = {1.0, z + c, c * z + a1 * c + d, c * d};  // ascending powers
  while (!coeffs.empty() && coeffs.back() == 0.0) coeffs.pop_back();
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg < 1) throw SolverError("degenerate Stieltjes equation", kNaN);
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
  const Eigen::VectorXcd roots = companion.eigenvalues();
  cd best = 0.0;
  double best_res = std::numeric_limits<double>::infinity();
  for (int i = 0; i < deg; ++i) {
    cd s = roots(i);
    if (!(s.imag() > 0.0)) continue;
    newton(s, z, a1, nu2, gamma);
    const double res = std::abs(residual(s, z, a1, nu2, gamma));
    if (s.imag() > 0.0 && res < best_res) {
      best = s;
      best_res = res;
    }
  }
  if (!(best_res < kResidualTol)) throw SolverError("Stieltjes equation did not converge", best_res);
  return best;
}

cd prepare_z(cd z, double a1, double nu2, double gamma, bool* real_axis) {
  check_law(a1, nu2, gamma);
  *real_axis = false;
  if (z.imag() < 0.0) throw DomainError("Stieltjes transform requires Im z >= 0");
  if (z.imag() == 0.0) {
    const BulkLaw law = bulk_edge(a1, nu2, gamma);
    if (!(z.real() > law.lambda_plus)) throw DomainError("real z must lie above the bulk edge");
    *real_axis = true;
    z += cd(0.0, kRealShift);
  }
  return z;
}

double bisect(const std::function<double(double)>& g, double lo, double hi, double tol) {
  // Keeps g(lo) <= 0 < g(hi).
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double golden_min(const std::function<double(double)>& f, double a, double b, int iters) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - r * (b - a);
  double x2 = a + r * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

// Signed distance from the transition: positive iff informative.
double transition_margin(double a1, double nu2, double gamma, double tau_value, double lambda) {
  if (a1 > 0.0) {
    const double s = s_plus(a1, gamma, tau_value, lambda);
    if (!(s > -1.0 / (a1 * gamma)) || !(s < 0.0)) return -1.0;
    return psi_prime(s, a1, nu2, gamma);
  }
  return tau_value - std::sqrt(gamma * nu2);
}

void check_model(double gamma, double beta) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParameter("gamma must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be positive");
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::informative:
      return "informative";
    case Regime::bulk:
      return "bulk";
    case Regime::wigner_informative:
      return "wigner_informative";
    case Regime::wigner_bulk:
      return "wigner_bulk";
    case Regime::bbp_linear:
      return "bbp_linear";
  }
  return "unknown";
}

BbpLimits bbp_limits(double gamma, double lambda) {
  if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  if (!(lambda >= 1.0)) throw InvalidParameter("lambda must be >= 1");
  const double root = std::sqrt(gamma);
  if (lambda > 1.0 + root) {
    const double e = lambda - 1.0;
    return {lambda + lambda * gamma / e, (1.0 - gamma / (e * e)) / (1.0 + gamma / e)};
  }
  return {(1.0 + root) * (1.0 + root), 0.0};
}

double psi(double s, double a1, double nu2, double gamma) {
  const double d = 1.0 + a1 * gamma * s;
  if (s == 0.0 || d == 0.0) throw DomainError("psi evaluated at a pole");
  return -1.0 / s - a1 * (1.0 - 1.0 / d) - gamma * excess_norm(a1, nu2) * s;
}

double psi_prime(double s, double a1, double nu2, double gamma) {
  const double d = 1.0 + a1 * gamma * s;
  if (s == 0.0 || d == 0.0) throw DomainError("psi' evaluated at a pole");
  return 1.0 / (s * s) - a1 * a1 * gamma / (d * d) - gamma * excess_norm(a1, nu2);
}

std::complex<double> stieltjes(std::complex<double> z, double a1, double nu2, double gamma) {
  bool real_axis = false;
  z = prepare_z(z, a1, nu2, gamma, &real_axis);

  cd s = -1.0 / z;
  for (int it = 0; it < 400; ++it) {
    const cd next = 0.5 * s - 0.5 / (z + shift_term(s, a1, nu2, gamma));
    const bool done = std::abs(next - s) <= 1e-14 * std::abs(s);
    s = next;
    if (done) break;
  }
  if (!accept(s, z, a1, nu2, gamma) && !newton(s, z, a1, nu2, gamma)) s = cubic_root(z, a1, nu2, gamma);
  return real_axis ? cd(s.real(), 0.0) : s;
}

std::complex<double> stieltjes(std::complex<double> z, double a1, double nu2, double gamma,
                               std::complex<double> guess) {
  bool real_axis = false;
  const cd zz = prepare_z(z, a1, nu2, gamma, &real_axis);
  cd s = guess;
  if (s.imag() > 0.0 && newton(s, zz, a1, nu2, gamma)) return real_axis ? cd(s.real(), 0.0) : s;
  return stieltjes(z, a1, nu2, gamma);
}

double stieltjes_real(double x, double a1, double nu2, double gamma) {
  return stieltjes(cd(x, 0.0), a1, nu2, gamma).real();
}

BulkLaw bulk_edge(double a1, double nu2, double gamma) {
  check_law(a1, nu2, gamma);
  BulkLaw law{a1, nu2, gamma, 0.0, 0.0};
  if (a1 == 0.0) {
    law.s0 = -1.0 / std::sqrt(gamma * nu2);
    law.lambda_plus = 2.0 * std::sqrt(gamma * nu2);
    return law;
  }
  const double pole = -1.0 / (a1 * gamma);
  auto g = [&](double s) { return psi_prime(s, a1, nu2, gamma); };
  double lo = pole * (1.0 - 1e-12);
  double hi = pole * 1e-12;
  if (!(g(lo) < 0.0 && g(hi) > 0.0)) throw SolverError("no sign change of psi' on the admissible interval", g(lo));
  boost::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      g, lo, hi, g(lo), g(hi), boost::math::tools::eps_tolerance<double>(52), max_iter);
  law.s0 = 0.5 * (bracket.first + bracket.second);
  const double res = g(law.s0);
  if (!(std::abs(res) * law.s0 * law.s0 < 1e-9)) throw SolverError("bulk edge root did not converge", res);
  law.lambda_plus = psi(law.s0, a1, nu2, gamma);
  return law;
}

BulkLaw noise_law(const KernelSpec& spec, double gamma) { return bulk_edge(spec.a1(), spec.nu2(), gamma); }

double theta2(double x, double a1, double nu2, double gamma, double tau_value, double lambda) {
  const double num = 1.0 + gamma * x *
                               (a1 * (2.0 + a1 * gamma * x) * (1.0 + a1 * a1 * gamma * x * x) -
                                x * (1.0 + a1 * gamma * x) * (1.0 + a1 * gamma * x) * nu2);
  const double den =
      x * (1.0 + a1 * gamma * x) * (tau_value + a1 * (lambda + gamma + 2.0 * tau_value * gamma * x - 1.0));
  return -num / den;
}

double s_plus(double a1, double gamma, double tau_value, double lambda) {
  const double b = a1 * (lambda + gamma - 1.0) + tau_value;
  const double disc = b * b - 4.0 * a1 * gamma * tau_value;
  if (disc < 0.0) throw NumericError("negative discriminant in outlier equation");
  // -2/(b + sqrt(disc)) is the printed root with the cancellation removed.
  return -2.0 / (b + std::sqrt(disc));
}

TheoryResult spike_forward(const KernelSpec& spec, double gamma, double beta, double lambda,
                           const TheoryOptions& options) {
  check_model(gamma, beta);
  if (!(lambda >= 1.0) || !std::isfinite(lambda)) throw InvalidParameter("lambda must be >= 1");
  if (lambda == 1.0) throw DomainError("lambda = 1: the spike is unidentifiable");

  const double a1 = spec.a1();
  const double nu2 = spec.nu2();
  TheoryResult r;
  r.bulk = noise_law(spec, gamma);
  r.tau = options.exact_tau ? tau_exact(spec, beta, lambda) : tau(spec, beta, lambda);
  r.theta2_alt = kNaN;

  if (a1 == 0.0) {
    const double edge = std::sqrt(gamma * nu2);
    if (r.tau > edge) {
      r.regime = Regime::wigner_informative;
      r.lambda_limit = r.tau + gamma * nu2 / r.tau;
      r.cos2_limit = 1.0 - gamma * nu2 / (r.tau * r.tau);
    } else {
      r.regime = Regime::wigner_bulk;
      r.lambda_limit = r.bulk.lambda_plus;
      r.cos2_limit = 0.0;
    }
    return r;
  }

  if (r.tau == 0.0) {
    if (spec.is_linear()) {
      const BbpLimits bbp = bbp_limits(gamma, lambda);
      if (lambda > 1.0 + std::sqrt(gamma)) {
        r.regime = Regime::bbp_linear;
        r.s_plus = -1.0 / (a1 * (lambda + gamma - 1.0));
        r.lambda_limit = a1 * (bbp.lambda1 - 1.0);
        r.cos2_limit = bbp.cos2;
        const double s = *r.s_plus;
        r.theta2_alt = -s * (1.0 + a1 * gamma * s) * psi_prime(s, a1, nu2, gamma) / (a1 * (lambda + gamma - 1.0));
      } else {
        r.regime = Regime::bulk;
        r.lambda_limit = r.bulk.lambda_plus;
        r.cos2_limit = 0.0;
      }
      return r;
    }
    if (!options.allow_tau_zero)
      throw DomainError("tau vanishes for a nonlinear kernel; enable allow_tau_zero to use the continuous limit");
  }

  const double s = s_plus(a1, gamma, r.tau, lambda);
  r.s_plus = s;
  if (s > -1.0 / (a1 * gamma) && psi_prime(s, a1, nu2, gamma) > 0.0) {
    r.regime = Regime::informative;
    r.lambda_limit = psi(s, a1, nu2, gamma);
    r.cos2_limit = theta2(s, a1, nu2, gamma, r.tau, lambda);
    r.theta2_alt = -s * (1.0 + a1 * gamma * s) * psi_prime(s, a1, nu2, gamma) /
                   (a1 * (lambda + gamma - 1.0) + r.tau + 2.0 * a1 * r.tau * gamma * s);
    const double slack = 1e-12 * std::max(1.0, std::abs(r.bulk.lambda_plus));
    if (!(r.lambda_limit > r.bulk.lambda_plus - slack) || !(r.cos2_limit > 0.0) || !(r.cos2_limit <= 1.0 + 1e-12))
      throw NumericError("informative prediction outside its admissible range");
    r.cos2_limit = std::min(r.cos2_limit, 1.0);
  } else {
    r.regime = Regime::bulk;
    r.lambda_limit = r.bulk.lambda_plus;
    r.cos2_limit = 0.0;
  }
  return r;
}

double lambda_star_kernel(const KernelSpec& spec, double gamma, double beta, double tol,
                          const TheoryOptions& options) {
  check_model(gamma, beta);
  if (spec.is_linear()) return 1.0 + std::sqrt(gamma);
  if (!spec.tau_monotone()) throw UnsupportedKernel("lambda* needs tau non-decreasing in lambda: " + spec.label());
  const double a1 = spec.a1();
  const double nu2 = spec.nu2();
  auto margin = [&](double lambda) {
    const double t = options.exact_tau ? tau_exact(spec, beta, lambda) : tau(spec, beta, lambda);
    return transition_margin(a1, nu2, gamma, t, lambda);
  };

  // First crossing on an upward scan, then bisection inside the cell. The
  // truncated series can turn over far above the transition, so the scan
  // never jumps past it.
  const double step = std::sqrt(gamma) / 256.0;
  const double limit = 1.0 + 16.0 * (1.0 + std::sqrt(gamma));
  double lo = 1.0;
  for (double hi = 1.0 + step; hi <= limit; hi += step) {
    if (margin(hi) > 0.0) return bisect(margin, lo, hi, tol);
    lo = hi;
  }
  throw SolverError("no informative lambda found for " + spec.label(), margin(limit));
}

std::vector<double> default_t_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 80; ++i) grid.push_back(0.05 * i);
  return grid;
}

SoftTransition lambda_star_soft(double gamma, double beta, const std::vector<double>& t_grid, bool refine) {
  check_model(gamma, beta);
  if (t_grid.empty()) throw InvalidParameter("t grid must be non-empty");
  // Thresholds whose truncated tau never turns informative in the scan range
  // drop out of the minimum.
  auto at = [&](double t) {
    try {
      return lambda_star_kernel(KernelSpec::soft(t), gamma, beta);
    } catch (const SolverError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  SoftTransition best{std::numeric_limits<double>::infinity(), 0.0};
  std::size_t best_i = 0;
  std::vector<double> sorted = t_grid;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i] >= 0.0)) throw InvalidParameter("thresholds must be >= 0");
    const double value = at(sorted[i]);
    if (value < best.lambda_star) {
      best = {value, sorted[i]};
      best_i = i;
    }
  }
  if (refine && sorted.size() > 1) {
    const double a = sorted[best_i == 0 ? 0 : best_i - 1];
    const double b = sorted[std::min(best_i + 1, sorted.size() - 1)];
    const double t = golden_min(at, a, b, 40);
    const double value = at(t);
    if (value < best.lambda_star) best = {value, t};
  }
  if (!std::isfinite(best.lambda_star))
    throw SolverError("no threshold in the grid has a transition", std::numeric_limits<double>::infinity());
  return best;
}

KernelSpec optimal_family_kernel(double a1, double lambda_c, double beta, int degree) {
  if (!(a1 > 0.0 && a1 <= 1.0)) throw InvalidParameter("a1 must lie in (0, 1]");
  if (!(lambda_c > 1.0)) throw InvalidParameter("lambda_c must exceed 1");
  if (degree < 3) throw InvalidParameter("degree must be >= 3");
  std::vector<double> coeffs(static_cast<std::size_t>(degree) + 1, 0.0);
  coeffs[1] = a1;
  if (a1 == 1.0) return KernelSpec::hermite_series(coeffs);
  // Log weights keep the normalization finite for small beta.
  std::vector<double> logs;
  double top = -std::numeric_limits<double>::infinity();
  for (int k = 3; k <= degree; k += 2) {
    const double lw = k * std::log(lambda_c - 1.0) - 0.5 * std::lgamma(k + 1.0) - (k - 1) * std::log(beta);
    logs.push_back(lw);
    top = std::max(top, lw);
  }
  double norm2 = 0.0;
  for (double lw : logs) norm2 += std::exp(2.0 * (lw - top));
  const double tail = std::sqrt(std::max(1.0 - a1 * a1, 0.0));
  for (std::size_t i = 0; i < logs.size(); ++i)
    coeffs[3 + 2 * i] = tail * std::exp(logs[i] - top) / std::sqrt(norm2);
  return KernelSpec::hermite_series(coeffs);
}

double lambda_star_family(double a1, double gamma, double beta, const OptSearch& search) {
  check_model(gamma, beta);
  if (a1 >= 1.0) return 1.0 + std::sqrt(gamma);
  double lambda_c = 1.0 + std::sqrt(gamma);
  double last_step = kNaN;
  for (int it = 0; it < search.max_iter; ++it) {
    const double next =
        lambda_star_kernel(optimal_family_kernel(a1, lambda_c, beta, search.degree), gamma, beta, 1e-12);
    last_step = next - lambda_c;
    if (std::abs(last_step) < search.fixed_point_tol) return next;
    lambda_c = std::max(lambda_c + search.damping * last_step, 1.0 + 1e-12);
  }
  throw SolverError("optimal-kernel fixed point did not converge", std::abs(last_step));
}

OptimalTransition lambda_star_opt(double gamma, double beta, const OptSearch& search) {
  check_model(gamma, beta);
  if (search.a1_points < 2 || !(search.a1_min > 0.0 && search.a1_min < 1.0))
    throw InvalidParameter("invalid a1 search grid");
  std::vector<double> grid;
  const double log_lo = std::log(search.a1_min);
  for (int i = 0; i < search.a1_points; ++i)
    grid.push_back(std::exp(log_lo * (1.0 - static_cast<double>(i) / search.a1_points)));
  grid.push_back(1.0);

  auto at = [&](double a1) { return lambda_star_family(a1, gamma, beta, search); };
  std::vector<double> values;
  for (double a1 : grid) values.push_back(at(a1));
  const auto best_it = std::min_element(values.begin(), values.end());
  std::size_t best_i = static_cast<std::size_t>(best_it - values.begin());
  double best_a1 = grid[best_i];
  double best = *best_it;
  if (search.refine) {
    const double a = grid[best_i == 0 ? 0 : best_i - 1];
    const double b = grid[std::min(best_i + 1, grid.size() - 1)];
    const double a1 = golden_min(at, a, b, 50);
    const double value = at(a1);
    if (value < best) {
      best = value;
      best_a1 = a1;
    }
  }
  OptimalTransition out;
  out.lambda_star = best;
  out.a1_star = best_a1;
  out.kernel = best_a1 >= 1.0 ? KernelSpec::identity() : optimal_family_kernel(best_a1, best, beta, search.degree);
  return out;
}

TransitionCurve transition_curve(double gamma, const std::vector<double>& betas, const std::vector<double>& t_grid,
                                 const OptSearch& search) {
  TransitionCurve curve;
  curve.gamma = gamma;
  for (double beta : betas) {
    const OptimalTransition opt = lambda_star_opt(gamma, beta, search);
    const SoftTransition soft = lambda_star_soft(gamma, beta, t_grid, true);
    curve.points.push_back({beta, opt.lambda_star, soft.lambda_star, soft.t_star, opt.a1_star});
  }
  return curve;
}

std::vector<double> bulk_density(double a1, double nu2, double gamma, const std::vector<double>& x_grid,
                                 double eta) {
  if (!(eta > 0.0)) throw InvalidParameter("eta must be positive");
  std::vector<double> out;
  out.reserve(x_grid.size());
  cd guess(0.0, 0.0);
  for (double x : x_grid) {
    const cd z(x, eta);
    const cd s = guess.imag() > 0.0 ? stieltjes(z, a1, nu2, gamma, guess) : stieltjes(z, a1, nu2, gamma);
    guess = s;
    out.push_back(std::max(s.imag(), 0.0) / M_PI);
  }
  return out;
}

}  // namespace gct
