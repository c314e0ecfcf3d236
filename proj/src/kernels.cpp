#include "gct/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "gct/error.hpp"

namespace gct {

namespace {

constexpr double kParityTol = 1e-8;

// Threshold kernels are integrated piecewise on a Gauss-Legendre grid split at
// +-t, which resolves both the kink of soft and the jump of hard thresholding.
std::vector<double> threshold_coeffs(KernelKind kind, double t, int L, double* nu2) {
  const double cuts[] = {-t, t};
  const QuadratureRule rule = split_gaussian_rule(cuts);
  auto f = [kind, t](double x) {
    return kind == KernelKind::soft ? soft_threshold(x, t) : hard_threshold(x, t);
  };
  *nu2 = rule.integrate([&](double x) { return f(x) * f(x); });
  return hermite_coeffs(f, L, rule);
}

// Monomial coefficients -> orthonormal Hermite coefficients, exact up to
// rounding: x h_k = sqrt(k+1) h_{k+1} + sqrt(k) h_{k-1}.
std::vector<double> monomial_to_hermite(const std::vector<double>& c) {
  const std::size_t d = c.size();
  std::vector<double> out(d, 0.0);
  std::vector<double> power(d, 0.0);  // x^j in the Hermite basis
  power[0] = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (j > 0) {
      std::vector<double> next(d, 0.0);
      for (std::size_t k = 0; k < j; ++k) {
        if (power[k] == 0.0) continue;
        next[k + 1] += std::sqrt(static_cast<double>(k + 1)) * power[k];
        if (k > 0) next[k - 1] += std::sqrt(static_cast<double>(k)) * power[k];
      }
      power.swap(next);
    }
    for (std::size_t k = 0; k <= j; ++k) out[k] += c[j] * power[k];
  }
  return out;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Prefer the shortest representation that round-trips.
  for (int digits = 1; digits <= 17; ++digits) {
    char trial[64];
    std::snprintf(trial, sizeof trial, "%.*g", digits, x);
    if (std::strtod(trial, nullptr) == x) return trial;
  }
  return buf;
}

double parse_number(std::string_view text, std::string_view context) {
  const std::string s(text);
  char* end = nullptr;
  const double value = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(value))
    throw InvalidParameter("bad number '" + s + "' in kernel spec '" + std::string(context) + "'");
  return value;
}

}  // namespace

double soft_threshold(double x, double t) {
  const double mag = std::abs(x) - t;
  if (mag <= 0.0) return 0.0;
  return x > 0.0 ? mag : -mag;
}

double hard_threshold(double x, double t) { return std::abs(x) >= t ? x : 0.0; }

KernelSpec KernelSpec::identity() {
  KernelSpec k;
  k.kind_ = KernelKind::identity;
  k.base_a_ = {0.0, 1.0};
  k.base_nu2_ = 1.0;
  k.finalize();
  return k;
}

KernelSpec KernelSpec::soft(double t, int L) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("threshold must be finite and >= 0");
  if (L < 1) throw InvalidParameter("truncation degree must be >= 1");
  KernelSpec k;
  k.kind_ = KernelKind::soft;
  k.threshold_ = t;
  if (t == 0.0) {
    k.base_a_.assign(static_cast<std::size_t>(L) + 1, 0.0);
    k.base_a_[1] = 1.0;
  } else {
    k.base_a_ = threshold_coeffs(KernelKind::soft, t, L, &k.base_nu2_);
  }
  k.finalize();
  return k;
}

KernelSpec KernelSpec::hard(double t, int L) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidParameter("threshold must be finite and >= 0");
  if (L < 1) throw InvalidParameter("truncation degree must be >= 1");
  KernelSpec k;
  k.kind_ = KernelKind::hard;
  k.threshold_ = t;
  if (t == 0.0) {
    k.base_a_.assign(static_cast<std::size_t>(L) + 1, 0.0);
    k.base_a_[1] = 1.0;
  } else {
    k.base_a_ = threshold_coeffs(KernelKind::hard, t, L, &k.base_nu2_);
  }
  k.finalize();
  return k;
}

KernelSpec KernelSpec::hermite_series(std::vector<double> coeffs) {
  if (coeffs.size() < 2) coeffs.resize(2, 0.0);
  KernelSpec k;
  k.kind_ = KernelKind::hermite_series;
  k.base_ = coeffs;
  k.base_a_ = std::move(coeffs);
  k.base_nu2_ = 0.0;
  for (double a : k.base_a_) k.base_nu2_ += a * a;
  k.finalize();
  return k;
}

KernelSpec KernelSpec::polynomial(std::vector<double> monomial) {
  if (monomial.size() < 2) monomial.resize(2, 0.0);
  KernelSpec k;
  k.kind_ = KernelKind::polynomial;
  k.base_ = monomial;
  k.base_a_ = monomial_to_hermite(monomial);
  k.base_nu2_ = 0.0;
  for (double a : k.base_a_) k.base_nu2_ += a * a;
  k.finalize();
  return k;
}

void KernelSpec::finalize() {
  double largest = 0.0;
  for (double a : base_a_) largest = std::max(largest, std::abs(a));
  odd_ = true;
  for (std::size_t k = 0; k < base_a_.size(); k += 2) {
    if (std::abs(base_a_[k]) > kParityTol * std::max(1.0, largest)) odd_ = false;
  }
  if (!odd_) throw UnsupportedKernel("kernel '" + label() + "' is not odd");
  for (std::size_t k = 0; k < base_a_.size(); k += 2) base_a_[k] = 0.0;
  if (largest == 0.0) throw UnsupportedKernel("kernel is identically zero");

  // Sign normalization on the leading nonzero coefficient.
  double leading = 0.0;
  for (std::size_t k = 1; k < base_a_.size() && leading == 0.0; k += 2) leading = base_a_[k];
  if (scale_ * leading < 0.0) {
    scale_ = -scale_;
    negated_ = !negated_;
  }
  a_.resize(base_a_.size());
  for (std::size_t k = 0; k < base_a_.size(); ++k) a_[k] = scale_ * base_a_[k];
  nu2_ = scale_ * scale_ * base_nu2_;
}

KernelSpec KernelSpec::scaled(double c) const {
  if (c == 0.0 || !std::isfinite(c)) throw InvalidParameter("kernel scale must be finite and nonzero");
  KernelSpec k = *this;
  k.scale_ *= c;
  k.finalize();
  if (!k.series_of_.empty() && k.scale_ != 1.0) {
    const auto at = k.series_of_.find(",scale=");
    k.series_of_ = k.series_of_.substr(0, at) + ",scale=" + format_number(k.scale_);
  }
  return k;
}

KernelSpec KernelSpec::truncated() const { return hermite_series(a_); }

double KernelSpec::coeff(int k) const {
  if (k < 0 || k >= static_cast<int>(a_.size())) return 0.0;
  return a_[static_cast<std::size_t>(k)];
}

double KernelSpec::operator()(double x) const {
  double base = 0.0;
  switch (kind_) {
    case KernelKind::identity:
      base = x;
      break;
    case KernelKind::soft:
      base = soft_threshold(x, threshold_);
      break;
    case KernelKind::hard:
      base = hard_threshold(x, threshold_);
      break;
    case KernelKind::hermite_series:
      base = hermite_series_eval(base_, x);
      break;
    case KernelKind::polynomial:
      for (auto it = base_.rbegin(); it != base_.rend(); ++it) base = base * x + *it;
      break;
  }
  return scale_ * base;
}

bool KernelSpec::is_linear() const {
  for (std::size_t k = 2; k < a_.size(); ++k) {
    if (a_[k] != 0.0) return false;
  }
  return true;
}

bool KernelSpec::tau_monotone() const {
  if (kind_ == KernelKind::soft) return true;
  for (std::size_t k = 3; k < a_.size(); ++k) {
    if (a_[k] < -kParityTol) return false;
  }
  return true;
}

std::string KernelSpec::label() const {
  if (!series_of_.empty()) return series_of_;
  std::string out;
  auto add = [&out](const std::string& key, double value) {
    if (!out.empty() && out.back() != ':') out += ',';
    out += key + "=" + format_number(value);
  };
  switch (kind_) {
    case KernelKind::identity:
      out = "identity";
      break;
    case KernelKind::soft:
    case KernelKind::hard:
      out = kind_ == KernelKind::soft ? "soft:" : "hard:";
      add("t", threshold_);
      if (degree() != kDefaultDegree) add("L", degree());
      break;
    case KernelKind::hermite_series:
    case KernelKind::polynomial: {
      const char key = kind_ == KernelKind::hermite_series ? 'a' : 'c';
      out = kind_ == KernelKind::hermite_series ? "hermite:" : "poly:";
      for (std::size_t k = 0; k < base_.size(); ++k) {
        if (base_[k] != 0.0) add(std::string(1, key) + std::to_string(k), base_[k]);
      }
      break;
    }
  }
  if (scale_ != 1.0) {
    if (kind_ == KernelKind::identity) out += ':';
    add("scale", scale_);
  }
  return out;
}

KernelSpec KernelSpec::parse(std::string_view text) {
  const std::string_view original = text;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  bool negate = false;
  if (!text.empty() && text.front() == '-') {
    negate = true;
    text.remove_prefix(1);
  }
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  std::map<std::string, double> args;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw InvalidParameter("expected key=value in kernel spec '" + std::string(original) + "'");
      const std::string key(item.substr(0, eq));
      if (args.count(key)) throw InvalidParameter("duplicate key '" + key + "' in kernel spec");
      args[key] = parse_number(item.substr(eq + 1), original);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }

  double scale = 1.0;
  if (auto it = args.find("scale"); it != args.end()) {
    scale = it->second;
    args.erase(it);
  }
  if (negate) scale = -scale;

  auto take_degree = [&]() {
    int L = kDefaultDegree;
    if (auto it = args.find("L"); it != args.end()) {
      L = static_cast<int>(it->second);
      if (L != it->second || L < 1) throw InvalidParameter("L must be a positive integer");
      args.erase(it);
    }
    return L;
  };
  auto indexed = [&](char prefix) {
    std::vector<double> coeffs;
    for (const auto& [key, value] : args) {
      if (key.size() < 2 || key[0] != prefix ||
          !std::all_of(key.begin() + 1, key.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
        throw InvalidParameter("unexpected key '" + key + "' in kernel spec '" + std::string(original) + "'");
      const auto k = static_cast<std::size_t>(std::stoul(key.substr(1)));
      if (k > 200) throw InvalidParameter("coefficient index too large in kernel spec");
      if (coeffs.size() <= k) coeffs.resize(k + 1, 0.0);
      coeffs[k] = value;
    }
    args.clear();
    return coeffs;
  };

  KernelSpec spec = KernelSpec::identity();
  if (name == "identity" || name == "linear") {
    spec = KernelSpec::identity();
  } else if (name == "soft" || name == "hard") {
    const int L = take_degree();
    bool series = false;
    if (auto it = args.find("series"); it != args.end()) {
      if (it->second != 0.0 && it->second != 1.0) throw InvalidParameter("series must be 0 or 1");
      series = it->second == 1.0;
      args.erase(it);
    }
    auto it = args.find("t");
    if (it == args.end()) throw InvalidParameter("threshold kernel needs t=<value>");
    const double t = it->second;
    args.erase(it);
    spec = name == "soft" ? KernelSpec::soft(t, L) : KernelSpec::hard(t, L);
    if (series) {
      const std::string base = spec.label();
      spec = spec.truncated();
      spec.series_of_ = base + ",series=1";
    }
  } else if (name == "hermite") {
    spec = KernelSpec::hermite_series(indexed('a'));
  } else if (name == "poly") {
    spec = KernelSpec::polynomial(indexed('c'));
  } else {
    throw InvalidParameter("unknown kernel '" + std::string(name) + "'");
  }
  if (!args.empty())
    throw InvalidParameter("unexpected key '" + args.begin()->first + "' in kernel spec '" +
                           std::string(original) + "'");
  return scale == 1.0 ? spec : spec.scaled(scale);
}

std::vector<double> hermite_coeffs_of(const KernelSpec& f, int L, const HermiteBasis& basis) {
  return hermite_coeffs([&f](double x) { return f(x); }, L, basis);
}

double kernel_norm(const KernelSpec& spec) {
  switch (spec.kind()) {
    case KernelKind::soft:
    case KernelKind::hard: {
      const double cuts[] = {-spec.threshold(), spec.threshold()};
      return split_gaussian_rule(cuts).integrate([&spec](double x) { return spec(x) * spec(x); });
    }
    default: {
      double sum = 0.0;
      for (double a : spec.coeffs()) sum += a * a;
      return sum;
    }
  }
}

double tau_weight(int l, double beta, double lambda) {
  if (!(beta > 0.0)) throw InvalidParameter("beta must be positive");
  if (!(lambda >= 1.0)) throw InvalidParameter("lambda must be >= 1");
  const double excess = lambda - 1.0;
  if (excess == 0.0) return 0.0;
  const double log_w = l * std::log(excess) - 0.5 * std::lgamma(l + 1.0) - (l - 1) * std::log(beta);
  return std::exp(log_w);
}

double tau(const KernelSpec& spec, double beta, double lambda) {
  if (!(beta > 0.0)) throw InvalidParameter("beta must be positive");
  if (!(lambda >= 1.0)) throw InvalidParameter("lambda must be >= 1");
  const double excess = lambda - 1.0;
  if (excess == 0.0) return 0.0;
  double sum = 0.0;
  // w_l = (lambda-1)^l / (sqrt(l!) beta^{l-1}), built up from w_1 = lambda - 1.
  double w = excess;
  for (int l = 2; l <= spec.degree(); ++l) {
    w *= excess / (std::sqrt(static_cast<double>(l)) * beta);
    if (l >= 3) sum += spec.coeff(l) * w;
  }
  return sum;
}

double tau_exact(const KernelSpec& spec, double beta, double lambda) {
  if (spec.kind() != KernelKind::soft && spec.kind() != KernelKind::hard) return tau(spec, beta, lambda);
  if (!(beta > 0.0)) throw InvalidParameter("beta must be positive");
  if (!(lambda >= 1.0)) throw InvalidParameter("lambda must be >= 1");
  if (lambda == 1.0 || spec.threshold() == 0.0) return 0.0;
  const double mu = (lambda - 1.0) / beta;
  const double t = spec.threshold();
  const double cuts[] = {-t - mu, t - mu};
  const double mean = split_gaussian_rule(cuts).integrate([&](double z) { return spec(z + mu); });
  return beta * (mean - spec.a1() * mu);
}

double tau_tail_bound(const KernelSpec& spec, double beta, double lambda) {
  if (lambda == 1.0) return 0.0;
  double kept = 0.0;
  for (double a : spec.coeffs()) kept += a * a;
  const double residual = std::max(spec.nu2() - kept, 0.0);
  if (residual == 0.0) return 0.0;

  // log-sum-exp of log(w_k^2) over odd k > L.
  const int L = spec.degree();
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  for (int k = L + 1; k < 200000; ++k) {
    if (k % 2 == 0) continue;
    const double lw = 2.0 * (k * std::log(lambda - 1.0) - 0.5 * std::lgamma(k + 1.0) -
                             (k - 1) * std::log(beta));
    logs.push_back(lw);
    max_log = std::max(max_log, lw);
    if (lw < max_log - 80.0 && logs.size() > 4 && lw < logs[logs.size() - 2]) break;
  }
  double acc = 0.0;
  for (double lw : logs) acc += std::exp(lw - max_log);
  const double log_sum = max_log + std::log(acc);
  return std::sqrt(residual) * std::exp(0.5 * log_sum);
}

}  // namespace gct
