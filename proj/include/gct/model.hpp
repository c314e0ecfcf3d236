#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gct {

enum class SpikePrior { rademacher, uniform_shell };

std::string_view to_string(SpikePrior prior);
SpikePrior parse_prior(std::string_view text);

/// Unit-norm spike with exactly m nonzero entries placed on a random support.
struct SpikeVector {
  Eigen::VectorXd entries;
  std::vector<int> support;  // sorted ascending
  SpikePrior prior = SpikePrior::rademacher;

  int dim() const { return static_cast<int>(entries.size()); }
  int sparsity() const { return static_cast<int>(support.size()); }
};

struct ModelParams {
  int n = 2000;
  int p = 1000;
  int m = 11;
  double lambda = 1.0;
  SpikePrior prior = SpikePrior::rademacher;
  std::uint64_t seed = 0;

  double gamma() const { return static_cast<double>(p) / n; }
  double beta() const;

  /// Throws InvalidParameter unless 1 <= m <= p, n >= 1 and lambda >= 1.
  void validate() const;
};

/// Noise Gram matrix S = Z'Z/n and the spiked sample covariance
/// Y = Sigma^{1/2} S Sigma^{1/2}, with Sigma = (lambda - 1) v v' + I.
struct SampleCov {
  Eigen::MatrixXd S;
  Eigen::MatrixXd Y;
  Eigen::VectorXd Sv;
  double vSv = 0.0;
};

/// Stream ids inside one trial seed.
inline constexpr std::uint64_t kSpikeStream = 0;
inline constexpr std::uint64_t kNoiseStream = 1;

/// Per-trial seed used by the model layer.
constexpr std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial) {
  return base_seed ^ trial;
}

SpikeVector make_spike(int p, int m, SpikePrior prior, std::uint64_t seed);

/// Draws Z (n x p, i.i.d. N(0,1)) from the noise stream of params.seed and
/// forms Y through the rank-one expansion of Sigma^{1/2} around I:
///   Y = S + c v v' + (sqrt(lambda) - 1) (v (Sv - v)' + (Sv - v) v'),
///   c = (sqrt(lambda) - 1)^2 v'Sv + 2 (sqrt(lambda) - 1).
/// No p x p square root is formed.
SampleCov sample_covariance(const ModelParams& params, const SpikeVector& v);

/// Same expansion applied to a caller-supplied noise Gram matrix.
SampleCov spiked_from_gram(Eigen::MatrixXd S, double lambda, const SpikeVector& v);

/// Noise Gram matrix S = Z'Z/n only (lambda = 1 data).
Eigen::MatrixXd noise_gram(int n, int p, std::uint64_t seed);

}  // namespace gct
