#include "gct/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gct/error.hpp"
#include "gct/rng.hpp"

namespace gct {

std::string_view to_string(SpikePrior prior) {
  switch (prior) {
    case SpikePrior::rademacher:
      return "rademacher";
    case SpikePrior::uniform_shell:
      return "uniform-shell";
  }
  return "unknown";
}

SpikePrior parse_prior(std::string_view text) {
  if (text == "rademacher") return SpikePrior::rademacher;
  if (text == "uniform-shell" || text == "uniform_shell" || text == "uniform")
    return SpikePrior::uniform_shell;
  throw InvalidParameter("unknown spike prior '" + std::string(text) + "'");
}

double ModelParams::beta() const { return m / std::sqrt(static_cast<double>(n)); }

void ModelParams::validate() const {
  if (n < 1) throw InvalidParameter("n must be positive");
  if (p < 1) throw InvalidParameter("p must be positive");
  if (m < 1 || m > p) throw InvalidParameter("sparsity m must satisfy 1 <= m <= p");
  if (!(lambda >= 1.0) || !std::isfinite(lambda))
    throw InvalidParameter("signal strength lambda must be finite and >= 1");
}

SpikeVector make_spike(int p, int m, SpikePrior prior, std::uint64_t seed) {
  if (p < 1) throw InvalidParameter("p must be positive");
  if (m < 1 || m > p) throw InvalidParameter("sparsity m must satisfy 1 <= m <= p");

  CounterRng rng(seed, kSpikeStream);

  // Partial Fisher-Yates: the first m slots become a uniform m-subset.
  std::vector<int> index(static_cast<std::size_t>(p));
  std::iota(index.begin(), index.end(), 0);
  for (int i = 0; i < m; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
    std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
  }
  SpikeVector v;
  v.prior = prior;
  v.support.assign(index.begin(), index.begin() + m);
  std::sort(v.support.begin(), v.support.end());
  v.entries = Eigen::VectorXd::Zero(p);

  if (prior == SpikePrior::rademacher) {
    const double mag = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i : v.support) v.entries[i] = (rng.next_u64() >> 63) ? mag : -mag;
  } else {
    // xi ~ unif([-2,-1] u [1,2]), then normalize.
    for (int i : v.support) {
      const double magnitude = 1.0 + rng.uniform();
      v.entries[i] = (rng.next_u64() >> 63) ? magnitude : -magnitude;
    }
    v.entries /= v.entries.norm();
  }
  return v;
}

Eigen::MatrixXd noise_gram(int n, int p, std::uint64_t seed) {
  CounterRng rng(seed, kNoiseStream);
  Eigen::MatrixXd Z(n, p);
  rng.fill_normal(std::span<double>(Z.data(), static_cast<std::size_t>(Z.size())));
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  S.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose(), 1.0 / n);
  S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
  return S;
}

SampleCov spiked_from_gram(Eigen::MatrixXd S, double lambda, const SpikeVector& v) {
  if (S.rows() != v.dim() || S.cols() != v.dim())
    throw InvalidParameter("spike dimension does not match the Gram matrix");
  SampleCov out;
  out.Sv = S * v.entries;
  out.vSv = v.entries.dot(out.Sv);
  out.Y = S;
  out.S = std::move(S);

  const double r = std::sqrt(lambda) - 1.0;
  if (r != 0.0) {
    const double c = r * r * out.vSv + 2.0 * r;
    const Eigen::VectorXd w = out.Sv - v.entries;
    // Only rows/columns in supp(v) change. Each entry is computed once from
    // the same expression, so Y stays bit-symmetric.
    for (int i : v.support) {
      const double vi = v.entries[i];
      for (int j = 0; j < out.Y.cols(); ++j) {
        const double vj = v.entries[j];
        const double delta = c * (vi * vj) + r * (vi * w[j] + w[i] * vj);
        out.Y(i, j) = out.S(i, j) + delta;
        out.Y(j, i) = out.Y(i, j);
      }
    }
  }
  return out;
}

SampleCov sample_covariance(const ModelParams& params, const SpikeVector& v) {
  params.validate();
  if (v.dim() != params.p) throw InvalidParameter("spike length must equal p");
  return spiked_from_gram(noise_gram(params.n, params.p, params.seed), params.lambda, v);
}

}  // namespace gct
