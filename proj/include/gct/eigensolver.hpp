#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace gct {

enum class EigMethod { automatic, dense, lanczos };

struct EigOptions {
  EigMethod method = EigMethod::automatic;
  /// automatic: dense decomposition up to this dimension, Lanczos above.
  int dense_max = 300;
  /// Ritz residual target, relative to max(1, |lambda_1|).
  double tol = 1e-11;
  /// Contract checked on the returned pairs: ||K u - lambda u|| < accept.
  double accept = 1e-7;
  std::uint64_t seed = 0x6c616e637a6f73ULL;
};

/// Top-k eigenpairs of a symmetric matrix, eigenvalues descending.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // columns, unit norm
  double max_residual = 0.0;
  int iterations = 0;
};

/// Largest k eigenpairs. Each eigenvector is signed so that its entry of
/// largest magnitude is positive. Throws SolverError when the residual
/// contract cannot be met.
EigenPairs top_eigs(const Eigen::MatrixXd& K, int k, const EigOptions& options = {});

}  // namespace gct
