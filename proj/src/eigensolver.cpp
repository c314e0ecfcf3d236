#include "gct/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "gct/error.hpp"
#include "gct/rng.hpp"

namespace gct {

namespace {

void canonical_sign(Eigen::Ref<Eigen::VectorXd> u) {
  Eigen::Index arg = 0;
  u.cwiseAbs().maxCoeff(&arg);
  if (u[arg] < 0.0) u = -u;
}

double residual_norm(const Eigen::MatrixXd& K, const Eigen::VectorXd& u, double value) {
  return (K * u - value * u).norm();
}

EigenPairs finish(const Eigen::MatrixXd& K, EigenPairs out, double accept) {
  out.max_residual = 0.0;
  for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
    canonical_sign(out.vectors.col(j));
    out.max_residual = std::max(out.max_residual, residual_norm(K, out.vectors.col(j), out.values[j]));
  }
  if (!(out.max_residual < accept)) throw SolverError("eigenpair residual above contract", out.max_residual);
  return out;
}

EigenPairs dense_top(const Eigen::MatrixXd& K, int k, double accept) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(K);
  if (solver.info() != Eigen::Success) throw SolverError("dense eigendecomposition failed", NAN);
  EigenPairs out;
  out.values = solver.eigenvalues().tail(k).reverse();
  out.vectors = solver.eigenvectors().rightCols(k).rowwise().reverse();
  return finish(K, std::move(out), accept);
}

// Orthogonalizes r against the first m columns of Q twice (classical
// Gram-Schmidt with one reorthogonalization pass).
void orthogonalize(const Eigen::MatrixXd& Q, Eigen::Index m, Eigen::VectorXd& r) {
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd h = Q.leftCols(m).transpose() * r;
    r.noalias() -= Q.leftCols(m) * h;
  }
}

EigenPairs lanczos_top(const Eigen::MatrixXd& K, int k, const EigOptions& options) {
  const Eigen::Index p = K.rows();
  CounterRng rng(options.seed);
  auto random_unit = [&](Eigen::Index m, const Eigen::MatrixXd& Q) {
    Eigen::VectorXd r(p);
    rng.fill_normal(std::span<double>(r.data(), static_cast<std::size_t>(p)));
    if (m > 0) orthogonalize(Q, m, r);
    return Eigen::VectorXd(r / r.norm());
  };

  Eigen::MatrixXd Q(p, std::min<Eigen::Index>(p, 64));
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples q_j and q_{j+1}
  Q.col(0) = random_unit(0, Q);
  const double scale_hint = std::max(1.0, K.cwiseAbs().rowwise().sum().maxCoeff());

  Eigen::Index m = 0;
  Eigen::VectorXd r;
  int check_every = std::max(10, 2 * k);
  while (true) {
    r.noalias() = K * Q.col(m);
    alpha.push_back(Q.col(m).dot(r));
    ++m;
    orthogonalize(Q, m, r);
    double b = r.norm();

    const bool full = m == p;
    if (m >= k && (full || m % check_every == 0 || b <= 1e-12 * scale_hint)) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index j = 0; j < m; ++j) {
        T(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ts(T);
      const Eigen::VectorXd theta = ts.eigenvalues().tail(k).reverse();
      const Eigen::MatrixXd Y = ts.eigenvectors().rightCols(k).rowwise().reverse();
      const double target = options.tol * std::max(1.0, std::abs(theta[0]));
      double worst = 0.0;
      for (int j = 0; j < k; ++j) worst = std::max(worst, std::abs(b * Y(m - 1, j)));
      if (worst <= target || full) {
        EigenPairs out;
        out.values = theta;
        out.vectors = Q.leftCols(m) * Y;
        for (int j = 0; j < k; ++j) out.vectors.col(j).normalize();
        out.iterations = static_cast<int>(m);
        return finish(K, std::move(out), options.accept);
      }
    }
    if (full) break;

    if (m == Q.cols()) Q.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(p, 2 * Q.cols()));
    if (b <= 1e-12 * scale_hint) {
      // Invariant subspace: continue from a fresh direction with a zero coupling.
      beta.push_back(0.0);
      Q.col(m) = random_unit(m, Q);
    } else {
      beta.push_back(b);
      Q.col(m) = r / b;
    }
  }
  throw SolverError("Lanczos iteration exhausted the space", NAN);
}

}  // namespace

EigenPairs top_eigs(const Eigen::MatrixXd& K, int k, const EigOptions& options) {
  if (K.rows() != K.cols()) throw InvalidParameter("top_eigs needs a square matrix");
  if (k < 1 || k > K.rows()) throw InvalidParameter("top_eigs needs 1 <= k <= dimension");
  if (!K.allFinite()) throw NumericError("top_eigs input has non-finite entries");
  const bool dense = options.method == EigMethod::dense ||
                     (options.method == EigMethod::automatic && K.rows() <= options.dense_max);
  if (dense) return dense_top(K, k, options.accept);
  return lanczos_top(K, k, options);
}

}  // namespace gct
