#include "krylov.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <random>

namespace periodic_heat::detail {

namespace {

using MatC = Eigen::MatrixXcd;

// Orthonormalizes block against basis (twice) and itself; columns that
// collapse are replaced by fresh random directions.
MatC orthonormal_extension(const MatC& basis, MatC block, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const Eigen::Index n = block.rows();
  for (int pass = 0; pass < 2; ++pass)
    if (basis.cols() > 0) block -= basis * (basis.adjoint() * block);
  MatC out(n, 0);
  for (Eigen::Index j = 0; j < block.cols(); ++j) {
    Eigen::VectorXcd v = block.col(j);
    for (int attempt = 0; attempt < 4; ++attempt) {
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (basis.cols() > 0) v -= basis * (basis.adjoint() * v);
        if (out.cols() > 0) v -= out * (out.adjoint() * v);
      }
      const double after = v.norm();
      if (after > 1e-10 * std::max(before, 1e-300) && after > 0.0) break;
      for (Eigen::Index i = 0; i < n; ++i) v[i] = {normal(rng), normal(rng)};
    }
    const double norm = v.norm();
    if (norm == 0.0 || basis.cols() + out.cols() >= n) continue;
    out.conservativeResize(n, out.cols() + 1);
    out.col(out.cols() - 1) = v / norm;
  }
  return out;
}

}  // namespace

LowestEigs block_krylov_lowest(const Eigen::SparseMatrix<std::complex<double>>& S, std::size_t m, double tol,
                               std::size_t max_subspace) {
  const Eigen::Index n = S.rows();
  const Eigen::Index want = static_cast<Eigen::Index>(m);
  const Eigen::Index block = std::min<Eigen::Index>(n, std::max<Eigen::Index>(want + 4, 8));
  const Eigen::Index cap =
      std::min<Eigen::Index>(n, std::max<Eigen::Index>(static_cast<Eigen::Index>(max_subspace), 3 * block));

  double norm_est = 0.0;
  for (Eigen::Index col = 0; col < S.outerSize(); ++col) {
    double s = 0.0;
    for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(S, col); it; ++it) s += std::abs(it.value());
    norm_est = std::max(norm_est, s);
  }

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  MatC start(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) start(i, j) = {normal(rng), normal(rng)};

  LowestEigs out;
  out.norm_estimate = norm_est;
  MatC restart_block = start;
  for (int restart = 0; restart < 200; ++restart) {
    out.restarts = restart;
    MatC V = orthonormal_extension(MatC(n, 0), restart_block, rng);
    MatC SV = S * V;
    Eigen::Index last_begin = 0;
    while (V.cols() < cap) {
      MatC next = SV.middleCols(last_begin, V.cols() - last_begin);
      const Eigen::Index room = cap - V.cols();
      if (next.cols() > room) next.conservativeResize(Eigen::NoChange, room);
      MatC ext = orthonormal_extension(V, next, rng);
      if (ext.cols() == 0) break;
      last_begin = V.cols();
      V.conservativeResize(Eigen::NoChange, V.cols() + ext.cols());
      V.rightCols(ext.cols()) = ext;
      SV.conservativeResize(Eigen::NoChange, SV.cols() + ext.cols());
      SV.rightCols(ext.cols()) = S * ext;
    }

    MatC H = V.adjoint() * SV;
    H = 0.5 * (H + H.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatC> eig(H);
    const Eigen::Index got = std::min<Eigen::Index>(want, H.rows());
    out.values = eig.eigenvalues().head(got);
    out.vectors = V * eig.eigenvectors().leftCols(got);
    const MatC SX = SV * eig.eigenvectors().leftCols(got);
    out.residuals.resize(got);
    for (Eigen::Index i = 0; i < got; ++i)
      out.residuals[i] = (SX.col(i) - out.values[i] * out.vectors.col(i)).norm();
    const bool exhaustive = V.cols() >= n;
    if (exhaustive || out.residuals.maxCoeff() <= tol * std::max(norm_est, 1e-300)) {
      out.converged = true;
      return out;
    }
    const Eigen::Index keep = std::min<Eigen::Index>(block, H.rows());
    restart_block = V * eig.eigenvectors().leftCols(keep);
  }
  return out;
}

}  // namespace periodic_heat::detail
