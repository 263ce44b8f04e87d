#include "pinntk/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace pinntk {

namespace {

GaussHermite build_rule(int n) {
  // Jacobi matrix for the probabilists' Hermite polynomials He_k:
  // zero diagonal, off-diagonal sqrt(k).  Its eigenvalues are the nodes and
  // the squared first eigenvector components are the weights (total mass 1).
  // The matrix is already tridiagonal, so skip the Householder reduction.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd subdiag(n - 1);
  for (int k = 1; k < n; ++k) {
    subdiag[k - 1] = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("GaussHermite: eigen decomposition failed");
  }
  GaussHermite rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = solver.eigenvectors().row(0).transpose().array().square();
  // Normalize away rounding drift so expectations of constants are exact.
  rule.weights /= rule.weights.sum();
  return rule;
}

}  // namespace

const GaussHermite& GaussHermite::get(int n) {
  if (n < 2) {
    throw std::invalid_argument("GaussHermite: need at least 2 nodes");
  }
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermite>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermite>(build_rule(n));
  return *slot;
}

}  // namespace pinntk
