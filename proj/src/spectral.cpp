#include "pinntk/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace pinntk {

namespace {

constexpr Eigen::Index kMaxDenseSize = 2000;

// Shared gate for every eigensolve in this module: square shape, the dense
// size budget, and symmetry within 1e-10 relative to the largest entry.
void check_symmetric(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols() || M.rows() == 0) {
    throw std::invalid_argument("matrix must be square and non-empty");
  }
  if (M.rows() > kMaxDenseSize) {
    throw std::invalid_argument(
        "matrix exceeds the 2000 x 2000 dense eigensolver budget");
  }
  const double scale = std::max(M.cwiseAbs().maxCoeff(), 1e-300);
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("matrix must be symmetric");
  }
}

}  // namespace

Eigen::VectorXd sym_eigvals(const Eigen::MatrixXd& M) {
  check_symmetric(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolve failed to converge");
  }
  return es.eigenvalues().reverse();
}

GramSpectrum gram_spectrum(const Eigen::MatrixXd& M, std::string label) {
  check_symmetric(M);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigensolve failed to converge");
  }
  GramSpectrum out;
  out.matrix = M;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  out.label = std::move(label);
  return out;
}

std::vector<Eigen::VectorXd> normalize_spectra(
    const std::vector<Eigen::VectorXd>& spectra) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(spectra.size());
  for (const Eigen::VectorXd& s : spectra) {
    if (s.size() == 0) {
      throw std::invalid_argument("cannot normalize an empty spectrum");
    }
    if (!(s[0] > 0.0)) {
      throw std::invalid_argument(
          "cannot normalize a spectrum whose leading eigenvalue is not "
          "positive");
    }
    out.push_back(s / s[0]);
  }
  return out;
}

long decay_index(const Eigen::VectorXd& eigs, double threshold) {
  for (Eigen::Index j = 0; j < eigs.size(); ++j) {
    if (eigs[j] < threshold) {
      return static_cast<long>(j) + 1;
    }
  }
  return static_cast<long>(eigs.size()) + 1;
}

NystromProblem NystromProblem::uniform_interval(
    std::function<double(double, double)> kernel, double a, double b,
    int n) {
  if (!kernel) {
    throw std::invalid_argument("kernel must be callable");
  }
  if (!(b > a)) {
    throw std::invalid_argument("interval must satisfy a < b");
  }
  if (n < 1) {
    throw std::invalid_argument("grid needs at least one point");
  }
  NystromProblem p;
  p.kernel = std::move(kernel);
  const double h = (b - a) / n;
  p.points.resize(n);
  p.weights = Eigen::VectorXd::Constant(n, h);
  for (int i = 0; i < n; ++i) {
    p.points[i] = a + (i + 0.5) * h;
  }
  return p;
}

Eigen::VectorXd nystrom_eigs(const NystromProblem& p) {
  const Eigen::Index n = p.points.size();
  if (n == 0 || p.weights.size() != n) {
    throw std::invalid_argument(
        "problem needs matching non-empty points and weights");
  }
  if (!p.kernel) {
    throw std::invalid_argument("kernel must be callable");
  }
  if (p.weights.minCoeff() <= 0.0) {
    throw std::invalid_argument("quadrature weights must be positive");
  }
  const Eigen::VectorXd root_w = p.weights.cwiseSqrt();
  Eigen::MatrixXd A(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      A(i, j) = root_w[i] * p.kernel(p.points[i], p.points[j]) * root_w[j];
    }
  }
  // sym_eigvals re-checks symmetry, which is exactly the required guard
  // against kernels that evaluate asymmetrically on the grid.
  return sym_eigvals(A);
}

RatioBoundResult ratio_bound_check(const Eigen::VectorXd& lambda,
                                   const Eigen::VectorXd& mu, double c_t,
                                   double slack, long J) {
  if (J < 1) {
    throw std::invalid_argument("at least one index must be tested");
  }
  if (J > lambda.size() || J > mu.size()) {
    throw std::invalid_argument(
        "tested range exceeds the provided spectra");
  }
  if (!(c_t > 0.0) || !(slack >= 0.0)) {
    throw std::invalid_argument(
        "the constant must be positive and the slack non-negative");
  }
  RatioBoundResult res;
  res.bound = c_t * c_t * (1.0 + slack);
  for (long j = 0; j < J; ++j) {
    if (!(mu[j] > 0.0)) {
      throw std::invalid_argument(
          "mu must stay positive through the tested range");
    }
    if (!(lambda[j] > 0.0)) {
      throw std::invalid_argument(
          "lambda must stay positive through the tested range");
    }
    const double ratio = lambda[j] / mu[j];
    if (j == 0 || ratio > res.max_ratio) {
      res.max_ratio = ratio;
      res.arg_j = j + 1;
    }
  }
  res.pass = res.max_ratio <= res.bound;
  return res;
}

}  // namespace pinntk
