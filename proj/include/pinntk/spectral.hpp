#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace pinntk {

/// Full spectrum of a symmetric matrix, sorted descending.  The input must
/// be symmetric within 1e-10 relative to its largest entry and no larger
/// than 2000 x 2000 (the dense-solver budget this library commits to).
Eigen::VectorXd sym_eigvals(const Eigen::MatrixXd& M);

/// Eigendecomposition of a Gram matrix together with a free-form label that
/// records where the matrix came from (operator name, width, seed, ...).
/// Eigenvalues descend and eigenvector columns follow the same order, so
/// matrix = Q diag(eigenvalues) Q^T up to solver accuracy.
struct GramSpectrum {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
  std::string label;
};

GramSpectrum gram_spectrum(const Eigen::MatrixXd& M, std::string label);

/// Scale each spectrum so its leading entry equals one, making decay rates
/// comparable across operators.  Every spectrum must be non-empty with a
/// strictly positive leading eigenvalue.
std::vector<Eigen::VectorXd> normalize_spectra(
    const std::vector<Eigen::VectorXd>& spectra);

/// Smallest 1-based index j with eigs[j-1] < threshold, or eigs.size() + 1
/// when the spectrum never crosses.  Meant for normalized spectra (leading
/// entry one); a slower decay shows up as a larger index.
long decay_index(const Eigen::VectorXd& eigs, double threshold);

/// Midpoint-rule discretization of an integral operator on an interval:
/// n quadrature points with positive weights summing to the length.
struct NystromProblem {
  std::function<double(double, double)> kernel;
  Eigen::VectorXd points;
  Eigen::VectorXd weights;

  static NystromProblem uniform_interval(
      std::function<double(double, double)> kernel, double a, double b,
      int n);
};

/// Eigenvalues of the symmetrically weighted kernel matrix
/// sqrt(w_i) K(x_i, x_j) sqrt(w_j), descending.  They approximate the
/// integral-operator eigenvalues on the problem's domain.  The kernel must
/// evaluate symmetrically on the grid (checked like sym_eigvals).
Eigen::VectorXd nystrom_eigs(const NystromProblem& p);

struct RatioBoundResult {
  double max_ratio = 0.0;  // max over tested indices of lambda_j / mu_j
  long arg_j = 0;          // 1-based index attaining the max
  double bound = 0.0;      // c_t^2 * (1 + slack)
  bool pass = false;
};

/// Test the spectral comparison bound sup_{j <= J} lambda_j / mu_j
/// <= c_t^2 (1 + slack), where lambda is the spectrum of the plain kernel's
/// integral operator and mu the spectrum of the operator-applied kernel's.
/// Both spectra must be strictly positive through index J.
RatioBoundResult ratio_bound_check(const Eigen::VectorXd& lambda,
                                   const Eigen::VectorXd& mu, double c_t,
                                   double slack, long J);

}  // namespace pinntk
