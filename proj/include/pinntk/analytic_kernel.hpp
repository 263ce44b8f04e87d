#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pinntk/jet.hpp"
#include "pinntk/multi_index.hpp"

namespace pinntk {

/// Architecture description for the infinite-width kernels.
///
/// depth      number of hidden layers L (>= 1); the network computes
///            f = W^L sigma(W^{L-1} ... sigma(W^0 x)), so the kernel
///            recurrence runs over L+1 levels.
/// activation name registered with Activation::get.
/// order      per-argument derivative order k carried by kernel_bijet.
///            Mixed entries go up to D^alpha_x D^beta_x' with
///            |alpha|, |beta| <= k.
/// quad_nodes Gauss-Hermite node count per axis for the layer
///            expectations.
struct KernelSpec {
  int depth = 1;
  std::string activation = "tanh";
  int order = 0;
  int quad_nodes = 64;

  /// Throws std::invalid_argument when the spec is unusable: depth < 1,
  /// unknown activation, order outside [0, 6], fewer than 20 quadrature
  /// nodes, or an activation rougher than C^order.  Piecewise activations
  /// are evaluated through their almost-everywhere derivative families
  /// where the recurrence needs derivatives beyond the classical ones.
  void validate() const;
};

/// 2x2 covariance block for one input pair at one layer:
///   [ a11  a12 ]
///   [ a12  a22 ]
struct CovBlock {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;
};

/// E[sigma^(fi)(u) sigma^(fj)(v)] for (u, v) ~ N(0, B), by tensorized
/// Gauss-Hermite quadrature with spec.quad_nodes nodes per axis.
///
/// Variances are floored at 1e-30; a floored axis degenerates to a point
/// mass at zero, which collapses that side of the product to
/// sigma^(fi)(0) exactly.  Throws std::invalid_argument when B is not
/// positive semidefinite beyond rounding slack or when fi/fj exceed the
/// derivatives the activation can provide.
double gauss_pair_expectation(int fi, int fj, const CovBlock& block,
                              const KernelSpec& spec);

/// Values of the random-feature and tangent kernels at every level of
/// the recurrence.  rf[l-1] = K^RF_l and nt[l-1] = K^NT_l for
/// l = 1 .. depth + 1; the network kernels are the last entries.
struct KernelLadder {
  std::vector<double> rf;
  std::vector<double> nt;
};

/// Runs the kernel recurrence at a single input pair.  spec.order is
/// ignored here; only values are produced.
KernelLadder rf_nt_kernels(const KernelSpec& spec, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xp);

/// The tangent kernel of the network together with all mixed partials
/// D^alpha_x D^beta_x' K^NT_{L+1}(x, x') for |alpha|, |beta| <= spec.order,
/// packed as a BiJet over BiJetLayout::get(d, spec.order).
///
/// Collinear pairs (and the diagonal x = x') make the bivariate change of
/// variables degenerate; those are resolved by an even-extension Richardson
/// limit over perturbed pairs.  Throws NumericalError if the pair stays
/// degenerate at every perturbation size.
BiJet kernel_bijet(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& xp);

/// T_x T_x' K^NT_{L+1}(x, x'): the operator applied in each argument,
/// contracted against the mixed-derivative table from kernel_bijet.
/// Requires op.order() <= spec.order and matching dimensions.
double operator_kernel(const DiffOperator& op, const KernelSpec& spec,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xp);

/// n x n matrix [T_x T_x' K^NT](x_i, x_j) over the rows of X (n x d).
/// Symmetric by construction: each unordered pair is evaluated once and
/// mirrored.
Eigen::MatrixXd analytic_operator_gram(const DiffOperator& op,
                                       const KernelSpec& spec,
                                       const Eigen::MatrixXd& X);

}  // namespace pinntk
