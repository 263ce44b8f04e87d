#pragma once

#include <Eigen/Dense>

namespace pinntk {

/// Gauss-Hermite rule in probabilists' normalization: for ξ ~ N(0, 1),
///   E[f(ξ)] ≈ sum_i weights[i] * f(nodes[i]),
/// with weights summing to one.  Nodes and weights come from the
/// symmetric-tridiagonal Jacobi matrix of the Hermite recurrence
/// (Golub-Welsch); rules are cached per node count.
struct GaussHermite {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  /// Cached rule with n >= 2 nodes.
  static const GaussHermite& get(int n);
};

}  // namespace pinntk
