#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pinntk/jet.hpp"
#include "pinntk/multi_index.hpp"
#include "pinntk/rng.hpp"

namespace pinntk {

/// How parameters are drawn and how layers are scaled.
///
/// NtkNormal: standard-normal weights, layer rule
///   z^1 = W^0 x,  z^{l+1} = (1/sqrt(m_l)) W^l sigma(z^l),
/// the parameterization under which the infinite-width kernels are exact.
///
/// TorchDefault: the practical training setup; weights and biases drawn
/// uniformly from (-1/sqrt(m_l), 1/sqrt(m_l)) (fan-in bound) and layers
/// apply W x + b with no width rescaling.
enum class Parameterization { NtkNormal, TorchDefault };

struct NetworkConfig {
  std::vector<int> widths;  // m_0 .. m_{L+1}, m_{L+1} == 1
  std::string activation = "tanh";
  bool use_bias = false;
  Parameterization param = Parameterization::NtkNormal;

  int depth() const { return static_cast<int>(widths.size()) - 2; }
  int input_dim() const { return widths.front(); }
  int param_count() const;

  /// Throws std::invalid_argument for empty/short width lists, nonpositive
  /// widths, output width != 1, or an unknown activation.
  void validate() const;
};

struct NetworkParams {
  std::vector<Eigen::MatrixXd> weights;  // W^l: m_{l+1} x m_l
  std::vector<Eigen::VectorXd> biases;   // empty unless config.use_bias
};

/// Draw fresh parameters from the stream per the config's parameterization.
NetworkParams init_params(const NetworkConfig& config, RngStream& rng);

/// Jet of the scalar network output at x, entries D^alpha u for
/// |alpha| <= order.  Requires order <= the activation's smoothness.
Jet forward_jet(const NetworkConfig& config, const NetworkParams& params,
                const Eigen::VectorXd& x, int order);

/// T u(x_i) for every row x_i of X, evaluated in one batched pass.
Eigen::VectorXd forward_Tu(const NetworkConfig& config,
                           const NetworkParams& params, const DiffOperator& op,
                           const Eigen::MatrixXd& X);

/// Flat gradient d(T u(x))/d(theta).  Layout: for l = 0..L the entries of
/// W^l in row-major order, followed by b^l when biases are enabled.
Eigen::VectorXd grad_theta_Tu(const NetworkConfig& config,
                              const NetworkParams& params,
                              const DiffOperator& op, const Eigen::VectorXd& x);

/// sum_i weights[i] * grad_theta(T u)(x_i), computed in one batched reverse
/// pass.  This is the workhorse of training loops: a squared-residual loss
/// gradient is such a weighted sum.
Eigen::VectorXd grad_theta_weighted(const NetworkConfig& config,
                                    const NetworkParams& params,
                                    const DiffOperator& op,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& weights);

/// <grad_theta(Tu)(x), grad_theta(Tu)(x')>: the finite-width counterpart of
/// the operator kernel at the current parameters.
double empirical_nnk(const NetworkConfig& config, const NetworkParams& params,
                     const DiffOperator& op, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xp);

/// n x n matrix of empirical_nnk over the rows of X; exactly symmetric.
Eigen::MatrixXd empirical_gram(const NetworkConfig& config,
                               const NetworkParams& params,
                               const DiffOperator& op,
                               const Eigen::MatrixXd& X);

/// In-place params += scale * flat (same layout as grad_theta_Tu).
void add_scaled_flat(const NetworkConfig& config, NetworkParams& params,
                     const Eigen::VectorXd& flat, double scale);

}  // namespace pinntk
