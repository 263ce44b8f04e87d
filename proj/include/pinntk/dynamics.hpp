#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "pinntk/analytic_kernel.hpp"
#include "pinntk/multi_index.hpp"
#include "pinntk/network.hpp"

namespace pinntk {

/// Scalar solution map of kernel gradient flow: (1 - e^{-tz})/z, continued
/// by its limit t at z = 0 and evaluated through a series branch when tz is
/// tiny so the subtraction never cancels.
double phi_gf(double t, double z);

/// Prefactor convention for squared-residual losses: Half is the analysis
/// form 1/(2n), Mean the practical form 1/n.  Everything downstream (loss
/// values, gradients, the boundary weight of the PINN loss) scales along.
enum class LossNorm { Half, Mean };

/// Plain is the operator-residual loss sum (T u(x_i) - y_i)^2 with the
/// problem's own operator.  SineMasked, SineMaskedSecond and SinePinn are
/// the three one-dimensional benchmark losses against the target
/// sin(2 pi a x): residual D u, residual -(D u)'' with the distance mask
/// D(x) = x(1-x), and the standard PINN split -u'' + boundary penalty.
enum class LossVariant { Plain, SineMasked, SineMaskedSecond, SinePinn };

struct TrainingProblem {
  Eigen::MatrixXd X;  // n x d sample points
  Eigen::VectorXd Y;  // n targets
  DiffOperator op = DiffOperator::identity(1);  // used by the Plain variant
  LossVariant variant = LossVariant::Plain;
  LossNorm norm = LossNorm::Mean;
  double w = 0.5;       // interior/boundary split of SinePinn, in (0, 1)
  double freq_a = 1.0;  // target frequency of the sine benchmarks

  void validate() const;
};

/// The residual operator of a sine-benchmark variant (dimension 1):
/// multiplication by D, the expanded -d^2/dx^2 (D .), or -d^2/dx^2 for the
/// PINN interior term.
DiffOperator section_operator(LossVariant variant);

/// Benchmark problem on given 1-d samples: fills Y with sin(2 pi a x_i).
TrainingProblem make_sine_problem(LossVariant variant, const Eigen::MatrixXd& X,
                                  double freq_a, double w, LossNorm norm);

double loss_eval(const TrainingProblem& problem, const NetworkConfig& config,
                 const NetworkParams& params);

/// Loss and its flat parameter gradient in one pass (the residuals feed the
/// weighted reverse sweep directly).
std::pair<double, Eigen::VectorXd> loss_and_gradient(
    const TrainingProblem& problem, const NetworkConfig& config,
    const NetworkParams& params);

/// Checkpoint schedule 0, 1, 2, 4, 8, ... capped and terminated at `steps`.
std::vector<long> geometric_checkpoints(long steps);

/// Optional function-space recording: evaluate `op` applied to the network
/// on fixed points at every checkpoint.
struct EvalGrid {
  Eigen::MatrixXd points;  // g x d
  DiffOperator op = DiffOperator::identity(1);
};

struct Trajectory {
  std::vector<long> steps;
  std::vector<double> times;   // step * lr
  std::vector<double> losses;  // loss at the checkpointed state
  std::vector<Eigen::VectorXd> grid_values;  // one per checkpoint if a grid
};

/// Full-batch gradient descent on the problem's loss; params are updated in
/// place.  Throws NumericalError naming the step if the loss or gradient
/// turns non-finite.
Trajectory gradient_descent(const TrainingProblem& problem,
                            const NetworkConfig& config, NetworkParams& params,
                            double lr, long steps,
                            const std::vector<long>& checkpoints,
                            const EvalGrid* grid = nullptr);

struct AdamOptions {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam on the normalized loss L(theta)/L(theta_0); recorded losses are the
/// normalized values (so checkpoint 0 records exactly 1).
Trajectory adam_train(const TrainingProblem& problem,
                      const NetworkConfig& config, NetworkParams& params,
                      const AdamOptions& opts, long steps,
                      const std::vector<long>& checkpoints,
                      const EvalGrid* grid = nullptr);

/// Eigendecomposition of (1/n) K(X, X) plus the data needed to evaluate the
/// closed-form kernel flow from any initial function values.
struct FlowSolution {
  Eigen::VectorXd eigvals;  // ascending eigenvalues of (1/n) K
  Eigen::MatrixXd eigvecs;  // orthonormal columns
  Eigen::VectorXd v0;       // initial values at the training points
  Eigen::VectorXd Y;
  int n = 0;

  double lambda_min() const { return eigvals.minCoeff(); }
};

/// Validates symmetry and near-positive-semidefiniteness (eigenvalues no
/// lower than -1e-8 times the largest); throws NumericalError otherwise.
FlowSolution make_flow(const Eigen::MatrixXd& K, const Eigen::VectorXd& v0,
                       const Eigen::VectorXd& Y);

/// v_t at one point: v0x + (1/n) k_row^T U phi_t(Lambda) U^T (Y - v0).
double kernel_flow_predict(const FlowSolution& flow,
                           const Eigen::VectorXd& kernel_row, double v0x,
                           double t);

/// Batched form: rows of K_rows are kernel rows of distinct points.
Eigen::VectorXd kernel_flow_predict(const FlowSolution& flow,
                                    const Eigen::MatrixXd& kernel_rows,
                                    const Eigen::VectorXd& v0_rows, double t);

struct CompareResult {
  std::vector<long> steps;
  std::vector<double> times;
  std::vector<double> losses;
  std::vector<double> sup_deviation;  // sup over the grid per checkpoint
  double lambda_min = 0.0;            // of (1/n) times the analytic Gram
  Eigen::VectorXd final_network;      // T u on the grid at the last checkpoint
  Eigen::VectorXd final_kernel;       // kernel-flow values there
};

/// Trains the network by gradient descent on the Plain/Half loss while
/// evolving the closed-form flow of the analytic operator kernel from the
/// same initial function, and records the sup-norm gap on the grid.  Step k
/// is compared to flow time k * lr.  Requires the analytic Gram to be
/// strictly positive definite.
CompareResult compare_dynamics(const TrainingProblem& problem,
                               const NetworkConfig& config,
                               NetworkParams& params, const KernelSpec& kspec,
                               double lr, long steps,
                               const Eigen::MatrixXd& grid,
                               const std::vector<long>& checkpoints);

}  // namespace pinntk
