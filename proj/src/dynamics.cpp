#include "pinntk/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pinntk/errors.hpp"

namespace pinntk {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// One squared-residual block: weight * sum_i (T u(x_i) - y_i)^2.  Every loss
// variant is a short list of these, so evaluation and differentiation are
// shared.
struct Group {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;
  DiffOperator op;
  double weight;
};

std::vector<Group> residual_groups(const TrainingProblem& p) {
  const double base = (p.norm == LossNorm::Half) ? 0.5 : 1.0;
  const double n = static_cast<double>(p.X.rows());
  std::vector<Group> groups;
  switch (p.variant) {
    case LossVariant::Plain:
      groups.push_back({p.X, p.Y, p.op, base / n});
      break;
    case LossVariant::SineMasked:
    case LossVariant::SineMaskedSecond:
      groups.push_back({p.X, p.Y, section_operator(p.variant), base / n});
      break;
    case LossVariant::SinePinn: {
      groups.push_back(
          {p.X, p.Y, section_operator(p.variant), base * (1.0 - p.w) / n});
      Eigen::MatrixXd Xb(2, 1);
      Xb << 0.0, 1.0;
      groups.push_back({Xb, Eigen::VectorXd::Zero(2),
                        DiffOperator::identity(1), base * p.w});
      break;
    }
  }
  return groups;
}

void require_finite_loss(double loss, long step) {
  if (!std::isfinite(loss)) {
    throw NumericalError("training diverged: loss is non-finite at step " +
                         std::to_string(step));
  }
}

// Sorted, deduplicated checkpoint steps restricted to [0, steps].
std::vector<long> normalize_checkpoints(const std::vector<long>& raw,
                                        long steps) {
  std::vector<long> cps;
  for (long c : raw) {
    if (c >= 0 && c <= steps) cps.push_back(c);
  }
  std::sort(cps.begin(), cps.end());
  cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  return cps;
}

void record_checkpoint(Trajectory& traj, const TrainingProblem& problem,
                       const NetworkConfig& config, const NetworkParams& params,
                       const EvalGrid* grid, long step, double time,
                       double loss_divisor) {
  const double loss = loss_eval(problem, config, params) / loss_divisor;
  require_finite_loss(loss, step);
  traj.steps.push_back(step);
  traj.times.push_back(time);
  traj.losses.push_back(loss);
  if (grid != nullptr) {
    traj.grid_values.push_back(
        forward_Tu(config, params, grid->op, grid->points));
  }
}

}  // namespace

double phi_gf(double t, double z) {
  if (t < 0) throw std::invalid_argument("phi_gf requires t >= 0");
  const double tz = t * z;
  if (std::abs(tz) < 1e-6) {
    // (1 - e^{-tz})/z = t (1 - tz/2 + (tz)^2/6 - ...), truncated well below
    // double precision for |tz| this small; exact limit t at z = 0.
    return t * (1.0 - 0.5 * tz + tz * tz / 6.0);
  }
  return -std::expm1(-tz) / z;
}

void TrainingProblem::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("at least one sample required");
  if (Y.size() != X.rows()) {
    throw std::invalid_argument("one target per sample required");
  }
  if (variant == LossVariant::Plain) {
    if (op.dim() != X.cols()) {
      throw std::invalid_argument("operator dimension must match the samples");
    }
  } else {
    if (X.cols() != 1) {
      throw std::invalid_argument("sine benchmark losses are one-dimensional");
    }
  }
  if (variant == LossVariant::SinePinn && (w <= 0.0 || w >= 1.0)) {
    throw std::invalid_argument("w must lie in (0,1)");
  }
}

DiffOperator section_operator(LossVariant variant) {
  switch (variant) {
    case LossVariant::SineMasked:
      // D(x) u with the boundary-distance mask D(x) = x(1-x).
      return DiffOperator(
          1, {{Coefficient([](const Eigen::VectorXd& x) {
                 return x[0] * (1.0 - x[0]);
               }),
               MultiIndex::zero(1)}});
    case LossVariant::SineMaskedSecond: {
      // -(D u)'' expanded by the product rule:
      // 2u - 2(1-2x) u' - x(1-x) u''.
      std::vector<OperatorTerm> terms;
      terms.push_back({Coefficient(2.0), MultiIndex::zero(1)});
      terms.push_back({Coefficient([](const Eigen::VectorXd& x) {
                         return -2.0 * (1.0 - 2.0 * x[0]);
                       }),
                       MultiIndex::unit(1, 0)});
      terms.push_back({Coefficient([](const Eigen::VectorXd& x) {
                         return -x[0] * (1.0 - x[0]);
                       }),
                       MultiIndex(std::vector<int>{2})});
      return DiffOperator(1, std::move(terms));
    }
    case LossVariant::SinePinn:
      // Interior residual -u''; the boundary penalty is a separate block.
      return DiffOperator(1,
                          {{Coefficient(-1.0), MultiIndex(std::vector<int>{2})}});
    case LossVariant::Plain:
      break;
  }
  throw std::invalid_argument("the plain variant carries its own operator");
}

TrainingProblem make_sine_problem(LossVariant variant, const Eigen::MatrixXd& X,
                                  double freq_a, double w, LossNorm norm) {
  if (variant == LossVariant::Plain) {
    throw std::invalid_argument("the plain variant carries its own targets");
  }
  TrainingProblem p;
  p.X = X;
  p.Y.resize(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    p.Y[i] = std::sin(kTwoPi * freq_a * X(i, 0));
  }
  p.variant = variant;
  p.norm = norm;
  p.w = w;
  p.freq_a = freq_a;
  p.validate();
  return p;
}

double loss_eval(const TrainingProblem& problem, const NetworkConfig& config,
                 const NetworkParams& params) {
  problem.validate();
  double loss = 0.0;
  for (const Group& g : residual_groups(problem)) {
    const Eigen::VectorXd r = forward_Tu(config, params, g.op, g.X) - g.Y;
    loss += g.weight * r.squaredNorm();
  }
  return loss;
}

std::pair<double, Eigen::VectorXd> loss_and_gradient(
    const TrainingProblem& problem, const NetworkConfig& config,
    const NetworkParams& params) {
  problem.validate();
  double loss = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(config.param_count());
  for (const Group& g : residual_groups(problem)) {
    const Eigen::VectorXd r = forward_Tu(config, params, g.op, g.X) - g.Y;
    loss += g.weight * r.squaredNorm();
    grad += grad_theta_weighted(config, params, g.op, g.X, 2.0 * g.weight * r);
  }
  return {loss, std::move(grad)};
}

std::vector<long> geometric_checkpoints(long steps) {
  std::vector<long> cps = {0};
  for (long c = 1; c < steps; c *= 2) cps.push_back(c);
  if (steps > 0) cps.push_back(steps);
  return cps;
}

Trajectory gradient_descent(const TrainingProblem& problem,
                            const NetworkConfig& config, NetworkParams& params,
                            double lr, long steps,
                            const std::vector<long>& checkpoints,
                            const EvalGrid* grid) {
  if (lr <= 0) throw std::invalid_argument("learning rate must be positive");
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");
  problem.validate();
  config.validate();

  const std::vector<long> cps = normalize_checkpoints(checkpoints, steps);
  Trajectory traj;
  size_t next_cp = 0;
  if (next_cp < cps.size() && cps[next_cp] == 0) {
    record_checkpoint(traj, problem, config, params, grid, 0, 0.0, 1.0);
    ++next_cp;
  }
  for (long k = 1; k <= steps; ++k) {
    auto [loss, g] = loss_and_gradient(problem, config, params);
    require_finite_loss(loss, k - 1);
    if (!g.allFinite()) {
      throw NumericalError(
          "training diverged: gradient is non-finite at step " +
          std::to_string(k - 1));
    }
    add_scaled_flat(config, params, g, -lr);
    if (next_cp < cps.size() && cps[next_cp] == k) {
      record_checkpoint(traj, problem, config, params, grid, k,
                        static_cast<double>(k) * lr, 1.0);
      ++next_cp;
    }
  }
  return traj;
}

Trajectory adam_train(const TrainingProblem& problem,
                      const NetworkConfig& config, NetworkParams& params,
                      const AdamOptions& opts, long steps,
                      const std::vector<long>& checkpoints,
                      const EvalGrid* grid) {
  if (opts.lr <= 0) throw std::invalid_argument("learning rate must be positive");
  if (opts.beta1 < 0 || opts.beta1 >= 1 || opts.beta2 < 0 || opts.beta2 >= 1) {
    throw std::invalid_argument("betas must lie in [0,1)");
  }
  if (opts.eps <= 0) throw std::invalid_argument("eps must be positive");
  if (steps < 0) throw std::invalid_argument("step count must be >= 0");
  problem.validate();
  config.validate();

  const double loss0 = loss_eval(problem, config, params);
  require_finite_loss(loss0, 0);
  if (loss0 <= 0.0) {
    throw NumericalError(
        "cannot normalize: the loss already vanishes at initialization");
  }

  const std::vector<long> cps = normalize_checkpoints(checkpoints, steps);
  Trajectory traj;
  size_t next_cp = 0;
  if (next_cp < cps.size() && cps[next_cp] == 0) {
    record_checkpoint(traj, problem, config, params, grid, 0, 0.0, loss0);
    ++next_cp;
  }

  const int P = config.param_count();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(P);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
  for (long k = 1; k <= steps; ++k) {
    auto [loss, g] = loss_and_gradient(problem, config, params);
    require_finite_loss(loss, k - 1);
    g /= loss0;  // gradient of the normalized loss
    if (!g.allFinite()) {
      throw NumericalError(
          "training diverged: gradient is non-finite at step " +
          std::to_string(k - 1));
    }
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(k));
    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(k));
    const Eigen::VectorXd update =
        (m / bc1).array() / ((v / bc2).array().sqrt() + opts.eps);
    add_scaled_flat(config, params, update, -opts.lr);
    if (next_cp < cps.size() && cps[next_cp] == k) {
      record_checkpoint(traj, problem, config, params, grid, k,
                        static_cast<double>(k) * opts.lr, loss0);
      ++next_cp;
    }
  }
  return traj;
}

FlowSolution make_flow(const Eigen::MatrixXd& K, const Eigen::VectorXd& v0,
                       const Eigen::VectorXd& Y) {
  const Eigen::Index n = K.rows();
  if (n < 1 || K.cols() != n) {
    throw std::invalid_argument("kernel matrix must be square and non-empty");
  }
  if (v0.size() != n || Y.size() != n) {
    throw std::invalid_argument("v0 and Y must match the kernel size");
  }
  const double scale = std::max(K.cwiseAbs().maxCoeff(), 1e-300);
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("kernel matrix must be symmetric");
  }

  FlowSolution flow;
  flow.n = static_cast<int>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      K / static_cast<double>(n));
  flow.eigvals = es.eigenvalues();
  flow.eigvecs = es.eigenvectors();
  flow.v0 = v0;
  flow.Y = Y;

  const double emax = flow.eigvals.cwiseAbs().maxCoeff();
  if (flow.eigvals.minCoeff() < -1e-8 * std::max(emax, 1e-300)) {
    throw NumericalError("kernel Gram is not positive semidefinite");
  }
  return flow;
}

Eigen::VectorXd kernel_flow_predict(const FlowSolution& flow,
                                    const Eigen::MatrixXd& kernel_rows,
                                    const Eigen::VectorXd& v0_rows, double t) {
  if (kernel_rows.cols() != flow.n) {
    throw std::invalid_argument("kernel rows must have one column per sample");
  }
  if (v0_rows.size() != kernel_rows.rows()) {
    throw std::invalid_argument("one initial value per kernel row required");
  }
  Eigen::VectorXd c = flow.eigvecs.transpose() * (flow.Y - flow.v0);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c[i] *= phi_gf(t, flow.eigvals[i]);
  }
  return v0_rows +
         kernel_rows * (flow.eigvecs * c) / static_cast<double>(flow.n);
}

double kernel_flow_predict(const FlowSolution& flow,
                           const Eigen::VectorXd& kernel_row, double v0x,
                           double t) {
  Eigen::MatrixXd rows(1, kernel_row.size());
  rows.row(0) = kernel_row.transpose();
  Eigen::VectorXd v0v(1);
  v0v << v0x;
  return kernel_flow_predict(flow, rows, v0v, t)[0];
}

CompareResult compare_dynamics(const TrainingProblem& problem,
                               const NetworkConfig& config,
                               NetworkParams& params, const KernelSpec& kspec,
                               double lr, long steps,
                               const Eigen::MatrixXd& grid,
                               const std::vector<long>& checkpoints) {
  problem.validate();
  config.validate();
  kspec.validate();
  if (problem.variant != LossVariant::Plain) {
    throw std::invalid_argument(
        "the dynamics comparison uses the plain operator-residual loss");
  }
  if (problem.norm != LossNorm::Half) {
    throw std::invalid_argument(
        "the step-to-time map assumes the 1/(2n) loss prefactor");
  }
  if (grid.cols() != problem.X.cols()) {
    throw std::invalid_argument("grid dimension must match the samples");
  }

  const Eigen::Index n = problem.X.rows();
  const Eigen::MatrixXd gram =
      analytic_operator_gram(problem.op, kspec, problem.X);
  const Eigen::VectorXd v0 =
      forward_Tu(config, params, problem.op, problem.X);
  FlowSolution flow = make_flow(gram, v0, problem.Y);

  CompareResult result;
  result.lambda_min = flow.lambda_min();
  // Smooth kernels decay so fast spectrally that moderate sample counts
  // already graze machine precision, so the gate is the literal sign test:
  // the finite-time flow stays well defined for any PSD Gram.
  if (result.lambda_min <= 0.0) {
    throw NumericalError(
        "analytic Gram is not strictly positive definite; the flow "
        "comparison requires lambda_min > 0");
  }

  Eigen::MatrixXd kernel_rows(grid.rows(), n);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      kernel_rows(i, j) =
          operator_kernel(problem.op, kspec, grid.row(i).transpose(),
                          problem.X.row(j).transpose());
    }
  }
  const Eigen::VectorXd v0_grid =
      forward_Tu(config, params, problem.op, grid);

  EvalGrid eval_grid{grid, problem.op};
  Trajectory traj = gradient_descent(problem, config, params, lr, steps,
                                     checkpoints, &eval_grid);

  result.steps = traj.steps;
  result.times = traj.times;
  result.losses = traj.losses;
  result.sup_deviation.reserve(traj.steps.size());
  for (size_t i = 0; i < traj.steps.size(); ++i) {
    const Eigen::VectorXd v_kernel =
        kernel_flow_predict(flow, kernel_rows, v0_grid, traj.times[i]);
    result.sup_deviation.push_back(
        (traj.grid_values[i] - v_kernel).cwiseAbs().maxCoeff());
    if (i + 1 == traj.steps.size()) {
      result.final_network = traj.grid_values[i];
      result.final_kernel = v_kernel;
    }
  }
  return result;
}

}  // namespace pinntk
