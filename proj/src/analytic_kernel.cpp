#include "pinntk/analytic_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pinntk/activation.hpp"
#include "pinntk/errors.hpp"
#include "pinntk/quadrature.hpp"

namespace pinntk {

namespace {

// Variances below this are treated as point masses at zero.
constexpr double kVarianceFloor = 1e-30;

// Inside this distance of |rho| = 1 the change of variables has lost too
// much rank for derivative propagation; values are still fine.
constexpr double kRhoTol = 1e-6;

// Control-flow signal from the ladder to the perturbation wrapper.
struct NearDegenerate {};

// Next-layer diagonal variance delta_{l+1} = E[sigma(sqrt(delta_l) xi)^2],
// carried as a one-point jet so its spatial derivatives ride along.
Jet diag_step(const Activation& act, const GaussHermite& gh, const Jet& delta) {
  Jet floored = delta;
  floored[0] = std::max(floored[0], kVarianceFloor);
  const Jet a = jet_sqrt(floored);
  Jet acc(delta.layout());
  for (int i = 0; i < gh.nodes.size(); ++i) {
    const Jet s = jet_compose_scalar(act, a * gh.nodes[i]);
    acc += gh.weights[i] * jet_product(s, s);
  }
  return acc;
}

struct LadderOut {
  BiJet nt;
  std::vector<double> rf_values;
  std::vector<double> nt_values;
};

// The full recurrence at one input pair, run in two-point jet arithmetic.
// With order 0 every table is a single value and this reduces to plain
// quadrature; in that case |rho| = 1 collapses exactly to a rank-one
// Gaussian instead of signalling degeneracy.
LadderOut run_ladder(const KernelSpec& spec, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xp, int order) {
  const int d = static_cast<int>(x.size());
  const Activation& act = Activation::get(spec.activation);
  const GaussHermite& gh = GaussHermite::get(spec.quad_nodes);
  const JetLayout& base = JetLayout::get(d, order);
  const BiJetLayout& bl = BiJetLayout::get(d, order);
  const int nq = static_cast<int>(gh.nodes.size());

  std::vector<Jet> cx, cxp;
  cx.reserve(d);
  cxp.reserve(d);
  for (int i = 0; i < d; ++i) {
    cx.push_back(seed_coordinate_jet(x, i, order));
    cxp.push_back(seed_coordinate_jet(xp, i, order));
  }

  // Level 1: diagonal variances <x,x>, <x',x'> as one-point jets and the
  // cross kernel <x,x'> as a two-point table.
  Jet diag_x(base);
  Jet diag_xp(base);
  BiJet rf(bl);
  for (int i = 0; i < d; ++i) {
    diag_x += jet_product(cx[i], cx[i]);
    diag_xp += jet_product(cxp[i], cxp[i]);
    rf += jet_product(embed_first(bl, cx[i]), embed_second(bl, cxp[i]));
  }
  BiJet nt = rf;

  std::vector<double> rf_values{rf.value()};
  std::vector<double> nt_values{nt.value()};

  for (int l = 1; l <= spec.depth; ++l) {
    BiJet e00(bl);
    BiJet e11(bl);
    if (d == 1 && l == 1) {
      // One input axis makes the first covariance block rank one for every
      // pair: u = xi*x and v = xi*x' share a single Gaussian factor.  A
      // univariate rule is then exact and regular even at x = x'.
      const BiJet ux = embed_first(bl, cx[0]);
      const BiJet uxp = embed_second(bl, cxp[0]);
      for (int i = 0; i < nq; ++i) {
        const double xi = gh.nodes[i];
        const BiJet u = ux * xi;
        const BiJet v = uxp * xi;
        e00 += gh.weights[i] * jet_product(jet_compose_scalar(act, 0, u),
                                           jet_compose_scalar(act, 0, v));
        e11 += gh.weights[i] * jet_product(jet_compose_scalar(act, 1, u),
                                           jet_compose_scalar(act, 1, v));
      }
    } else {
      Jet dx = diag_x;
      dx[0] = std::max(dx[0], kVarianceFloor);
      Jet dxp = diag_xp;
      dxp[0] = std::max(dxp[0], kVarianceFloor);
      const BiJet a = embed_first(bl, jet_sqrt(dx));
      const BiJet b = embed_second(bl, jet_sqrt(dxp));
      BiJet rho = jet_product(rf, jet_reciprocal(jet_product(a, b)));
      BiJet s(bl);
      if (order == 0) {
        const double r0 = std::clamp(rho.value(), -1.0, 1.0);
        rho[0] = r0;
        s[0] = std::sqrt(1.0 - r0 * r0);
      } else {
        if (1.0 - std::abs(rho.value()) < kRhoTol) throw NearDegenerate{};
        s = jet_sqrt(BiJet(bl, 1.0) - jet_product(rho, rho));
      }
      const BiJet brho = jet_product(b, rho);
      const BiJet bs = jet_product(b, s);
      for (int i = 0; i < nq; ++i) {
        const double xi = gh.nodes[i];
        const BiJet u = a * xi;
        BiJet acc0(bl);
        BiJet acc1(bl);
        for (int j = 0; j < nq; ++j) {
          const BiJet v = brho * xi + bs * gh.nodes[j];
          acc0 += gh.weights[j] * jet_compose_scalar(act, 0, v);
          acc1 += gh.weights[j] * jet_compose_scalar(act, 1, v);
        }
        e00 += gh.weights[i] * jet_product(jet_compose_scalar(act, 0, u), acc0);
        e11 += gh.weights[i] * jet_product(jet_compose_scalar(act, 1, u), acc1);
      }
    }
    rf = e00;
    nt = e00 + jet_product(nt, e11);
    rf_values.push_back(rf.value());
    nt_values.push_back(nt.value());
    if (l < spec.depth) {
      diag_x = diag_step(act, gh, diag_x);
      diag_xp = diag_step(act, gh, diag_xp);
    }
  }
  return {std::move(nt), std::move(rf_values), std::move(nt_values)};
}

void check_pair(const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
  if (x.size() == 0 || x.size() != xp.size()) {
    throw std::invalid_argument(
        "kernel evaluation: input points must share a positive dimension");
  }
}

}  // namespace

void KernelSpec::validate() const {
  if (depth < 1) {
    throw std::invalid_argument("KernelSpec: depth must be at least 1");
  }
  if (!Activation::is_known(activation)) {
    throw std::invalid_argument("KernelSpec: unknown activation '" +
                                activation + "'");
  }
  if (order < 0 || order > 6) {
    throw std::invalid_argument("KernelSpec: order must lie in [0, 6]");
  }
  if (quad_nodes < 20) {
    throw std::invalid_argument(
        "KernelSpec: at least 20 quadrature nodes per axis required");
  }
  const Activation& act = Activation::get(activation);
  if (act.smoothness() < order) {
    throw std::invalid_argument(
        "KernelSpec: activation '" + activation + "' is C^" +
        std::to_string(act.smoothness()) + ", too rough for derivative order " +
        std::to_string(order));
  }
}

double gauss_pair_expectation(int fi, int fj, const CovBlock& block,
                              const KernelSpec& spec) {
  spec.validate();
  if (fi < 0 || fj < 0 || fi > spec.order || fj > spec.order) {
    throw std::invalid_argument(
        "gauss_pair_expectation: derivative order exceeds the spec order");
  }
  const double slack =
      1e-12 * std::max(1.0, std::abs(block.a11 * block.a22));
  if (block.a11 < -slack || block.a22 < -slack ||
      block.a12 * block.a12 > block.a11 * block.a22 + slack) {
    throw std::invalid_argument(
        "gauss_pair_expectation: covariance block is not positive "
        "semidefinite");
  }
  const Activation& act = Activation::get(spec.activation);
  const GaussHermite& gh = GaussHermite::get(spec.quad_nodes);
  const int nq = static_cast<int>(gh.nodes.size());

  const bool deg_u = block.a11 <= kVarianceFloor;
  const bool deg_v = block.a22 <= kVarianceFloor;
  if (deg_u && deg_v) return act.deriv(fi, 0.0) * act.deriv(fj, 0.0);
  if (deg_u || deg_v) {
    // One axis is a point mass at zero, so the product factorizes.
    const int f_point = deg_u ? fi : fj;
    const int f_live = deg_u ? fj : fi;
    const double sd = std::sqrt(deg_u ? block.a22 : block.a11);
    double acc = 0.0;
    for (int i = 0; i < nq; ++i) {
      acc += gh.weights[i] * act.deriv(f_live, sd * gh.nodes[i]);
    }
    return act.deriv(f_point, 0.0) * acc;
  }

  const double a = std::sqrt(block.a11);
  const double b = std::sqrt(block.a22);
  const double rho = std::clamp(block.a12 / (a * b), -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double total = 0.0;
  for (int i = 0; i < nq; ++i) {
    const double su = act.deriv(fi, a * gh.nodes[i]);
    double inner = 0.0;
    for (int j = 0; j < nq; ++j) {
      inner +=
          gh.weights[j] * act.deriv(fj, b * (rho * gh.nodes[i] + s * gh.nodes[j]));
    }
    total += gh.weights[i] * su * inner;
  }
  return total;
}

KernelLadder rf_nt_kernels(const KernelSpec& spec, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& xp) {
  KernelSpec values_spec = spec;
  values_spec.order = 0;
  values_spec.validate();
  check_pair(x, xp);
  LadderOut out = run_ladder(values_spec, x, xp, 0);
  return {std::move(out.rf_values), std::move(out.nt_values)};
}

BiJet kernel_bijet(const KernelSpec& spec, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& xp) {
  spec.validate();
  check_pair(x, xp);
  try {
    return run_ladder(spec, x, xp, spec.order).nt;
  } catch (const NearDegenerate&) {
  }

  // The pair is collinear at some layer (typically x = x').  The kernel
  // itself is regular there; only the change of variables breaks down.  Take
  // an even-in-h limit along each coordinate of x' and Richardson-extrapolate
  // (the symmetric average kills odd orders, so the error is O(h^4)).  Steps
  // escalate because a perturbation can land inside the degeneracy guard.
  const int d = static_cast<int>(x.size());
  const double scale = std::max(
      {x.lpNorm<Eigen::Infinity>(), xp.lpNorm<Eigen::Infinity>(), 1.0});
  for (const double hrel : {1e-4, 1e-3, 1e-2, 1e-1}) {
    const double h = hrel * scale;
    BiJet acc(BiJetLayout::get(d, spec.order));
    int used = 0;
    for (int c = 0; c < d; ++c) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
      e[c] = h;
      try {
        const BiJet g1 = 0.5 * (run_ladder(spec, x, xp + e, spec.order).nt +
                                run_ladder(spec, x, xp - e, spec.order).nt);
        const BiJet g2 =
            0.5 * (run_ladder(spec, x, xp + 2.0 * e, spec.order).nt +
                   run_ladder(spec, x, xp - 2.0 * e, spec.order).nt);
        acc += (4.0 / 3.0) * g1 - (1.0 / 3.0) * g2;
        ++used;
      } catch (const NearDegenerate&) {
      }
    }
    if (used > 0) return acc * (1.0 / used);
  }
  throw NumericalError(
      "kernel_bijet: input pair stays degenerate under perturbation; "
      "derivative tables are unavailable here");
}

double operator_kernel(const DiffOperator& op, const KernelSpec& spec,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
  check_pair(x, xp);
  if (op.dim() != static_cast<int>(x.size())) {
    throw std::invalid_argument(
        "operator_kernel: operator dimension does not match the points");
  }
  if (op.order() > spec.order) {
    throw std::invalid_argument(
        "operator_kernel: operator order exceeds the kernel spec order");
  }
  const BiJet table = kernel_bijet(spec, x, xp);
  double acc = 0.0;
  for (const OperatorTerm& r : op.terms()) {
    const double cr = r.coeff(x);
    for (const OperatorTerm& s : op.terms()) {
      acc += cr * s.coeff(xp) * table.entry(r.index, s.index);
    }
  }
  return acc;
}

Eigen::MatrixXd analytic_operator_gram(const DiffOperator& op,
                                       const KernelSpec& spec,
                                       const Eigen::MatrixXd& X) {
  const int n = static_cast<int>(X.rows());
  if (n < 1 || op.dim() != static_cast<int>(X.cols())) {
    throw std::invalid_argument(
        "analytic_operator_gram: sample matrix must be n x dim(op), n >= 1");
  }
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.row(i).transpose();
    for (int j = 0; j <= i; ++j) {
      const double v = operator_kernel(op, spec, xi, X.row(j).transpose());
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

}  // namespace pinntk
