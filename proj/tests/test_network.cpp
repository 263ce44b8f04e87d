#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "pinntk/activation.hpp"
#include "pinntk/analytic_kernel.hpp"
#include "pinntk/jet.hpp"
#include "pinntk/multi_index.hpp"
#include "pinntk/network.hpp"
#include "pinntk/rng.hpp"

using namespace pinntk;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetworkConfig make_config(std::vector<int> widths, const std::string& act,
                          Parameterization param = Parameterization::NtkNormal,
                          bool bias = false) {
  NetworkConfig cfg;
  cfg.widths = std::move(widths);
  cfg.activation = act;
  cfg.param = param;
  cfg.use_bias = bias;
  return cfg;
}

double rel_err(double got, double want, double floor_abs) {
  return std::abs(got - want) / std::max(std::abs(want), floor_abs);
}

// Five-point central differences, orders 1..4.  The step is a caller choice:
// fourth derivatives trade truncation against cancellation noticeably.
double fd5(const std::function<double(double)>& f, double x0, int order,
           double h) {
  const double fm2 = f(x0 - 2 * h);
  const double fm1 = f(x0 - h);
  const double f0 = f(x0);
  const double fp1 = f(x0 + h);
  const double fp2 = f(x0 + 2 * h);
  switch (order) {
    case 1:
      return (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
    case 2:
      return (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
    case 3:
      return (-fm2 + 2 * fm1 - 2 * fp1 + fp2) / (2 * h * h * h);
    case 4:
      return (fm2 - 4 * fm1 + 6 * f0 - 4 * fp1 + fp2) / (h * h * h * h);
    default:
      REQUIRE(false);
      return 0.0;
  }
}

std::vector<double> all_entries(const NetworkParams& p) {
  std::vector<double> out;
  for (const auto& w : p.weights) {
    out.insert(out.end(), w.data(), w.data() + w.size());
  }
  for (const auto& b : p.biases) {
    out.insert(out.end(), b.data(), b.data() + b.size());
  }
  return out;
}

// Central difference of T u with respect to one flat parameter entry.
double param_fd(const NetworkConfig& cfg, const NetworkParams& params,
                const DiffOperator& op, const Eigen::MatrixXd& X, int index,
                double h) {
  VectorXd dir = VectorXd::Zero(cfg.param_count());
  dir[index] = 1.0;
  NetworkParams plus = params;
  add_scaled_flat(cfg, plus, dir, h);
  NetworkParams minus = params;
  add_scaled_flat(cfg, minus, dir, -h);
  return (forward_Tu(cfg, plus, op, X)[0] - forward_Tu(cfg, minus, op, X)[0]) /
         (2 * h);
}

}  // namespace

TEST_CASE("init shapes and bitwise reproducibility") {
  NetworkConfig cfg = make_config({1, 4, 1}, "tanh");
  RngStream rng_a(77, "init");
  NetworkParams a = init_params(cfg, rng_a);
  REQUIRE(a.weights.size() == 2);
  CHECK(a.weights[0].rows() == 4);
  CHECK(a.weights[0].cols() == 1);
  CHECK(a.weights[1].rows() == 1);
  CHECK(a.weights[1].cols() == 4);
  CHECK(a.biases.empty());

  RngStream rng_b(77, "init");
  NetworkParams b = init_params(cfg, rng_b);
  const auto ea = all_entries(a);
  const auto eb = all_entries(b);
  REQUIRE(ea.size() == eb.size());
  for (size_t i = 0; i < ea.size(); ++i) CHECK(ea[i] == eb[i]);

  RngStream rng_c(78, "init");
  NetworkParams c = init_params(cfg, rng_c);
  const auto ec = all_entries(c);
  bool any_diff = false;
  for (size_t i = 0; i < ea.size(); ++i) any_diff |= (ea[i] != ec[i]);
  CHECK(any_diff);

  CHECK(cfg.param_count() == 8);
  NetworkConfig cfg_bias = cfg;
  cfg_bias.use_bias = true;
  CHECK(cfg_bias.param_count() == 13);
}

TEST_CASE("normal init has unit-normal sample moments at scale") {
  // Just short of a million entries across the two weight matrices.
  NetworkConfig cfg = make_config({1000, 999, 1}, "tanh");
  RngStream rng(20240811, "init-moments");
  NetworkParams p = init_params(cfg, rng);
  const auto entries = all_entries(p);
  REQUIRE(entries.size() == 999999);
  double mean = 0.0;
  for (double v : entries) mean += v;
  mean /= static_cast<double>(entries.size());
  double var = 0.0;
  for (double v : entries) var += (v - mean) * (v - mean);
  var /= static_cast<double>(entries.size() - 1);
  CHECK(mean >= -0.005);
  CHECK(mean <= 0.005);
  CHECK(var >= 0.99);
  CHECK(var <= 1.01);
}

TEST_CASE("torch-default init stays inside the fan-in bounds") {
  NetworkConfig cfg =
      make_config({3, 8, 1}, "tanh", Parameterization::TorchDefault, true);
  RngStream rng(5, "init");
  NetworkParams p = init_params(cfg, rng);
  REQUIRE(p.biases.size() == 2);
  const double bound0 = 1.0 / std::sqrt(3.0);
  const double bound1 = 1.0 / std::sqrt(8.0);
  CHECK(p.weights[0].array().abs().maxCoeff() <= bound0);
  CHECK(p.biases[0].array().abs().maxCoeff() <= bound0);
  CHECK(p.weights[1].array().abs().maxCoeff() <= bound1);
  CHECK(p.biases[1].array().abs().maxCoeff() <= bound1);
  // Draws actually vary.
  CHECK(p.weights[0].minCoeff() < p.weights[0].maxCoeff());
}

TEST_CASE("config validation rejects malformed networks") {
  CHECK_THROWS_AS(make_config({1}, "tanh").validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_config({1, 0, 1}, "tanh").validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_config({1, 4, 2}, "tanh").validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_config({1, 4, 1}, "softplus").validate(),
                  std::invalid_argument);
  CHECK_NOTHROW(make_config({2, 4, 1}, "relu6").validate());

  // Jet order above the activation's smoothness is refused.
  NetworkConfig cfg = make_config({1, 4, 1}, "relu");
  RngStream rng(1, "init");
  NetworkParams p = init_params(cfg, rng);
  VectorXd x(1);
  x << 0.5;
  CHECK_THROWS_AS(forward_jet(cfg, p, x, 1), std::invalid_argument);
  CHECK_NOTHROW(forward_jet(cfg, p, x, 0));

  // Parameter/config shape mismatches are refused.
  NetworkConfig other = make_config({1, 5, 1}, "tanh");
  CHECK_THROWS_AS(forward_jet(other, p, x, 0), std::invalid_argument);
}

TEST_CASE("linear network closed forms") {
  const int m = 8;
  NetworkConfig cfg = make_config({1, m, 1}, "identity");
  RngStream rng(99, "init");
  NetworkParams p = init_params(cfg, rng);
  const double root_m = std::sqrt(static_cast<double>(m));

  // u(x) = (1/sqrt(m)) sum_i W1_i W0_i x, a single slope.
  double slope = 0.0;
  for (int i = 0; i < m; ++i) slope += p.weights[1](0, i) * p.weights[0](i, 0);
  slope /= root_m;

  VectorXd x(1);
  x << 0.7;
  Jet u = forward_jet(cfg, p, x, 2);
  CHECK(rel_err(u.value(), slope * 0.7, 1e-12) < 1e-12);
  CHECK(rel_err(u.entry(MultiIndex::unit(1, 0)), slope, 1e-12) < 1e-12);
  CHECK(std::abs(u.entry(MultiIndex({std::vector<int>{2}}))) < 1e-12);

  // Gradient layout: W0 block first (one column), then the W1 row.
  DiffOperator id = DiffOperator::identity(1);
  VectorXd g = grad_theta_Tu(cfg, p, id, x);
  REQUIRE(g.size() == 2 * m);
  for (int i = 0; i < m; ++i) {
    CHECK(rel_err(g[i], p.weights[1](0, i) * 0.7 / root_m, 1e-12) < 1e-12);
    CHECK(rel_err(g[m + i], p.weights[0](i, 0) * 0.7 / root_m, 1e-12) < 1e-12);
  }

  // <grad u(x), grad u(x')> = x x' (1/m) (sum W0^2 + sum W1^2).
  VectorXd xp(1);
  xp << -0.4;
  const double sum0 = p.weights[0].squaredNorm();
  const double sum1 = p.weights[1].squaredNorm();
  const double want = 0.7 * -0.4 * (sum0 + sum1) / m;
  CHECK(rel_err(empirical_nnk(cfg, p, id, x, xp), want, 1e-12) < 1e-12);

  // Scaling the output layer by c scales u by c and the kernel by the
  // split form: the W0 block picks up c^2, the W1 block does not.
  NetworkParams scaled = p;
  scaled.weights[1] *= 3.0;
  Jet u3 = forward_jet(cfg, scaled, x, 2);
  CHECK(rel_err(u3.value(), 3.0 * u.value(), 1e-12) < 1e-12);
  const double want3 = 0.7 * -0.4 * (9.0 * sum1 + sum0) / m;
  CHECK(rel_err(empirical_nnk(cfg, scaled, id, x, xp), want3, 1e-12) < 1e-12);
}

TEST_CASE("order-0 forward matches a plain forward pass") {
  SUBCASE("normal parameterization") {
    NetworkConfig cfg = make_config({2, 16, 8, 1}, "tanh");
    RngStream rng(2024, "init");
    NetworkParams p = init_params(cfg, rng);
    VectorXd x(2);
    x << 0.3, -1.2;

    VectorXd h1 = (p.weights[0] * x).unaryExpr([](double t) { return std::tanh(t); });
    VectorXd h2 = ((p.weights[1] * h1) / std::sqrt(16.0))
                      .unaryExpr([](double t) { return std::tanh(t); });
    const double u = (p.weights[2] * h2)(0) / std::sqrt(8.0);

    CHECK(rel_err(forward_jet(cfg, p, x, 0).value(), u, 1e-12) < 1e-15);
  }
  SUBCASE("torch parameterization with biases") {
    NetworkConfig cfg =
        make_config({2, 16, 8, 1}, "tanh", Parameterization::TorchDefault, true);
    RngStream rng(2024, "init");
    NetworkParams p = init_params(cfg, rng);
    VectorXd x(2);
    x << 0.3, -1.2;

    VectorXd h1 = (p.weights[0] * x + p.biases[0])
                      .unaryExpr([](double t) { return std::tanh(t); });
    VectorXd h2 = (p.weights[1] * h1 + p.biases[1])
                      .unaryExpr([](double t) { return std::tanh(t); });
    const double u = (p.weights[2] * h2 + p.biases[2])(0);

    CHECK(rel_err(forward_jet(cfg, p, x, 0).value(), u, 1e-12) < 1e-15);
  }
}

TEST_CASE("jet forward matches finite differences in the input") {
  NetworkConfig cfg = make_config({1, 64, 1}, "tanh");
  RngStream rng(31415, "init");
  NetworkParams p = init_params(cfg, rng);

  auto value_at = [&](double t) {
    VectorXd x(1);
    x << t;
    return forward_jet(cfg, p, x, 0).value();
  };

  for (double x0 : {0.3, -0.7}) {
    VectorXd x(1);
    x << x0;
    Jet u = forward_jet(cfg, p, x, 4);
    CHECK(u.value() == value_at(x0));
    for (int k = 1; k <= 4; ++k) {
      CAPTURE(k);
      MultiIndex alpha(std::vector<int>{k});
      // Step choice: 1e-3 sits in the truncation regime for orders 1..3,
      // but the fourth-derivative stencil divides by h^4 and hits rounding
      // cancellation there; a slightly larger step keeps both error sources
      // below the tolerance for it.
      const double h = (k <= 3) ? 1e-3 : 2e-3;
      const double fd = fd5(value_at, x0, k, h);
      CHECK(rel_err(u.entry(alpha), fd, 1e-3) < 1e-4);
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  struct Setup {
    NetworkConfig cfg;
    DiffOperator op;
    MatrixXd X;
  };
  std::vector<Setup> setups;

  {
    NetworkConfig cfg = make_config({1, 32, 1}, "tanh");
    MatrixXd X(1, 1);
    X << 0.37;
    setups.push_back({cfg, DiffOperator::preset("dxx", 1), X});
  }
  {
    NetworkConfig cfg = make_config({1, 16, 1}, "relu6");
    MatrixXd X(1, 1);
    X << 0.8;
    setups.push_back({cfg, DiffOperator::identity(1), X});
  }
  {
    NetworkConfig cfg = make_config({2, 8, 1}, "tanh");
    MatrixXd X(1, 2);
    X << 0.3, -0.2;
    setups.push_back({cfg, DiffOperator::preset("laplacian", 2), X});
  }
  {
    NetworkConfig cfg =
        make_config({1, 8, 8, 1}, "tanh", Parameterization::TorchDefault, true);
    MatrixXd X(1, 1);
    X << 0.45;
    setups.push_back({cfg, DiffOperator::preset("dxx", 1), X});
  }
  {
    // Variable coefficients: T u = x u' + 2 u.
    NetworkConfig cfg = make_config({1, 12, 1}, "tanh");
    MatrixXd X(1, 1);
    X << 0.6;
    std::vector<OperatorTerm> terms;
    terms.push_back({Coefficient([](const VectorXd& z) { return z[0]; }),
                     MultiIndex::unit(1, 0)});
    terms.push_back({Coefficient(2.0), MultiIndex::zero(1)});
    setups.push_back({cfg, DiffOperator(1, terms), X});
  }

  int label = 0;
  for (const auto& s : setups) {
    CAPTURE(label);
    RngStream rng(42 + label, "init");
    ++label;
    NetworkParams p = init_params(s.cfg, rng);
    VectorXd g = grad_theta_Tu(s.cfg, p, s.op, s.X.row(0).transpose());
    REQUIRE(g.size() == s.cfg.param_count());
    const double gmax = g.array().abs().maxCoeff();

    const int count = 20;
    const int P = s.cfg.param_count();
    for (int k = 0; k < count; ++k) {
      // Spread probes across the whole flat vector, all layers included.
      const int index = static_cast<int>((static_cast<long long>(k) * P) / count);
      CAPTURE(index);
      const double fd = param_fd(s.cfg, p, s.op, s.X, index, 1e-4);
      CHECK(rel_err(g[index], fd, 1e-3 * std::max(gmax, 1.0)) < 1e-4);
    }
  }
}

TEST_CASE("zero operator yields zero output and gradient") {
  NetworkConfig cfg = make_config({1, 8, 1}, "tanh");
  RngStream rng(7, "init");
  NetworkParams p = init_params(cfg, rng);
  DiffOperator zero(1, {});
  VectorXd x(1);
  x << 0.2;
  VectorXd g = grad_theta_Tu(cfg, p, zero, x);
  REQUIRE(g.size() == cfg.param_count());
  CHECK(g.norm() == 0.0);
  MatrixXd X(1, 1);
  X << 0.2;
  CHECK(forward_Tu(cfg, p, zero, X)[0] == 0.0);
}

TEST_CASE("operator application agrees with the jet contraction") {
  NetworkConfig cfg = make_config({2, 8, 1}, "tanh");
  RngStream rng(11, "init");
  NetworkParams p = init_params(cfg, rng);
  DiffOperator lap = DiffOperator::preset("laplacian", 2);
  MatrixXd X(3, 2);
  X << 0.1, 0.2, -0.5, 0.9, 1.4, -0.3;
  VectorXd tu = forward_Tu(cfg, p, lap, X);
  for (int i = 0; i < 3; ++i) {
    VectorXd xi = X.row(i).transpose();
    Jet u = forward_jet(cfg, p, xi, 2);
    CHECK(rel_err(tu[i], apply_operator(lap, u, xi), 1e-12) < 1e-13);
  }
}

TEST_CASE("batched weighted gradient equals the sum of per-sample gradients") {
  NetworkConfig cfg = make_config({1, 24, 1}, "tanh");
  RngStream rng(13, "init");
  NetworkParams p = init_params(cfg, rng);
  DiffOperator op = DiffOperator::preset("dxx", 1);
  MatrixXd X(4, 1);
  X << 0.1, 0.4, 0.6, 0.9;
  VectorXd w(4);
  w << 1.0, -2.0, 0.5, 3.0;

  VectorXd batched = grad_theta_weighted(cfg, p, op, X, w);
  VectorXd manual = VectorXd::Zero(cfg.param_count());
  for (int i = 0; i < 4; ++i) {
    manual += w[i] * grad_theta_Tu(cfg, p, op, X.row(i).transpose());
  }
  CHECK((batched - manual).norm() <= 1e-12 * std::max(manual.norm(), 1.0));
}

TEST_CASE("empirical gram matrix is consistent, symmetric, and PSD") {
  SUBCASE("single sample") {
    NetworkConfig cfg = make_config({1, 16, 1}, "tanh");
    RngStream rng(3, "init");
    NetworkParams p = init_params(cfg, rng);
    DiffOperator id = DiffOperator::identity(1);
    MatrixXd X(1, 1);
    X << 0.33;
    MatrixXd gram = empirical_gram(cfg, p, id, X);
    REQUIRE(gram.rows() == 1);
    VectorXd g = grad_theta_Tu(cfg, p, id, X.row(0).transpose());
    CHECK(rel_err(gram(0, 0), g.squaredNorm(), 1e-12) < 1e-13);
  }
  SUBCASE("entries match pairwise kernels and the matrix is exactly symmetric") {
    NetworkConfig cfg = make_config({1, 64, 1}, "tanh");
    RngStream rng(4, "init");
    NetworkParams p = init_params(cfg, rng);
    DiffOperator op = DiffOperator::preset("dxx", 1);
    MatrixXd X(12, 1);
    for (int i = 0; i < 12; ++i) X(i, 0) = (i + 0.5) / 12.0;
    MatrixXd gram = empirical_gram(cfg, p, op, X);
    CHECK((gram - gram.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const double scale = gram.cwiseAbs().maxCoeff();
    for (int i = 0; i < 12; i += 3) {
      for (int j = i; j < 12; j += 4) {
        const double pairwise = empirical_nnk(cfg, p, op, X.row(i).transpose(),
                                              X.row(j).transpose());
        CHECK(std::abs(gram(i, j) - pairwise) <= 1e-13 * scale);
      }
    }
  }
  SUBCASE("wide network gram is numerically PSD") {
    NetworkConfig cfg = make_config({1, 256, 1}, "tanh");
    RngStream rng(6, "init");
    NetworkParams p = init_params(cfg, rng);
    DiffOperator op = DiffOperator::preset("dxx", 1);
    MatrixXd X(20, 1);
    for (int i = 0; i < 20; ++i) X(i, 0) = (i + 0.5) / 20.0;
    MatrixXd gram = empirical_gram(cfg, p, op, X);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    CHECK(es.eigenvalues().minCoeff() >=
          -1e-8 * es.eigenvalues().cwiseAbs().maxCoeff());
  }
}

TEST_CASE("empirical kernel at init approaches the analytic kernel with width") {
  KernelSpec spec;
  spec.depth = 1;
  spec.activation = "tanh";
  spec.order = 2;
  spec.quad_nodes = 64;

  MatrixXd X(3, 1);
  X << 0.15, 0.5, 0.85;

  for (const char* name : {"id", "dxx"}) {
    CAPTURE(name);
    DiffOperator op = DiffOperator::preset(name, 1);
    MatrixXd analytic = analytic_operator_gram(op, spec, X);
    const double ana_scale = analytic.cwiseAbs().maxCoeff();

    auto mean_sup_err = [&](int m) {
      double acc = 0.0;
      const int seeds = 5;
      for (int s = 0; s < seeds; ++s) {
        NetworkConfig cfg = make_config({1, m, 1}, "tanh");
        RngStream rng(1000 + s, "init");
        NetworkParams p = init_params(cfg, rng);
        MatrixXd emp = empirical_gram(cfg, p, op, X);
        acc += (emp - analytic).cwiseAbs().maxCoeff();
      }
      return acc / seeds;
    };

    const double err_narrow = mean_sup_err(256);
    const double err_wide = mean_sup_err(4096);
    CAPTURE(err_narrow);
    CAPTURE(err_wide);
    CHECK(err_wide < err_narrow);
    CHECK(err_wide <= 0.10 * ana_scale);
  }
}
