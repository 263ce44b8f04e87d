#include "pinntk/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "pinntk/activation.hpp"

namespace pinntk {

namespace {

// Width scaling applied in front of weight layer l (the map into z^{l+1}).
// The normal parameterization divides by sqrt(fan-in) for every layer past
// the input; the torch-default one bakes the scale into the init instead.
double layer_scale(const NetworkConfig& config, int l) {
  if (config.param == Parameterization::TorchDefault || l == 0) return 1.0;
  return 1.0 / std::sqrt(static_cast<double>(config.widths[static_cast<size_t>(l)]));
}

void check_params(const NetworkConfig& config, const NetworkParams& params) {
  const size_t layers = config.widths.size() - 1;
  if (params.weights.size() != layers) {
    throw std::invalid_argument("params have " +
                                std::to_string(params.weights.size()) +
                                " weight matrices, config expects " +
                                std::to_string(layers));
  }
  for (size_t l = 0; l < layers; ++l) {
    const auto& w = params.weights[l];
    if (w.rows() != config.widths[l + 1] || w.cols() != config.widths[l]) {
      throw std::invalid_argument("weight matrix " + std::to_string(l) +
                                  " has the wrong shape");
    }
    if (!w.allFinite()) {
      throw std::invalid_argument("weight matrix " + std::to_string(l) +
                                  " has non-finite entries");
    }
  }
  if (config.use_bias) {
    if (params.biases.size() != layers) {
      throw std::invalid_argument("bias vectors missing or miscounted");
    }
    for (size_t l = 0; l < layers; ++l) {
      if (params.biases[l].size() != config.widths[l + 1]) {
        throw std::invalid_argument("bias vector " + std::to_string(l) +
                                    " has the wrong length");
      }
      if (!params.biases[l].allFinite()) {
        throw std::invalid_argument("bias vector " + std::to_string(l) +
                                    " has non-finite entries");
      }
    }
  } else if (!params.biases.empty()) {
    throw std::invalid_argument("bias vectors present but biases are disabled");
  }
}

void check_order(const NetworkConfig& config, int order) {
  if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
  const Activation& act = Activation::get(config.activation);
  if (act.smoothness() < order) {
    throw std::invalid_argument("activation '" + config.activation +
                                "' is too rough for derivative order " +
                                std::to_string(order));
  }
}

// All per-layer derivative tables for a batch of inputs, stored with one
// column per neuron and the n samples stacked as S-row blocks.  Everything
// downstream of the input seeding is a GEMM or a per-column table pass.
struct Batch {
  const JetLayout* lay = nullptr;
  int S = 0;
  int n = 0;
  Eigen::MatrixXd input;             // (S*n) x m_0, coordinate jets
  std::vector<Eigen::MatrixXd> z;    // z[l]: pre-activations z^{l+1}
  std::vector<Eigen::MatrixXd> sig;  // sig[l]: sigma(z^{l+1}), hidden only
};

// sigma^(shift) composed onto every (neuron, sample) chunk of `in`.
void compose_batch(const Activation& act, int shift, const JetLayout& lay,
                   int S, int n, const Eigen::MatrixXd& in,
                   Eigen::MatrixXd& out) {
  out.resize(in.rows(), in.cols());
  const int maxp = lay.max_power();
  std::vector<double> derivs(static_cast<size_t>(maxp) + 1);
  for (Eigen::Index j = 0; j < in.cols(); ++j) {
    const double* src = in.data() + j * in.rows();
    double* dst = out.data() + j * out.rows();
    for (int s = 0; s < n; ++s) {
      const double* chunk = src + static_cast<ptrdiff_t>(s) * S;
      for (int p = 0; p <= maxp; ++p) {
        derivs[static_cast<size_t>(p)] = act.deriv(shift + p, chunk[0]);
      }
      lay.compose(chunk, derivs.data(), dst + static_cast<ptrdiff_t>(s) * S);
    }
  }
}

Batch forward_batch(const NetworkConfig& config, const NetworkParams& params,
                    const Eigen::MatrixXd& X, int order) {
  const int d = config.input_dim();
  const int n = static_cast<int>(X.rows());
  if (static_cast<int>(X.cols()) != d) {
    throw std::invalid_argument("input has " + std::to_string(X.cols()) +
                                " columns, network expects " +
                                std::to_string(d));
  }
  const Activation& act = Activation::get(config.activation);
  const int layers = static_cast<int>(config.widths.size()) - 1;

  Batch b;
  b.lay = &JetLayout::get(d, order);
  b.S = b.lay->size();
  b.n = n;

  b.input = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.S) * n, d);
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < d; ++j) {
      b.input(static_cast<Eigen::Index>(s) * b.S, j) = X(s, j);
      if (order >= 1) {
        const int unit = b.lay->index_of(MultiIndex::unit(d, j));
        b.input(static_cast<Eigen::Index>(s) * b.S + unit, j) = 1.0;
      }
    }
  }

  b.z.reserve(static_cast<size_t>(layers));
  b.sig.reserve(static_cast<size_t>(layers) - 1);
  const Eigen::MatrixXd* below = &b.input;
  for (int l = 0; l < layers; ++l) {
    if (l > 0) {
      Eigen::MatrixXd s;
      compose_batch(act, 0, *b.lay, b.S, n, b.z.back(), s);
      b.sig.push_back(std::move(s));
      below = &b.sig.back();
    }
    Eigen::MatrixXd zl =
        layer_scale(config, l) *
        (*below * params.weights[static_cast<size_t>(l)].transpose());
    if (config.use_bias) {
      const Eigen::VectorXd& bias = params.biases[static_cast<size_t>(l)];
      for (int s = 0; s < n; ++s) {
        zl.row(static_cast<Eigen::Index>(s) * b.S) += bias.transpose();
      }
    }
    b.z.push_back(std::move(zl));
  }
  return b;
}

// Positions of the operator's derivative entries in the layout, with the
// coefficients evaluated at each sample.
void seed_adjoint(const DiffOperator& op, const Batch& b,
                  const Eigen::MatrixXd& X, const Eigen::VectorXd& weights,
                  Eigen::MatrixXd& lam) {
  lam = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.S) * b.n, 1);
  std::vector<int> pos;
  pos.reserve(op.terms().size());
  for (const auto& term : op.terms()) {
    pos.push_back(b.lay->index_of(term.index));
  }
  for (int s = 0; s < b.n; ++s) {
    const Eigen::VectorXd xs = X.row(s).transpose();
    for (size_t r = 0; r < op.terms().size(); ++r) {
      lam(static_cast<Eigen::Index>(s) * b.S + pos[r], 0) +=
          weights[s] * op.terms()[r].coeff(xs);
    }
  }
}

// Reverse sweep: takes the seeded output adjoint and scatters the weighted
// gradient sum into a flat vector laid out as W^0 (row-major), b^0, W^1, ...
Eigen::VectorXd backward_flat(const NetworkConfig& config,
                              const NetworkParams& params, const Batch& b,
                              Eigen::MatrixXd lam) {
  const Activation& act = Activation::get(config.activation);
  const int layers = static_cast<int>(config.widths.size()) - 1;

  Eigen::VectorXd flat = Eigen::VectorXd::Zero(config.param_count());
  std::vector<int> offsets(static_cast<size_t>(layers));
  {
    int off = 0;
    for (int l = 0; l < layers; ++l) {
      offsets[static_cast<size_t>(l)] = off;
      off += config.widths[static_cast<size_t>(l) + 1] *
             config.widths[static_cast<size_t>(l)];
      if (config.use_bias) off += config.widths[static_cast<size_t>(l) + 1];
    }
  }

  std::vector<double> achunk(static_cast<size_t>(b.S));
  std::vector<double> derivs(static_cast<size_t>(b.lay->max_power()) + 1);

  for (int l = layers - 1; l >= 0; --l) {
    const int rows = config.widths[static_cast<size_t>(l) + 1];
    const int cols = config.widths[static_cast<size_t>(l)];
    const double scale = layer_scale(config, l);
    const Eigen::MatrixXd& below =
        (l == 0) ? b.input : b.sig[static_cast<size_t>(l) - 1];

    Eigen::MatrixXd gw = scale * (lam.transpose() * below);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>(
        flat.data() + offsets[static_cast<size_t>(l)], rows, cols) = gw;

    if (config.use_bias) {
      Eigen::Map<Eigen::VectorXd> gb(
          flat.data() + offsets[static_cast<size_t>(l)] + rows * cols, rows);
      for (int s = 0; s < b.n; ++s) {
        gb += lam.row(static_cast<Eigen::Index>(s) * b.S).transpose();
      }
    }

    if (l == 0) break;

    // Pull the adjoint through the linear map, then through the activation:
    // the variation of sigma(z) is (sigma'(z)) * dz in jet arithmetic, so
    // the adjoint applies the transposed multiplication table.
    Eigen::MatrixXd lam_sig =
        scale * (lam * params.weights[static_cast<size_t>(l)]);
    const Eigen::MatrixXd& zl = b.z[static_cast<size_t>(l) - 1];
    Eigen::MatrixXd lam_z(lam_sig.rows(), lam_sig.cols());
    const int maxp = b.lay->max_power();
    for (Eigen::Index j = 0; j < lam_sig.cols(); ++j) {
      const double* zc = zl.data() + j * zl.rows();
      const double* lc = lam_sig.data() + j * lam_sig.rows();
      double* oc = lam_z.data() + j * lam_z.rows();
      for (int s = 0; s < b.n; ++s) {
        const double* zchunk = zc + static_cast<ptrdiff_t>(s) * b.S;
        for (int p = 0; p <= maxp; ++p) {
          derivs[static_cast<size_t>(p)] = act.deriv(1 + p, zchunk[0]);
        }
        b.lay->compose(zchunk, derivs.data(), achunk.data());
        b.lay->mul_transpose(achunk.data(),
                             lc + static_cast<ptrdiff_t>(s) * b.S,
                             oc + static_cast<ptrdiff_t>(s) * b.S);
      }
    }
    lam = std::move(lam_z);
  }
  return flat;
}

Eigen::VectorXd weighted_grad_impl(const NetworkConfig& config,
                                   const NetworkParams& params,
                                   const DiffOperator& op,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& weights) {
  Batch b = forward_batch(config, params, X, op.order());
  Eigen::MatrixXd lam;
  seed_adjoint(op, b, X, weights, lam);
  return backward_flat(config, params, b, std::move(lam));
}

void check_operator(const NetworkConfig& config, const DiffOperator& op) {
  if (op.dim() != config.input_dim()) {
    throw std::invalid_argument("operator dimension " +
                                std::to_string(op.dim()) +
                                " does not match network input dimension " +
                                std::to_string(config.input_dim()));
  }
  check_order(config, op.order());
}

}  // namespace

int NetworkConfig::param_count() const {
  int count = 0;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    count += widths[l + 1] * widths[l];
    if (use_bias) count += widths[l + 1];
  }
  return count;
}

void NetworkConfig::validate() const {
  if (widths.size() < 2) {
    throw std::invalid_argument("widths must list at least input and output");
  }
  for (int m : widths) {
    if (m <= 0) throw std::invalid_argument("widths must be positive");
  }
  if (widths.back() != 1) {
    throw std::invalid_argument("output width must be 1");
  }
  if (!Activation::is_known(activation)) {
    throw std::invalid_argument("unknown activation '" + activation + "'");
  }
}

NetworkParams init_params(const NetworkConfig& config, RngStream& rng) {
  config.validate();
  const int layers = static_cast<int>(config.widths.size()) - 1;
  NetworkParams params;
  params.weights.reserve(static_cast<size_t>(layers));
  if (config.use_bias) params.biases.reserve(static_cast<size_t>(layers));

  for (int l = 0; l < layers; ++l) {
    const int rows = config.widths[static_cast<size_t>(l) + 1];
    const int cols = config.widths[static_cast<size_t>(l)];
    Eigen::MatrixXd w(rows, cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        w(i, j) = (config.param == Parameterization::TorchDefault)
                      ? rng.uniform(-bound, bound)
                      : rng.normal();
      }
    }
    params.weights.push_back(std::move(w));
    if (config.use_bias) {
      Eigen::VectorXd bias(rows);
      for (int i = 0; i < rows; ++i) {
        bias(i) = (config.param == Parameterization::TorchDefault)
                      ? rng.uniform(-bound, bound)
                      : rng.normal();
      }
      params.biases.push_back(std::move(bias));
    }
  }
  return params;
}

Jet forward_jet(const NetworkConfig& config, const NetworkParams& params,
                const Eigen::VectorXd& x, int order) {
  config.validate();
  check_params(config, params);
  check_order(config, order);
  Batch b = forward_batch(config, params, x.transpose(), order);
  Jet out(JetLayout::get(config.input_dim(), order));
  for (int t = 0; t < b.S; ++t) out[t] = b.z.back()(t, 0);
  return out;
}

Eigen::VectorXd forward_Tu(const NetworkConfig& config,
                           const NetworkParams& params, const DiffOperator& op,
                           const Eigen::MatrixXd& X) {
  config.validate();
  check_params(config, params);
  check_operator(config, op);
  Batch b = forward_batch(config, params, X, op.order());

  std::vector<int> pos;
  pos.reserve(op.terms().size());
  for (const auto& term : op.terms()) {
    pos.push_back(b.lay->index_of(term.index));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(b.n);
  for (int s = 0; s < b.n; ++s) {
    const Eigen::VectorXd xs = X.row(s).transpose();
    for (size_t r = 0; r < op.terms().size(); ++r) {
      out[s] += op.terms()[r].coeff(xs) *
                b.z.back()(static_cast<Eigen::Index>(s) * b.S + pos[r], 0);
    }
  }
  return out;
}

Eigen::VectorXd grad_theta_Tu(const NetworkConfig& config,
                              const NetworkParams& params,
                              const DiffOperator& op,
                              const Eigen::VectorXd& x) {
  config.validate();
  check_params(config, params);
  check_operator(config, op);
  return weighted_grad_impl(config, params, op, x.transpose(),
                            Eigen::VectorXd::Ones(1));
}

Eigen::VectorXd grad_theta_weighted(const NetworkConfig& config,
                                    const NetworkParams& params,
                                    const DiffOperator& op,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& weights) {
  config.validate();
  check_params(config, params);
  check_operator(config, op);
  if (weights.size() != X.rows()) {
    throw std::invalid_argument("one weight per input row required");
  }
  return weighted_grad_impl(config, params, op, X, weights);
}

double empirical_nnk(const NetworkConfig& config, const NetworkParams& params,
                     const DiffOperator& op, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& xp) {
  config.validate();
  check_params(config, params);
  check_operator(config, op);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const Eigen::VectorXd gx =
      weighted_grad_impl(config, params, op, x.transpose(), one);
  const Eigen::VectorXd gxp =
      weighted_grad_impl(config, params, op, xp.transpose(), one);
  return gx.dot(gxp);
}

Eigen::MatrixXd empirical_gram(const NetworkConfig& config,
                               const NetworkParams& params,
                               const DiffOperator& op,
                               const Eigen::MatrixXd& X) {
  config.validate();
  check_params(config, params);
  check_operator(config, op);
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd grads(n, config.param_count());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  for (int s = 0; s < n; ++s) {
    grads.row(s) =
        weighted_grad_impl(config, params, op, X.row(s), one).transpose();
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(grads);
  return gram.selfadjointView<Eigen::Lower>();
}

void add_scaled_flat(const NetworkConfig& config, NetworkParams& params,
                     const Eigen::VectorXd& flat, double scale) {
  config.validate();
  check_params(config, params);
  if (flat.size() != config.param_count()) {
    throw std::invalid_argument("flat vector length does not match the "
                                "parameter count");
  }
  int off = 0;
  const int layers = static_cast<int>(config.widths.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    const int rows = config.widths[static_cast<size_t>(l) + 1];
    const int cols = config.widths[static_cast<size_t>(l)];
    params.weights[static_cast<size_t>(l)] +=
        scale *
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(flat.data() + off,
                                                         rows, cols);
    off += rows * cols;
    if (config.use_bias) {
      params.biases[static_cast<size_t>(l)] +=
          scale * Eigen::Map<const Eigen::VectorXd>(flat.data() + off, rows);
      off += rows;
    }
  }
}

}  // namespace pinntk
