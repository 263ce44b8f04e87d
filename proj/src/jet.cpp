#include "pinntk/jet.hpp"

#include "pinntk/activation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace pinntk {

namespace detail {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double multi_binom(const MultiIndex& whole, const MultiIndex& part) {
  double r = 1.0;
  for (int t = 0; t < whole.dim(); ++t) r *= binom(whole[t], part[t]);
  return r;
}

}  // namespace

void TableLayout::mul(const double* a, const double* b, double* out) const {
  std::fill(out, out + size_, 0.0);
  for (const ProductTerm& t : terms_) {
    out[t.out] += t.coeff * a[t.a] * b[t.b];
  }
}

void TableLayout::mul_transpose(const double* a, const double* lam,
                                double* out) const {
  std::fill(out, out + size_, 0.0);
  for (const ProductTerm& t : terms_) {
    out[t.b] += t.coeff * a[t.a] * lam[t.out];
  }
}

void TableLayout::compose(const double* inner, const double* derivs,
                          double* out) const {
  // Horner evaluation of sum_j f^(j)(g0)/j! * (g - g0)^j in the truncated
  // algebra.  Powers of the constant-free part vanish beyond max_power_, so
  // the series is finite and the result is the exact derivative table.
  thread_local std::vector<double> ghat, acc, tmp;
  ghat.assign(inner, inner + size_);
  ghat[0] = 0.0;
  acc.assign(static_cast<size_t>(size_), 0.0);
  tmp.resize(static_cast<size_t>(size_));

  std::vector<double> inv_fact(static_cast<size_t>(max_power_) + 1, 1.0);
  for (int j = 1; j <= max_power_; ++j) {
    inv_fact[static_cast<size_t>(j)] = inv_fact[static_cast<size_t>(j - 1)] / j;
  }

  acc[0] = derivs[max_power_] * inv_fact[static_cast<size_t>(max_power_)];
  for (int j = max_power_ - 1; j >= 0; --j) {
    mul(acc.data(), ghat.data(), tmp.data());
    tmp[0] += derivs[j] * inv_fact[static_cast<size_t>(j)];
    std::swap(acc, tmp);
  }
  std::copy(acc.begin(), acc.end(), out);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JetLayout

namespace {

void check_order_cap(int order) {
  if (order < 0 || order > 6) {
    throw std::invalid_argument(
        "derivative order must be between 0 and 6; tables beyond order 6 "
        "are not supported");
  }
}

}  // namespace

JetLayout::JetLayout(int dim, int order)
    : dim_(dim), order_(order), indices_(graded_indices(dim, order)) {
  size_ = static_cast<int>(indices_.size());
  max_power_ = order;

  for (int i = 0; i < size_; ++i) {
    for (int j = 0; j < size_; ++j) {
      const MultiIndex& a = indices_[static_cast<size_t>(i)];
      const MultiIndex& b = indices_[static_cast<size_t>(j)];
      if (a.total_order() + b.total_order() > order_) continue;
      const MultiIndex sum = a.plus(b);
      const int out = index_of(sum);
      terms_.push_back({out, i, j, detail::multi_binom(sum, a)});
    }
  }
  std::sort(terms_.begin(), terms_.end(),
            [](const detail::ProductTerm& l, const detail::ProductTerm& r) {
              return l.out < r.out;
            });
}

const JetLayout& JetLayout::get(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("JetLayout: dim must be >= 1");
  check_order_cap(order);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot.reset(new JetLayout(dim, order));
  return *slot;
}

int JetLayout::index_of(const MultiIndex& alpha) const {
  if (alpha.dim() != dim_) {
    throw std::invalid_argument("JetLayout::index_of: dimension mismatch");
  }
  for (int i = 0; i < size_; ++i) {
    if (indices_[static_cast<size_t>(i)] == alpha) return i;
  }
  throw std::invalid_argument("JetLayout::index_of: index " + alpha.to_string() +
                              " exceeds table order");
}

// ---------------------------------------------------------------------------
// Jet

Jet::Jet(const JetLayout& layout)
    : layout_(&layout), table_(static_cast<size_t>(layout.size()), 0.0) {}

Jet::Jet(const JetLayout& layout, double constant) : Jet(layout) {
  table_[0] = constant;
}

double Jet::entry(const MultiIndex& alpha) const {
  return table_[static_cast<size_t>(layout_->index_of(alpha))];
}

void Jet::set_entry(const MultiIndex& alpha, double v) {
  table_[static_cast<size_t>(layout_->index_of(alpha))] = v;
}

namespace {

void check_same_layout(const void* a, const void* b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) +
                                ": operands use different table layouts");
  }
}

}  // namespace

Jet& Jet::operator+=(const Jet& other) {
  check_same_layout(layout_, &other.layout(), "Jet::operator+=");
  for (size_t i = 0; i < table_.size(); ++i) table_[i] += other.table_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& other) {
  check_same_layout(layout_, &other.layout(), "Jet::operator-=");
  for (size_t i = 0; i < table_.size(); ++i) table_[i] -= other.table_[i];
  return *this;
}

Jet& Jet::operator*=(double c) {
  for (double& v : table_) v *= c;
  return *this;
}

Jet seed_coordinate_jet(const Eigen::VectorXd& x, int axis, int order) {
  const int dim = static_cast<int>(x.size());
  if (axis < 0 || axis >= dim) {
    throw std::invalid_argument("seed_coordinate_jet: axis out of range");
  }
  const JetLayout& layout = JetLayout::get(dim, order);
  Jet jet(layout, x[axis]);
  if (order >= 1) jet.set_entry(MultiIndex::unit(dim, axis), 1.0);
  return jet;
}

Jet jet_linear_combine(const std::vector<Jet>& jets,
                       const std::vector<double>& coeffs) {
  if (jets.empty()) {
    throw std::invalid_argument("jet_linear_combine: no jets given");
  }
  if (jets.size() != coeffs.size()) {
    throw std::invalid_argument(
        "jet_linear_combine: jets and coefficients differ in count");
  }
  Jet out(jets.front().layout());
  for (size_t i = 0; i < jets.size(); ++i) {
    check_same_layout(&jets[i].layout(), &out.layout(), "jet_linear_combine");
    for (int k = 0; k < out.size(); ++k) out[k] += coeffs[i] * jets[i][k];
  }
  return out;
}

Jet jet_product(const Jet& a, const Jet& b) {
  check_same_layout(&a.layout(), &b.layout(), "jet_product");
  Jet out(a.layout());
  a.layout().mul(a.data(), b.data(), out.data());
  return out;
}

namespace {

template <typename JetT>
JetT compose_impl(const DerivFamily& f, const JetT& g) {
  const int count = g.layout().max_power() + 1;
  std::vector<double> derivs(static_cast<size_t>(count));
  f(g.value(), count, derivs.data());
  JetT out(g.layout());
  g.layout().compose(g.data(), derivs.data(), out.data());
  return out;
}

DerivFamily activation_family(const Activation& f, int shift) {
  return [&f, shift](double x0, int count, double* derivs) {
    for (int j = 0; j < count; ++j) derivs[j] = f.deriv(shift + j, x0);
  };
}

DerivFamily sqrt_family() {
  return [](double x0, int count, double* derivs) {
    if (!(x0 > 0.0)) {
      throw std::domain_error("jet_sqrt: value must be positive");
    }
    derivs[0] = std::sqrt(x0);
    for (int j = 1; j < count; ++j) {
      derivs[j] = derivs[j - 1] * (0.5 - (j - 1)) / x0;
    }
  };
}

DerivFamily reciprocal_family() {
  return [](double x0, int count, double* derivs) {
    if (x0 == 0.0) {
      throw std::domain_error("jet_reciprocal: value must be nonzero");
    }
    derivs[0] = 1.0 / x0;
    for (int j = 1; j < count; ++j) derivs[j] = derivs[j - 1] * (-j) / x0;
  };
}

}  // namespace

Jet jet_compose_family(const DerivFamily& f, const Jet& g) {
  return compose_impl(f, g);
}

Jet jet_compose_scalar(const Activation& f, const Jet& g) {
  return compose_impl(activation_family(f, 0), g);
}

Jet jet_compose_scalar(const Activation& f, int shift, const Jet& g) {
  return compose_impl(activation_family(f, shift), g);
}

Jet jet_sqrt(const Jet& g) { return compose_impl(sqrt_family(), g); }

Jet jet_reciprocal(const Jet& g) { return compose_impl(reciprocal_family(), g); }

// ---------------------------------------------------------------------------
// BiJetLayout

BiJetLayout::BiJetLayout(int dim, int order)
    : dim_(dim), order_(order), base_(&JetLayout::get(dim, order)) {
  const int b = base_->size();
  size_ = b * b;
  max_power_ = 2 * order;

  const auto& idx = base_->indices();
  for (int pa = 0; pa < b; ++pa) {
    for (int pb = 0; pb < b; ++pb) {
      for (int qa = 0; qa < b; ++qa) {
        const int sa = idx[static_cast<size_t>(pa)].total_order() +
                       idx[static_cast<size_t>(qa)].total_order();
        if (sa > order_) continue;
        const MultiIndex suma = idx[static_cast<size_t>(pa)].plus(
            idx[static_cast<size_t>(qa)]);
        const int ia = base_->index_of(suma);
        const double ca = detail::multi_binom(suma, idx[static_cast<size_t>(pa)]);
        for (int qb = 0; qb < b; ++qb) {
          const int sb = idx[static_cast<size_t>(pb)].total_order() +
                         idx[static_cast<size_t>(qb)].total_order();
          if (sb > order_) continue;
          const MultiIndex sumb = idx[static_cast<size_t>(pb)].plus(
              idx[static_cast<size_t>(qb)]);
          const int ib = base_->index_of(sumb);
          const double cb =
              detail::multi_binom(sumb, idx[static_cast<size_t>(pb)]);
          terms_.push_back({index_of(ia, ib), index_of(pa, pb),
                            index_of(qa, qb), ca * cb});
        }
      }
    }
  }
  std::sort(terms_.begin(), terms_.end(),
            [](const detail::ProductTerm& l, const detail::ProductTerm& r) {
              return l.out < r.out;
            });
}

const BiJetLayout& BiJetLayout::get(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("BiJetLayout: dim must be >= 1");
  check_order_cap(order);
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<BiJetLayout>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{dim, order}];
  if (!slot) slot.reset(new BiJetLayout(dim, order));
  return *slot;
}

int BiJetLayout::index_of(const MultiIndex& alpha, const MultiIndex& beta) const {
  return index_of(base_->index_of(alpha), base_->index_of(beta));
}

// ---------------------------------------------------------------------------
// BiJet

BiJet::BiJet(const BiJetLayout& layout)
    : layout_(&layout), table_(static_cast<size_t>(layout.size()), 0.0) {}

BiJet::BiJet(const BiJetLayout& layout, double constant) : BiJet(layout) {
  table_[0] = constant;
}

double BiJet::entry(const MultiIndex& alpha, const MultiIndex& beta) const {
  return table_[static_cast<size_t>(layout_->index_of(alpha, beta))];
}

void BiJet::set_entry(const MultiIndex& alpha, const MultiIndex& beta, double v) {
  table_[static_cast<size_t>(layout_->index_of(alpha, beta))] = v;
}

BiJet& BiJet::operator+=(const BiJet& other) {
  check_same_layout(layout_, &other.layout(), "BiJet::operator+=");
  for (size_t i = 0; i < table_.size(); ++i) table_[i] += other.table_[i];
  return *this;
}

BiJet& BiJet::operator-=(const BiJet& other) {
  check_same_layout(layout_, &other.layout(), "BiJet::operator-=");
  for (size_t i = 0; i < table_.size(); ++i) table_[i] -= other.table_[i];
  return *this;
}

BiJet& BiJet::operator*=(double c) {
  for (double& v : table_) v *= c;
  return *this;
}

BiJet embed_first(const BiJetLayout& layout, const Jet& jx) {
  check_same_layout(&jx.layout(), &layout.base(), "embed_first");
  BiJet out(layout);
  for (int i = 0; i < layout.base_size(); ++i) {
    out[layout.index_of(i, 0)] = jx[i];
  }
  return out;
}

BiJet embed_second(const BiJetLayout& layout, const Jet& jxp) {
  check_same_layout(&jxp.layout(), &layout.base(), "embed_second");
  BiJet out(layout);
  for (int i = 0; i < layout.base_size(); ++i) {
    out[layout.index_of(0, i)] = jxp[i];
  }
  return out;
}

BiJet jet_product(const BiJet& a, const BiJet& b) {
  check_same_layout(&a.layout(), &b.layout(), "jet_product");
  BiJet out(a.layout());
  a.layout().mul(a.data(), b.data(), out.data());
  return out;
}

BiJet jet_compose_family(const DerivFamily& f, const BiJet& g) {
  return compose_impl(f, g);
}

BiJet jet_compose_scalar(const Activation& f, const BiJet& g) {
  return compose_impl(activation_family(f, 0), g);
}

BiJet jet_compose_scalar(const Activation& f, int shift, const BiJet& g) {
  return compose_impl(activation_family(f, shift), g);
}

BiJet jet_sqrt(const BiJet& g) { return compose_impl(sqrt_family(), g); }

BiJet jet_reciprocal(const BiJet& g) {
  return compose_impl(reciprocal_family(), g);
}

}  // namespace pinntk
