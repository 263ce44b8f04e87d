#include "pinntk/multi_index.hpp"

#include "pinntk/jet.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pinntk {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw std::invalid_argument("MultiIndex: dimension must be at least 1");
  }
  for (int e : entries_) {
    if (e < 0) {
      throw std::invalid_argument("MultiIndex: entries must be non-negative");
    }
  }
}

MultiIndex MultiIndex::zero(int dim) {
  return MultiIndex(std::vector<int>(static_cast<size_t>(dim), 0));
}

MultiIndex MultiIndex::unit(int dim, int axis) {
  if (axis < 0 || axis >= dim) {
    throw std::invalid_argument("MultiIndex::unit: axis out of range");
  }
  std::vector<int> e(static_cast<size_t>(dim), 0);
  e[static_cast<size_t>(axis)] = 1;
  return MultiIndex(std::move(e));
}

int MultiIndex::total_order() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0);
}

MultiIndex MultiIndex::plus(const MultiIndex& other) const {
  if (other.dim() != dim()) {
    throw std::invalid_argument("MultiIndex::plus: dimension mismatch");
  }
  std::vector<int> e(entries_);
  for (int i = 0; i < dim(); ++i) e[static_cast<size_t>(i)] += other[i];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::minus(const MultiIndex& other) const {
  if (other.dim() != dim()) {
    throw std::invalid_argument("MultiIndex::minus: dimension mismatch");
  }
  std::vector<int> e(entries_);
  for (int i = 0; i < dim(); ++i) {
    e[static_cast<size_t>(i)] -= other[i];
    if (e[static_cast<size_t>(i)] < 0) {
      throw std::invalid_argument("MultiIndex::minus: result would be negative");
    }
  }
  return MultiIndex(std::move(e));
}

std::string MultiIndex::to_string() const {
  std::string s = "(";
  for (int i = 0; i < dim(); ++i) {
    if (i > 0) s += ",";
    s += std::to_string(entries_[static_cast<size_t>(i)]);
  }
  return s + ")";
}

int total_order(const MultiIndex& alpha) { return alpha.total_order(); }

bool dominates(const MultiIndex& alpha, const MultiIndex& beta) {
  if (alpha.dim() != beta.dim()) return false;
  for (int i = 0; i < alpha.dim(); ++i) {
    if (beta[i] > alpha[i]) return false;
  }
  return true;
}

std::vector<MultiIndex> graded_indices(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("graded_indices: dim must be >= 1");
  if (order < 0) throw std::invalid_argument("graded_indices: order must be >= 0");
  std::vector<MultiIndex> out;
  std::vector<int> current(static_cast<size_t>(dim), 0);
  // Enumerate compositions of `total` into dim parts in lexicographic order.
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == dim - 1) {
      current[static_cast<size_t>(axis)] = remaining;
      out.emplace_back(current);
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      current[static_cast<size_t>(axis)] = v;
      rec(axis + 1, remaining - v);
    }
  };
  for (int total = 0; total <= order; ++total) rec(0, total);
  return out;
}

namespace {

std::vector<OperatorTerm> laplacian_terms(int dim) {
  std::vector<OperatorTerm> terms;
  for (int axis = 0; axis < dim; ++axis) {
    MultiIndex second = MultiIndex::unit(dim, axis).plus(MultiIndex::unit(dim, axis));
    terms.push_back({Coefficient(1.0), second});
  }
  return terms;
}

std::vector<OperatorTerm> bilaplacian_terms(int dim) {
  // Composition of the Laplacian with itself: cross terms get coefficient 2.
  std::vector<OperatorTerm> terms;
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      std::vector<int> e(static_cast<size_t>(dim), 0);
      e[static_cast<size_t>(a)] += 2;
      e[static_cast<size_t>(b)] += 2;
      terms.push_back({Coefficient(a == b ? 1.0 : 2.0), MultiIndex(std::move(e))});
    }
  }
  return terms;
}

}  // namespace

DiffOperator::DiffOperator(int dim, std::vector<OperatorTerm> terms)
    : dim_(dim), order_(0), terms_(std::move(terms)) {
  if (dim_ < 1) throw std::invalid_argument("DiffOperator: dim must be >= 1");
  // An empty term list is the zero operator: applying it (or differentiating
  // through it) gives zeros of the appropriate shape.
  for (const auto& t : terms_) {
    if (t.index.dim() != dim_) {
      throw std::invalid_argument("DiffOperator: term index dimension mismatch");
    }
    order_ = std::max(order_, t.index.total_order());
  }
}

DiffOperator DiffOperator::identity(int dim) {
  return DiffOperator(dim, {{Coefficient(1.0), MultiIndex::zero(dim)}});
}

bool DiffOperator::is_preset(const std::string& name) {
  static const char* names[] = {"id",    "laplacian", "bilaplacian", "dxx",
                                "dxxxx", "wave2d",    "id+laplacian"};
  return std::find_if(std::begin(names), std::end(names), [&](const char* n) {
           return name == n;
         }) != std::end(names);
}

DiffOperator DiffOperator::preset(const std::string& name, int dim) {
  if (dim < 1) throw std::invalid_argument("DiffOperator::preset: dim must be >= 1");
  if (name == "id") return identity(dim);
  if (name == "laplacian") return DiffOperator(dim, laplacian_terms(dim));
  if (name == "bilaplacian") return DiffOperator(dim, bilaplacian_terms(dim));
  if (name == "dxx") {
    MultiIndex idx = MultiIndex::unit(dim, 0).plus(MultiIndex::unit(dim, 0));
    return DiffOperator(dim, {{Coefficient(1.0), idx}});
  }
  if (name == "dxxxx") {
    std::vector<int> e(static_cast<size_t>(dim), 0);
    e[0] = 4;
    return DiffOperator(dim, {{Coefficient(1.0), MultiIndex(std::move(e))}});
  }
  if (name == "wave2d") {
    if (dim != 2) {
      throw std::invalid_argument("DiffOperator::preset: wave2d requires dim == 2");
    }
    std::vector<int> ex = {2, 0};
    std::vector<int> ey = {0, 2};
    return DiffOperator(2, {{Coefficient(1.0), MultiIndex(ex)},
                            {Coefficient(-1.0), MultiIndex(ey)}});
  }
  if (name == "id+laplacian") {
    std::vector<OperatorTerm> terms = laplacian_terms(dim);
    terms.insert(terms.begin(), {Coefficient(1.0), MultiIndex::zero(dim)});
    return DiffOperator(dim, std::move(terms));
  }
  throw std::invalid_argument("DiffOperator::preset: unknown preset '" + name + "'");
}

bool DiffOperator::has_constant_coefficients() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const OperatorTerm& t) { return t.coeff.is_constant(); });
}

double apply_operator(const DiffOperator& op, const Jet& jet,
                      const Eigen::VectorXd& x) {
  if (jet.dim() != op.dim()) {
    throw std::invalid_argument("apply_operator: operator/jet dimension mismatch");
  }
  if (x.size() != op.dim()) {
    throw std::invalid_argument("apply_operator: point dimension mismatch");
  }
  if (op.order() > jet.order()) {
    throw std::invalid_argument(
        "apply_operator: jet order too low for operator of order " +
        std::to_string(op.order()));
  }
  double acc = 0.0;
  for (const auto& t : op.terms()) {
    acc += t.coeff(x) * jet.entry(t.index);
  }
  return acc;
}

}  // namespace pinntk
