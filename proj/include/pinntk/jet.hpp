#pragma once

#include "pinntk/multi_index.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <vector>

namespace pinntk {

class Activation;

namespace detail {

/// One entry of a truncated Leibniz product table:
///   out_entry += coeff * lhs[a] * rhs[b].
struct ProductTerm {
  int out;
  int a;
  int b;
  double coeff;
};

/// Shared mechanics for truncated derivative tables.  A layout knows the
/// table size, the Leibniz product terms for the chosen truncation and the
/// highest power of a constant-free element that survives truncation (which
/// bounds the Horner depth of scalar composition).
class TableLayout {
 public:
  virtual ~TableLayout() = default;

  int size() const { return size_; }
  int max_power() const { return max_power_; }

  /// out = a * b under the truncated Leibniz rule.  `out` must not alias
  /// either input.
  void mul(const double* a, const double* b, double* out) const;

  /// out = M_a^T lam, the adjoint of multiplication by `a`.  Used by
  /// reverse-mode sweeps through composed activations.
  void mul_transpose(const double* a, const double* lam, double* out) const;

  /// Scalar composition f(g) where `derivs[j]` holds f^(j)(g[0]) for
  /// j = 0..max_power().  Exact for the truncation: writes the full
  /// derivative table of the composite into `out`.
  void compose(const double* inner, const double* derivs, double* out) const;

 protected:
  int size_ = 0;
  int max_power_ = 0;
  std::vector<ProductTerm> terms_;
};

}  // namespace detail

/// Layout of a jet table: all multi-indices of total order <= `order` over
/// `dim` axes in graded order.  Layouts are cached and shared; jets keep a
/// pointer to theirs.
class JetLayout : public detail::TableLayout {
 public:
  /// Cached accessor.  Orders above 6 are rejected: tables grow
  /// combinatorially and nothing here needs deeper truncations.
  static const JetLayout& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  /// Position of a multi-index in the table; throws if out of range.
  int index_of(const MultiIndex& alpha) const;

 private:
  JetLayout(int dim, int order);

  int dim_;
  int order_;
  std::vector<MultiIndex> indices_;
};

/// Truncated derivative table of a scalar function at a point: entry alpha
/// holds the raw derivative D^alpha f (not the Taylor coefficient).
class Jet {
 public:
  explicit Jet(const JetLayout& layout);
  Jet(const JetLayout& layout, double constant);

  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }
  const JetLayout& layout() const { return *layout_; }
  int size() const { return layout_->size(); }

  double value() const { return table_[0]; }
  double entry(const MultiIndex& alpha) const;
  void set_entry(const MultiIndex& alpha, double v);

  double operator[](int i) const { return table_[static_cast<size_t>(i)]; }
  double& operator[](int i) { return table_[static_cast<size_t>(i)]; }
  const double* data() const { return table_.data(); }
  double* data() { return table_.data(); }

  Jet& operator+=(const Jet& other);
  Jet& operator-=(const Jet& other);
  Jet& operator*=(double c);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double c) { return a *= c; }
  friend Jet operator*(double c, Jet a) { return a *= c; }

 private:
  const JetLayout* layout_;
  std::vector<double> table_;
};

/// Jet of the coordinate function x_axis at the point x: the value plus a
/// unit first-order entry (nothing higher).
Jet seed_coordinate_jet(const Eigen::VectorXd& x, int axis, int order);

Jet jet_linear_combine(const std::vector<Jet>& jets,
                       const std::vector<double>& coeffs);

/// Leibniz product: D^alpha(ab) = sum over splits with binomial weights.
Jet jet_product(const Jet& a, const Jet& b);

/// Family of derivative evaluations: fills derivs[0..count-1] with
/// f^(0)(x0) .. f^(count-1)(x0).
using DerivFamily = std::function<void(double x0, int count, double* derivs)>;

/// Composite f(g) via truncated power series around g's value; exact for
/// the stored orders.
Jet jet_compose_family(const DerivFamily& f, const Jet& g);

/// Composition with an activation, optionally pre-shifted: the function
/// composed is sigma^(shift).
Jet jet_compose_scalar(const Activation& f, const Jet& g);
Jet jet_compose_scalar(const Activation& f, int shift, const Jet& g);

/// Square root and reciprocal of a jet with positive (resp. nonzero) value.
Jet jet_sqrt(const Jet& g);
Jet jet_reciprocal(const Jet& g);

/// Layout for two-point derivative tables: entries are pairs (alpha, beta)
/// of multi-indices, each of total order <= `order`.  Unlike a 2d-variable
/// jet the truncation is rectangular, so mixed entries like (k, k) exist.
class BiJetLayout : public detail::TableLayout {
 public:
  static const BiJetLayout& get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  const JetLayout& base() const { return *base_; }
  int base_size() const { return base_->size(); }

  int index_of(int ia, int ib) const { return ia * base_->size() + ib; }
  int index_of(const MultiIndex& alpha, const MultiIndex& beta) const;

 private:
  BiJetLayout(int dim, int order);

  int dim_;
  int order_;
  const JetLayout* base_;
};

/// Two-point derivative table: entry (alpha, beta) holds
/// D_x^alpha D_{x'}^beta f(x, x').
class BiJet {
 public:
  explicit BiJet(const BiJetLayout& layout);
  BiJet(const BiJetLayout& layout, double constant);

  int dim() const { return layout_->dim(); }
  int order() const { return layout_->order(); }
  const BiJetLayout& layout() const { return *layout_; }
  int size() const { return layout_->size(); }

  double value() const { return table_[0]; }
  double entry(const MultiIndex& alpha, const MultiIndex& beta) const;
  void set_entry(const MultiIndex& alpha, const MultiIndex& beta, double v);

  double operator[](int i) const { return table_[static_cast<size_t>(i)]; }
  double& operator[](int i) { return table_[static_cast<size_t>(i)]; }
  const double* data() const { return table_.data(); }
  double* data() { return table_.data(); }

  BiJet& operator+=(const BiJet& other);
  BiJet& operator-=(const BiJet& other);
  BiJet& operator*=(double c);

  friend BiJet operator+(BiJet a, const BiJet& b) { return a += b; }
  friend BiJet operator-(BiJet a, const BiJet& b) { return a -= b; }
  friend BiJet operator*(BiJet a, double c) { return a *= c; }
  friend BiJet operator*(double c, BiJet a) { return a *= c; }

 private:
  const BiJetLayout* layout_;
  std::vector<double> table_;
};

/// Lift a one-point jet in x into the two-point table (entries (alpha, 0)).
BiJet embed_first(const BiJetLayout& layout, const Jet& jx);
/// Lift a one-point jet in x' into the two-point table (entries (0, beta)).
BiJet embed_second(const BiJetLayout& layout, const Jet& jxp);

BiJet jet_product(const BiJet& a, const BiJet& b);
BiJet jet_compose_family(const DerivFamily& f, const BiJet& g);
BiJet jet_compose_scalar(const Activation& f, const BiJet& g);
BiJet jet_compose_scalar(const Activation& f, int shift, const BiJet& g);
BiJet jet_sqrt(const BiJet& g);
BiJet jet_reciprocal(const BiJet& g);

}  // namespace pinntk
