#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace pinntk {

/// Multi-index over d coordinates: non-negative exponents, one per axis.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  static MultiIndex zero(int dim);
  /// Unit index e_axis (a single first derivative along one axis).
  static MultiIndex unit(int dim, int axis);

  int dim() const { return static_cast<int>(entries_.size()); }
  int operator[](int axis) const { return entries_[static_cast<size_t>(axis)]; }
  const std::vector<int>& entries() const { return entries_; }

  int total_order() const;

  MultiIndex plus(const MultiIndex& other) const;
  /// Componentwise difference; caller must ensure other <= *this.
  MultiIndex minus(const MultiIndex& other) const;

  bool operator==(const MultiIndex& other) const = default;

  std::string to_string() const;

 private:
  std::vector<int> entries_;
};

int total_order(const MultiIndex& alpha);

/// True when beta <= alpha componentwise.
bool dominates(const MultiIndex& alpha, const MultiIndex& beta);

/// All multi-indices over `dim` axes with total order <= `order`, sorted by
/// total order first and lexicographically within each order.  This is the
/// canonical enumeration shared by jet tables and operator contractions.
std::vector<MultiIndex> graded_indices(int dim, int order);

/// Coefficient of an operator term: either a constant or a callable of the
/// evaluation point.  The constant path avoids std::function dispatch.
class Coefficient {
 public:
  Coefficient(double value) : constant_(true), value_(value) {}
  Coefficient(std::function<double(const Eigen::VectorXd&)> fn)
      : constant_(false), value_(0.0), fn_(std::move(fn)) {}

  bool is_constant() const { return constant_; }
  double constant_value() const { return value_; }

  double operator()(const Eigen::VectorXd& x) const {
    return constant_ ? value_ : fn_(x);
  }

 private:
  bool constant_;
  double value_;
  std::function<double(const Eigen::VectorXd&)> fn_;
};

struct OperatorTerm {
  Coefficient coeff;
  MultiIndex index;
};

/// Linear differential operator with constant or variable coefficients:
///   (T f)(x) = sum_r a_r(x) * D^{alpha_r} f(x).
class DiffOperator {
 public:
  DiffOperator(int dim, std::vector<OperatorTerm> terms);

  /// The identity operator: one term, coefficient 1, zero index.
  static DiffOperator identity(int dim);

  /// Named presets: "id", "laplacian", "bilaplacian", "dxx", "dxxxx",
  /// "wave2d", "id+laplacian".  Throws std::invalid_argument for unknown
  /// names or a dimension the preset does not support.
  static DiffOperator preset(const std::string& name, int dim);
  static bool is_preset(const std::string& name);

  int dim() const { return dim_; }
  /// Highest total derivative order across terms.
  int order() const { return order_; }
  const std::vector<OperatorTerm>& terms() const { return terms_; }

  bool has_constant_coefficients() const;

 private:
  int dim_;
  int order_;
  std::vector<OperatorTerm> terms_;
};

class Jet;

/// Contract an operator against a derivative table at a point:
///   sum_r a_r(x) * jet[alpha_r].
/// Throws if the jet is too shallow or the dimensions disagree.
double apply_operator(const DiffOperator& op, const Jet& jet,
                      const Eigen::VectorXd& x);

}  // namespace pinntk
