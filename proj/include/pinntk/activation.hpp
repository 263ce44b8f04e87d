#pragma once

#include <string>

namespace pinntk {

/// Scalar activation with derivative evaluations of every order.
///
/// Shipped families:
///   tanh          smooth, derivatives via polynomials in tanh(x)
///   relu .. relu6 max(0, x)^p; derivatives below order p vanish at 0,
///                 the order-p derivative takes its right limit p! there,
///                 and higher orders are zero (the kink at 0 carries no
///                 weight under continuous sampling)
///   identity      x
///   sin           sin(x)
///
/// smoothness() is the largest k with sigma in C^k (a large sentinel for
/// the smooth families); growth_exponent(j) bounds the polynomial growth
/// of sigma^(j), which downstream validation uses to decide whether a
/// requested derivative order is meaningful for kernels and network jets.
class Activation {
 public:
  virtual ~Activation() = default;

  /// Registry lookup by name; throws std::invalid_argument for unknown
  /// names.  Accepted: "tanh", "relu", "relu2".."relu6", "identity", "sin".
  static const Activation& get(const std::string& name);
  static bool is_known(const std::string& name);

  const std::string& name() const { return name_; }
  int smoothness() const { return smoothness_; }

  virtual double deriv(int order, double x) const = 0;
  double operator()(double x) const { return deriv(0, x); }

  /// Degree bound on |sigma^(j)(x)| <= C (1 + |x|)^degree.
  virtual int growth_exponent(int order) const = 0;

 protected:
  Activation(std::string name, int smoothness)
      : name_(std::move(name)), smoothness_(smoothness) {}

  std::string name_;
  int smoothness_;
};

/// Sentinel smoothness for C-infinity activations.
inline constexpr int kSmoothForever = 1 << 20;

}  // namespace pinntk
