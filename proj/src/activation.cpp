#include "pinntk/activation.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace pinntk {

namespace {

class TanhActivation final : public Activation {
 public:
  TanhActivation() : Activation("tanh", kSmoothForever) {}

  double deriv(int order, double x) const override {
    if (order < 0) throw std::invalid_argument("Activation: order must be >= 0");
    const double t = std::tanh(x);
    if (order == 0) return t;
    const std::vector<double>& poly = poly_for(order);
    // Horner in t; coefficients are exact small integers.
    double acc = 0.0;
    for (auto it = poly.rbegin(); it != poly.rend(); ++it) acc = acc * t + *it;
    return acc;
  }

  int growth_exponent(int) const override { return 0; }

 private:
  // d/dx tanh = 1 - tanh^2, so every derivative of tanh is a polynomial in
  // t = tanh(x):  P_{j+1}(t) = P_j'(t) (1 - t^2) with P_0 = t.
  static const std::vector<double>& poly_for(int order) {
    static std::mutex mutex;
    static std::vector<std::vector<double>> cache = {{0.0, 1.0}};  // P_0 = t
    std::lock_guard<std::mutex> lock(mutex);
    while (static_cast<int>(cache.size()) <= order) {
      const std::vector<double>& prev = cache.back();
      std::vector<double> deriv(prev.size() >= 2 ? prev.size() - 1 : 1, 0.0);
      for (size_t i = 1; i < prev.size(); ++i) {
        deriv[i - 1] = prev[i] * static_cast<double>(i);
      }
      // multiply by (1 - t^2)
      std::vector<double> next(deriv.size() + 2, 0.0);
      for (size_t i = 0; i < deriv.size(); ++i) {
        next[i] += deriv[i];
        next[i + 2] -= deriv[i];
      }
      cache.push_back(std::move(next));
    }
    return cache[static_cast<size_t>(order)];
  }
};

class ReluPowActivation final : public Activation {
 public:
  explicit ReluPowActivation(int p)
      : Activation(p == 1 ? "relu" : "relu" + std::to_string(p), p - 1), p_(p) {}

  double deriv(int order, double x) const override {
    if (order < 0) throw std::invalid_argument("Activation: order must be >= 0");
    if (order > p_) return 0.0;
    if (x < 0.0) return 0.0;
    double falling = 1.0;
    for (int i = 0; i < order; ++i) falling *= p_ - i;
    if (order == p_) return falling;  // right limit p! at x == 0
    if (x == 0.0) return 0.0;
    return falling * std::pow(x, p_ - order);
  }

  int growth_exponent(int order) const override {
    return order >= p_ ? 0 : p_ - order;
  }

 private:
  int p_;
};

class IdentityActivation final : public Activation {
 public:
  IdentityActivation() : Activation("identity", kSmoothForever) {}

  double deriv(int order, double x) const override {
    if (order < 0) throw std::invalid_argument("Activation: order must be >= 0");
    if (order == 0) return x;
    return order == 1 ? 1.0 : 0.0;
  }

  int growth_exponent(int order) const override { return order == 0 ? 1 : 0; }
};

class SinActivation final : public Activation {
 public:
  SinActivation() : Activation("sin", kSmoothForever) {}

  double deriv(int order, double x) const override {
    if (order < 0) throw std::invalid_argument("Activation: order must be >= 0");
    switch (order % 4) {
      case 0: return std::sin(x);
      case 1: return std::cos(x);
      case 2: return -std::sin(x);
      default: return -std::cos(x);
    }
  }

  int growth_exponent(int) const override { return 0; }
};

const std::map<std::string, const Activation*>& registry() {
  static const TanhActivation tanh_act;
  static const ReluPowActivation relu1(1), relu2(2), relu3(3), relu4(4),
      relu5(5), relu6(6);
  static const IdentityActivation identity_act;
  static const SinActivation sin_act;
  static const std::map<std::string, const Activation*> map = {
      {"tanh", &tanh_act},   {"relu", &relu1},   {"relu2", &relu2},
      {"relu3", &relu3},     {"relu4", &relu4},  {"relu5", &relu5},
      {"relu6", &relu6},     {"identity", &identity_act}, {"sin", &sin_act},
  };
  return map;
}

}  // namespace

const Activation& Activation::get(const std::string& name) {
  const auto& map = registry();
  auto it = map.find(name);
  if (it == map.end()) {
    throw std::invalid_argument("Activation::get: unknown activation '" + name +
                                "'");
  }
  return *it->second;
}

bool Activation::is_known(const std::string& name) {
  return registry().count(name) > 0;
}

}  // namespace pinntk
