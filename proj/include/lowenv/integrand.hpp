#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace lowenv {

/// A real map f together with the regularity facts the consistency routes
/// rely on.
struct Integrand {
  std::string name;
  std::function<double(double)> fn;
  bool bounded = false;
  bool continuous = false;
  std::vector<double> breaks;  // points where f may jump

  double operator()(double x) const { return fn(x); }
};

inline Integrand constant_integrand(double c) {
  return {"constant", [c](double) { return c; }, true, true, {}};
}

inline Integrand identity_integrand() {
  return {"identity", [](double x) { return x; }, false, true, {}};
}

/// 1{x > 0}.
inline Integrand positive_indicator() {
  return {"indicator_g_positive(identity)", [](double x) { return x > 0.0 ? 1.0 : 0.0; }, true, false, {0.0}};
}

/// sum_i coefficients[i] x^i (Horner); bounded only when constant.
inline Integrand polynomial_integrand(std::vector<double> coefficients) {
  const bool constant = coefficients.size() <= 1;
  return {"polynomial",
          [c = std::move(coefficients)](double x) {
            double acc = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
            return acc;
          },
          constant, true, {}};
}

}  // namespace lowenv
