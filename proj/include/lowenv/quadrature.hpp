#pragma once

// Adaptive Gauss-Kronrod (7/15) integration on finite pieces, plus a
// real-line integrator that grows outward in doubling shells and reports
// divergence when the shells stop shrinking.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lowenv/distributions.hpp"

namespace lowenv {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Integral of h over [a, b], split at every breakpoint strictly inside.
template <class H>
QuadratureResult integrate(const H& h, double a, double b, std::vector<double> breaks = {},
                           double rel_tol = 1e-12, unsigned max_depth = 30) {
  QuadratureResult out;
  if (!(b > a)) return out;
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double prev = a;
  for (double x : breaks) {
    if (x <= prev) continue;
    if (x > b) break;
    double err = 0.0;
    out.value += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(h, prev, x, max_depth, rel_tol, &err);
    out.error += err;
    prev = x;
  }
  return out;
}

struct RealLineIntegral {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;  // false: shell contributions did not decay
  int shells = 0;
};

/// Integral of h over the real line: the core interval first, then shells
/// [hi + w(2^j - 1), hi + w(2^(j+1) - 1)] (and mirrored) until both shells add
/// less than `abs_tol`.
template <class H>
RealLineIntegral integrate_real_line(const H& h, Interval core, std::vector<double> breaks = {},
                                     double abs_tol = 1e-10, int max_shells = 16, unsigned max_depth = 30) {
  RealLineIntegral out;
  const auto core_part = integrate(h, core.lower, core.upper, breaks, 1e-12, max_depth);
  out.value = core_part.value;
  out.error = core_part.error;
  const double w = std::max(core.upper - core.lower, 1e-3);
  for (int j = 0; j < max_shells; ++j) {
    const double inner = w * (std::ldexp(1.0, j) - 1.0);
    const double outer = w * (std::ldexp(1.0, j + 1) - 1.0);
    const auto right = integrate(h, core.upper + inner, core.upper + outer, breaks, 1e-12, max_depth);
    const auto left = integrate(h, core.lower - outer, core.lower - inner, breaks, 1e-12, max_depth);
    out.value += right.value + left.value;
    out.error += right.error + left.error;
    out.shells = j + 1;
    if (!std::isfinite(out.value)) return out;
    if (std::abs(right.value) + std::abs(left.value) < abs_tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

/// `pieces` equally spaced interior points of `r`, for integrands with many
/// kinks (maxima over parameter grids).
inline std::vector<double> uniform_breaks(Interval r, int pieces) {
  std::vector<double> v;
  for (int i = 1; i < pieces; ++i) v.push_back(r.lower + (r.upper - r.lower) * i / pieces);
  return v;
}

/// Points where a law's density (or cdf slope) may jump.
inline std::vector<double> distribution_breakpoints(const Distribution& d) {
  return std::visit(
      [](const auto& l) -> std::vector<double> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, UniformLaw>) {
          return {l.a, l.b};
        } else if constexpr (std::is_same_v<L, BinaryLaw>) {
          std::vector<double> v;
          for (int j = 0; j <= 2 * l.spec.k; ++j) v.push_back(static_cast<double>(j) / l.spec.k);
          return v;
        } else if constexpr (std::is_same_v<L, CdfTableLaw>) {
          return l.x;
        } else {
          return {};
        }
      },
      d.law());
}

}  // namespace lowenv
