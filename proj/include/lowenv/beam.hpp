#pragma once

// Beam bedded on a spring of random stiffness X ~ N(mu, sigma), with
// (mu, sigma) ranging over a box. Failure when g(X) <= 0 with
//
//   g(x) = M_yield - (q L^2 / 4) max{ (1 - c(x))^2 / 2, c(x) - 1/2 },
//   c(x) = 5x / (384 EI / L^3 + 8x).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowenv/distributions.hpp"
#include "lowenv/integrand.hpp"

namespace lowenv::beam {

struct BeamParams {
  double L = 1.0;
  double q = 1.0;
  double M_yield = 0.073;
  double EI = 1.0;
  double mu_lower = 43.2;
  double mu_upper = 52.8;
  double sigma_lower = 4.32;
  double sigma_upper = 8.64;
  double mu_central = 48.0;
  double sigma_central = 10.8;

  void validate() const {
    for (double v : {L, q, M_yield, EI, sigma_lower, sigma_upper, sigma_central}) {
      if (!(std::isfinite(v) && v > 0.0)) throw std::invalid_argument("beam parameters must be positive and finite");
    }
    if (!(std::isfinite(mu_lower) && std::isfinite(mu_upper) && std::isfinite(mu_central))) {
      throw std::invalid_argument("beam means must be finite");
    }
    if (mu_lower > mu_upper) throw std::invalid_argument("mu_lower must not exceed mu_upper");
    if (sigma_lower > sigma_upper) throw std::invalid_argument("sigma_lower must not exceed sigma_upper");
  }

  ParamBox box() const { return ParamBox({mu_lower, sigma_lower}, {mu_upper, sigma_upper}); }
  Distribution central() const { return Distribution::normal(mu_central, sigma_central); }
};

/// Relative spring participation c(x), in [0, 5/8) for x >= 0. Negative
/// stiffness has no physical meaning and is treated as no spring (c = 0).
inline double beam_c(double x, const BeamParams& p) {
  const double k = std::max(x, 0.0);
  return 5.0 * k / (384.0 * p.EI / (p.L * p.L * p.L) + 8.0 * k);
}

inline double beam_limit_state(double x, const BeamParams& p) {
  const double c = beam_c(x, p);
  const double moment = std::max((1.0 - c) * (1.0 - c) / 2.0, c - 0.5);
  return p.M_yield - p.q * p.L * p.L / 4.0 * moment;
}

/// Sign changes of g on [lo, hi], located by a scan and refined by bisection.
inline std::vector<double> limit_state_roots(const BeamParams& p, double lo, double hi, int scan = 4000) {
  std::vector<double> roots;
  double a = lo;
  bool sa = beam_limit_state(a, p) > 0.0;
  for (int i = 1; i <= scan; ++i) {
    const double b = lo + (hi - lo) * i / scan;
    const bool sb = beam_limit_state(b, p) > 0.0;
    if (sb != sa) {
      double l = a;
      double r = b;
      for (int it = 0; it < 200 && r - l > 0.0; ++it) {
        const double m = 0.5 * (l + r);
        if (m <= l || m >= r) break;
        ((beam_limit_state(m, p) > 0.0) == sa ? l : r) = m;
      }
      roots.push_back(r);
    }
    a = b;
    sa = sb;
  }
  return roots;
}

/// f = 1{g(x) > 0}; its lower expectation is one minus the upper failure
/// probability.
inline Integrand survival_indicator(const BeamParams& p) {
  return Integrand{"indicator_g_positive(beam)", [p](double x) { return beam_limit_state(x, p) > 0.0 ? 1.0 : 0.0; },
                   true, false, limit_state_roots(p, -1e3, 1e4, 20000)};
}

inline Family beam_family(const BeamParams& p) {
  p.validate();
  Family fam = make_normal_family(p.box());
  fam.name = "beam_normal";
  return fam;
}

// Envelope maps F bounding the parameter gradients over the box. Both share
// the polynomial factor sup (z^2 + 1) with z = (x - mu)/sigma.
namespace detail {

inline double z_square_bound(double x, const BeamParams& p) {
  const double s2 = p.sigma_lower * p.sigma_lower;
  if (x < p.mu_lower) return (x - p.mu_upper) * (x - p.mu_upper) / s2 + 1.0;
  if (x < p.mu_upper) return (p.mu_upper - p.mu_lower) * (p.mu_upper - p.mu_lower) / s2 + 1.0;
  return (x - p.mu_lower) * (x - p.mu_lower) / s2 + 1.0;
}

// sup over the box of exp(-(x-mu)^2 / (2 sigma^2)), attained at the nearest
// mean with the widest sigma.
inline double log_gaussian_bound(double x, const BeamParams& p) {
  const double v2 = 2.0 * p.sigma_upper * p.sigma_upper;
  if (x < p.mu_lower) return -(x - p.mu_lower) * (x - p.mu_lower) / v2;
  if (x < p.mu_upper) return 0.0;
  return -(x - p.mu_upper) * (x - p.mu_upper) / v2;
}

}  // namespace detail

/// Bound on || grad_(mu,sigma) f_(mu,sigma)(x) ||_2 for the importance maps
/// f_(mu,sigma) = 1{g>0} p_(mu,sigma) / p_central.
inline double envelope_weighted_gradient(double x, const BeamParams& p) {
  const double dx = x - p.mu_central;
  const double log_central = dx * dx / (2.0 * p.sigma_central * p.sigma_central);
  return p.sigma_central / (p.sigma_lower * p.sigma_lower) * detail::z_square_bound(x, p) *
         std::exp(log_central + detail::log_gaussian_bound(x, p));
}

/// Bound on || grad_(mu,sigma) p_(mu,sigma)(x) ||_2.
inline double envelope_density_gradient(double x, const BeamParams& p) {
  return 1.0 / (std::sqrt(2.0 * std::numbers::pi) * p.sigma_lower * p.sigma_lower) * detail::z_square_bound(x, p) *
         std::exp(detail::log_gaussian_bound(x, p));
}

/// Closed-form bound on the integral over x of sup_(mu,sigma) p_(mu,sigma)(x):
/// (1/sigma_lower) (sigma_upper + (mu_upper - mu_lower) / sqrt(2 pi)).
inline double sup_density_integral_bound(const BeamParams& p) {
  return (p.sigma_upper + (p.mu_upper - p.mu_lower) / std::sqrt(2.0 * std::numbers::pi)) / p.sigma_lower;
}

}  // namespace lowenv::beam
