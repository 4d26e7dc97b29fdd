#pragma once

// Grid-based checks of the sufficient conditions for strong consistency of
// the envelope estimator, and the certificate that records them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lowenv/distributions.hpp"
#include "lowenv/errors.hpp"
#include "lowenv/integrand.hpp"
#include "lowenv/parallel.hpp"
#include "lowenv/quadrature.hpp"
#include "lowenv/sampling.hpp"

namespace lowenv {

enum class Route {
  finite_T,
  lipschitz_box,
  gradient_box,
  compact_smooth,
  is_lipschitz_density,
  is_gradient_density,
  is_compact_bounded_f,
};

inline constexpr Route kAllRoutes[] = {Route::finite_T,           Route::lipschitz_box,
                                       Route::gradient_box,       Route::compact_smooth,
                                       Route::is_lipschitz_density, Route::is_gradient_density,
                                       Route::is_compact_bounded_f};

inline std::string to_string(Route r) {
  switch (r) {
    case Route::finite_T: return "finite_T";
    case Route::lipschitz_box: return "lipschitz_box";
    case Route::gradient_box: return "gradient_box";
    case Route::compact_smooth: return "compact_smooth";
    case Route::is_lipschitz_density: return "is_lipschitz_density";
    case Route::is_gradient_density: return "is_gradient_density";
    case Route::is_compact_bounded_f: return "is_compact_bounded_f";
  }
  return "finite_T";
}

inline std::optional<Route> route_from_string(const std::string& s) {
  for (Route r : kAllRoutes) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

/// Grids used by the checks. The x grid spans the union of the members'
/// ranges padded by `x_pad_sigmas` standard deviations unless `x_range` is
/// given; t grids use `t_points_per_dim` per axis.
struct GridSpec {
  int x_points = 201;
  double x_pad_sigmas = 6.0;
  std::optional<Interval> x_range;
  int t_points_per_dim = 21;
  double inflate_fraction = 0.01;
  double fd_rel_step = 1e-6;
  double fd_rel_tol = 1e-4;
  double quad_abs_tol = 1e-8;
};

// ---------------------------------------------------------------------------
// Covering and bracketing bounds

/// (2 c sqrt(m) / eps)^m with c the largest norm in the box, floored at 1.
inline double covering_number_bound(const ParamBox& box, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("covering radius must be positive");
  const auto m = static_cast<double>(box.dimension());
  const double raw = std::pow(2.0 * box.sup_norm() * std::sqrt(m) / eps, m);
  return std::max(1.0, raw);
}

struct BracketingBound {
  double bracket_size = 0.0;
  double count_bound = 0.0;
};

/// Brackets of size 2 eps ||F|| number at most the eps-covering number.
inline BracketingBound bracketing_bound_from_lipschitz(double covering_bound_at_eps, double eps, double F_norm) {
  if (!(eps > 0.0)) throw std::invalid_argument("bracketing radius must be positive");
  if (!(F_norm >= 0.0)) throw std::invalid_argument("envelope norm must be non-negative");
  return {2.0 * eps * F_norm, covering_bound_at_eps};
}

struct CoveringRow {
  double eps = 0.0;
  double covering = 0.0;
  double bracket_size = 0.0;
  double bracket_count = 0.0;
};

// ---------------------------------------------------------------------------
// Hypothesis checks

/// h(x, t): either f_t(x) or p_t(x).
using ParamMap = std::function<double(double x, std::span<const double> t)>;
using ParamGradient = std::function<void(double x, std::span<const double> t, std::span<double> grad)>;
using EnvelopeMap = std::function<double(double)>;

inline std::vector<double> linear_grid(Interval range, int points) {
  if (points < 2) return {range.lower};
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    v[static_cast<std::size_t>(i)] =
        i == points - 1 ? range.upper : range.lower + (range.upper - range.lower) * i / (points - 1);
  }
  return v;
}

/// Max over x and pairs s != t of |h(x,s) - h(x,t)| - ||s - t|| F(x).
inline double check_lipschitz_envelope(const ParamMap& h, const ParamBox& box, const EnvelopeMap& F,
                                       std::span<const double> x_grid, std::span<const Point> t_points,
                                       int threads = 1) {
  const std::size_t nt = t_points.size();
  const std::size_t nx = x_grid.size();
  std::vector<double> values(nt * nx);
  parallel_for_index(nt, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < nx; ++j) values[i * nx + j] = h(x_grid[j], t_points[i]);
  });
  std::vector<double> fx(nx);
  for (std::size_t j = 0; j < nx; ++j) fx[j] = F(x_grid[j]);

  std::vector<double> row_max(nt, -std::numeric_limits<double>::infinity());
  parallel_for_index(nt, threads, [&](std::size_t a) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t b = a + 1; b < nt; ++b) {
      const double d = box.distance(t_points[a], t_points[b]);
      for (std::size_t j = 0; j < nx; ++j) {
        const double r = std::abs(values[a * nx + j] - values[b * nx + j]) - d * fx[j];
        if (r > worst || std::isnan(r)) worst = std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
      }
    }
    row_max[a] = worst;
  });
  double out = -std::numeric_limits<double>::infinity();
  for (double v : row_max) out = std::max(out, v);
  return out;
}

struct GradientCheck {
  double max_violation = -std::numeric_limits<double>::infinity();
  double max_fd_rel_error = 0.0;
  std::size_t points = 0;
  std::size_t fd_failures = 0;
};

/// Max over the grid of ||grad_t h(x,t)||_* - F(x), where ||.||_* is dual to
/// the box norm, together with a central finite-difference audit of `grad`.
inline GradientCheck check_gradient_envelope(const ParamMap& h, const ParamGradient& grad, NormKind norm,
                                             const EnvelopeMap& F, std::span<const double> x_grid,
                                             std::span<const Point> t_points, double fd_rel_step = 1e-6,
                                             double fd_rel_tol = 1e-4, int threads = 1) {
  const std::size_t nt = t_points.size();
  const std::size_t nx = x_grid.size();
  std::vector<double> fx(nx);
  for (std::size_t j = 0; j < nx; ++j) fx[j] = F(x_grid[j]);
  std::vector<GradientCheck> per_t(nt);
  const NormKind dual = dual_norm(norm);
  parallel_for_index(nt, threads, [&](std::size_t i) {
    const Point& t = t_points[i];
    const std::size_t m = t.size();
    GradientCheck local;
    std::vector<double> g(m);
    std::vector<double> fd(m);
    std::vector<double> diff(m);
    Point tp = t;
    Point tm = t;
    for (std::size_t j = 0; j < nx; ++j) {
      const double x = x_grid[j];
      grad(x, t, g);
      const double gnorm = vector_norm(g, dual);
      const double r = gnorm - fx[j];
      local.max_violation = std::max(local.max_violation, std::isnan(r) ? std::numeric_limits<double>::infinity() : r);
      for (std::size_t d = 0; d < m; ++d) {
        const double step = fd_rel_step * std::max(1.0, std::abs(t[d]));
        tp[d] = t[d] + step;
        tm[d] = t[d] - step;
        fd[d] = (h(x, tp) - h(x, tm)) / (tp[d] - tm[d]);
        tp[d] = t[d];
        tm[d] = t[d];
        diff[d] = fd[d] - g[d];
      }
      const double dn = vector_norm(diff, NormKind::euclidean);
      const double scale = std::max(vector_norm(g, NormKind::euclidean), vector_norm(fd, NormKind::euclidean));
      const double rel = dn == 0.0 ? 0.0 : (scale > 0.0 ? dn / scale : std::numeric_limits<double>::infinity());
      local.max_fd_rel_error = std::max(local.max_fd_rel_error, std::isnan(rel) ? 1.0 : rel);
      if (!(rel <= fd_rel_tol)) ++local.fd_failures;
      ++local.points;
    }
    per_t[i] = local;
  });
  GradientCheck out;
  for (const auto& c : per_t) {
    out.max_violation = std::max(out.max_violation, c.max_violation);
    out.max_fd_rel_error = std::max(out.max_fd_rel_error, c.max_fd_rel_error);
    out.points += c.points;
    out.fd_failures += c.fd_failures;
  }
  return out;
}

/// x range covering every grid member: effective ranges of the members
/// padded by `pad_sigmas` (support for non-normal members).
inline Interval family_x_range(const Family& family, std::span<const Point> t_points, double pad_sigmas) {
  Interval r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& t : t_points) {
    const Interval e = family.dist_at(t).effective_range(pad_sigmas);
    r.lower = std::min(r.lower, e.lower);
    r.upper = std::max(r.upper, e.upper);
  }
  return r;
}

inline constexpr int kSupPieces = 200;
inline constexpr unsigned kSupDepth = 12;

struct SupDensityCheck {
  double integral = 0.0;
  bool converged = false;
  std::optional<double> closed_form;
  bool holds = false;
};

/// Integral over x of the max over the t grid of p_t(x). For the normal
/// family also compares with the closed-form bound
/// (1/sigma_lower)(sigma_upper + (mu_upper - mu_lower)/sqrt(2 pi)).
inline SupDensityCheck check_sup_density_integrable(const Family& family, const GridSpec& grid) {
  const std::vector<Point> ts =
      family.is_finite() ? family.finite_points : family.box.grid(grid.t_points_per_dim);
  std::vector<Distribution> members;
  members.reserve(ts.size());
  std::vector<double> breaks;
  for (const auto& t : ts) {
    members.push_back(family.dist_at(t));
    if (!members.back().has_density()) throw DensityUnavailable("sup-density check needs member densities");
    for (double b : distribution_breakpoints(members.back())) breaks.push_back(b);
  }
  const Interval core = family_x_range(family, ts, 8.0);
  for (double b : uniform_breaks(core, kSupPieces)) breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  const auto sup_density = [&members](double x) {
    double best = 0.0;
    for (const auto& d : members) best = std::max(best, d.density(x));
    return best;
  };
  const auto r = integrate_real_line(sup_density, core, breaks, grid.quad_abs_tol, 16, kSupDepth);

  SupDensityCheck out;
  out.integral = r.value;
  out.converged = r.converged && std::isfinite(r.value);
  const Distribution probe = family.dist_at(family.box.center());
  if (probe.is_normal() && !family.is_finite() && family.box.dimension() == 2) {
    const auto& lo = family.box.lower();
    const auto& hi = family.box.upper();
    out.closed_form = (hi[1] + (hi[0] - lo[0]) / std::sqrt(2.0 * std::numbers::pi)) / lo[1];
  }
  out.holds = out.converged && (!out.closed_form || out.integral <= *out.closed_form + 1e-6);
  return out;
}

// ---------------------------------------------------------------------------
// Certificates

struct ConsistencyCertificate {
  Route route = Route::finite_T;
  bool issued = false;
  std::string reason;
  double envelope_norm = std::numeric_limits<double>::quiet_NaN();
  bool envelope_norm_converged = false;
  double max_violation = std::numeric_limits<double>::quiet_NaN();
  double max_fd_rel_error = std::numeric_limits<double>::quiet_NaN();
  std::size_t checked_points = 0;
  std::optional<double> sup_density_integral;
  std::optional<double> sup_density_closed_form;
  std::vector<CoveringRow> bounds;
  GridSpec grid;
  Interval x_range{0.0, 0.0};
  ParamBox t_box{{0.0}, {0.0}};
};

/// What to certify: the family, the integrand f, the central law (importance
/// maps f_t = f p_t / p; ignored for inverse transform), the backend, and the
/// envelope F for routes that need one (falls back to family.envelope).
struct CertifySetup {
  const Family* family = nullptr;
  Integrand f;
  std::optional<Distribution> central;
  Backend backend = Backend::importance;
  EnvelopeMap envelope;
  GridSpec grid;
  int threads = 1;
};

namespace detail {

inline const Distribution& require_central(const CertifySetup& s, Route r) {
  if (s.backend != Backend::importance || !s.central || !s.central->has_density()) {
    throw RouteInapplicable(to_string(r) + " needs the importance backend with a central density");
  }
  return *s.central;
}

inline EnvelopeMap require_envelope(const CertifySetup& s, Route r) {
  if (s.envelope) return s.envelope;
  if (s.family->envelope) return s.family->envelope;
  throw RouteInapplicable(to_string(r) + " needs an envelope map F");
}

inline void require_box_family(const CertifySetup& s, Route r) {
  if (s.family->is_finite()) {
    throw RouteInapplicable(to_string(r) + " needs a family indexed by a box, not a finite or countable set");
  }
}

inline void require_gradient(const CertifySetup& s, Route r) {
  if (!s.family->has_density_gradient()) throw RouteInapplicable(to_string(r) + " needs density gradients in t");
}

// Importance map f_t(x) = f(x) p_t(x) / p(x), zero where f or p vanishes.
inline double importance_map(const CertifySetup& s, const Distribution& central, double x,
                             std::span<const double> t) {
  const double fx = s.f(x);
  if (fx == 0.0) return 0.0;
  const Distribution member = s.family->dist_at(t);
  return fx * weight_with_central(member, CentralPoint::at(central, x), x, nullptr);
}

// ||F||_{P,1}: against the central density, or the uniform base on (0,1).
inline RealLineIntegral envelope_norm(const CertifySetup& s, const EnvelopeMap& F, Route r) {
  if (s.backend == Backend::inverse_transform) {
    const auto q = integrate([&F](double u) { return std::abs(F(u)); }, 0.0, 1.0);
    return {q.value, q.error, std::isfinite(q.value), 0};
  }
  const Distribution& central = require_central(s, r);
  const auto h = [&](double x) {
    const double p = central.density(x);
    return p == 0.0 ? 0.0 : std::abs(F(x)) * p;
  };
  return integrate_real_line(h, central.effective_range(8.0), distribution_breakpoints(central), s.grid.quad_abs_tol);
}

// Integral over x of |f(x)| F(x) (Lebesgue).
inline RealLineIntegral weighted_lebesgue_norm(const CertifySetup& s, const EnvelopeMap& F, Interval core) {
  const auto h = [&](double x) {
    const double fx = std::abs(s.f(x));
    return fx == 0.0 ? 0.0 : fx * std::abs(F(x));
  };
  return integrate_real_line(h, core, {}, s.grid.quad_abs_tol);
}

inline std::vector<CoveringRow> covering_table(const ParamBox& box, double F_norm) {
  std::vector<CoveringRow> rows;
  const double c = std::max(box.sup_norm(), 1e-300);
  for (double scale : {1.0, 0.1, 0.01, 0.001}) {
    const double eps = c * scale;
    const double cov = covering_number_bound(box, eps);
    const auto b = bracketing_bound_from_lipschitz(cov, eps, std::isfinite(F_norm) ? F_norm : 0.0);
    rows.push_back({eps, cov, b.bracket_size, b.count_bound});
  }
  return rows;
}

}  // namespace detail

/// Runs the checks of `route`; the certificate is issued only when every
/// checked inequality holds on the grid and the required integral is finite.
inline ConsistencyCertificate certify(const CertifySetup& setup, Route route) {
  if (setup.family == nullptr) throw std::invalid_argument("certify needs a family");
  const Family& fam = *setup.family;
  ConsistencyCertificate cert;
  cert.route = route;
  cert.grid = setup.grid;
  cert.t_box = fam.box;
  const GridSpec& g = setup.grid;

  if (route == Route::finite_T) {
    if (!fam.is_finite()) throw RouteInapplicable("finite_T needs a finite index set");
    cert.max_violation = 0.0;
    if (fam.countable_truncation) {
      cert.reason = "finite slice of a countably infinite family; the full index set is not finite";
      return cert;
    }
    cert.issued = true;
    cert.reason = "finite index set";
    return cert;
  }

  if (fam.countable_truncation) {
    throw RouteInapplicable(to_string(route) + " needs a family indexed by a box; this family is countable");
  }

  switch (route) {
    case Route::lipschitz_box:
    case Route::is_lipschitz_density: {
      const bool density = route == Route::is_lipschitz_density;
      const EnvelopeMap F = detail::require_envelope(setup, route);
      const std::vector<Point> ts = fam.is_finite() ? fam.finite_points : fam.box.grid(g.t_points_per_dim);
      ParamMap h;
      std::vector<double> xs;
      if (density) {
        h = [&fam](double x, std::span<const double> t) { return fam.dist_at(t).density(x); };
        cert.x_range = g.x_range.value_or(family_x_range(fam, ts, g.x_pad_sigmas));
        xs = linear_grid(cert.x_range, g.x_points);
      } else if (setup.backend == Backend::importance) {
        const Distribution& central = detail::require_central(setup, route);
        h = [&setup, central](double x, std::span<const double> t) {
          return detail::importance_map(setup, central, x, t);
        };
        cert.x_range = g.x_range.value_or(family_x_range(fam, ts, g.x_pad_sigmas));
        xs = linear_grid(cert.x_range, g.x_points);
      } else {
        h = [&setup, &fam](double u, std::span<const double> t) { return setup.f(fam.dist_at(t).quantile(u)); };
        cert.x_range = {0.5 / g.x_points, 1.0 - 0.5 / g.x_points};
        xs = linear_grid(cert.x_range, g.x_points);
      }
      cert.max_violation = check_lipschitz_envelope(h, fam.box, F, xs, ts, setup.threads);
      cert.checked_points = xs.size() * ts.size() * (ts.size() - 1) / 2;
      const auto norm = density ? detail::weighted_lebesgue_norm(setup, F, cert.x_range)
                                : detail::envelope_norm(setup, F, route);
      cert.envelope_norm = norm.value;
      cert.envelope_norm_converged = norm.converged && std::isfinite(norm.value);
      cert.bounds = detail::covering_table(fam.box, cert.envelope_norm);
      cert.issued = cert.max_violation <= 0.0 && cert.envelope_norm_converged;
      cert.reason = cert.issued ? "Lipschitz envelope holds on the grid with finite norm"
                                : (cert.max_violation > 0.0 ? "Lipschitz inequality violated on the grid"
                                                            : "envelope norm not finite");
      return cert;
    }
    case Route::gradient_box:
    case Route::is_gradient_density: {
      const bool density = route == Route::is_gradient_density;
      detail::require_box_family(setup, route);
      detail::require_gradient(setup, route);
      const EnvelopeMap F = detail::require_envelope(setup, route);
      const ParamBox tc = fam.box.inflated(g.inflate_fraction);
      cert.t_box = tc;
      const std::vector<Point> ts = tc.grid(g.t_points_per_dim);
      for (const auto& t : ts) {
        (void)fam.dist_at(t);  // throws when T_c leaves the family's domain
      }
      cert.x_range = g.x_range.value_or(family_x_range(fam, fam.box.grid(g.t_points_per_dim), g.x_pad_sigmas));
      const std::vector<double> xs = linear_grid(cert.x_range, g.x_points);
      ParamMap h;
      ParamGradient grad;
      if (density) {
        h = [&fam](double x, std::span<const double> t) { return fam.dist_at(t).density(x); };
        grad = fam.density_grad_at;
      } else {
        const Distribution& central = detail::require_central(setup, route);
        h = [&setup, central](double x, std::span<const double> t) {
          return detail::importance_map(setup, central, x, t);
        };
        grad = [&setup, &fam, central](double x, std::span<const double> t, std::span<double> out) {
          const double fx = setup.f(x);
          const double p = central.density(x);
          fam.density_grad_at(x, t, out);
          for (double& v : out) v = (fx == 0.0 || p == 0.0) ? 0.0 : fx * v / p;
        };
      }
      const auto chk = check_gradient_envelope(h, grad, fam.box.norm_kind(), F, xs, ts, g.fd_rel_step, g.fd_rel_tol,
                                               setup.threads);
      cert.max_violation = chk.max_violation;
      cert.max_fd_rel_error = chk.max_fd_rel_error;
      cert.checked_points = chk.points;
      if (chk.fd_failures > 0) {
        throw ComputationError("analytic gradient disagrees with finite differences at " +
                               std::to_string(chk.fd_failures) + " grid points");
      }
      const auto norm = density ? detail::weighted_lebesgue_norm(setup, F, cert.x_range)
                                : detail::envelope_norm(setup, F, route);
      cert.envelope_norm = norm.value;
      cert.envelope_norm_converged = norm.converged && std::isfinite(norm.value);
      cert.bounds = detail::covering_table(fam.box, cert.envelope_norm);
      cert.issued = cert.max_violation <= 0.0 && cert.envelope_norm_converged;
      cert.reason = cert.issued ? "gradient envelope holds on the grid over the inflated box with finite norm"
                                : (cert.max_violation > 0.0 ? "gradient bound violated on the grid"
                                                            : "envelope norm not finite");
      return cert;
    }
    case Route::compact_smooth: {
      detail::require_box_family(setup, route);
      detail::require_gradient(setup, route);
      if (!setup.f.continuous) {
        throw RouteInapplicable("compact_smooth needs f_t continuously differentiable in x; f is not continuous");
      }
      const Distribution& central = detail::require_central(setup, route);
      const std::vector<Point> ts = fam.box.grid(g.t_points_per_dim);
      std::vector<Distribution> members;
      for (const auto& t : ts) members.push_back(fam.dist_at(t));
      // E^P sup_t |f_t| = integral of |f(x)| sup_t p_t(x) dx.
      const auto h = [&](double x) {
        const double fx = std::abs(setup.f(x));
        if (fx == 0.0 || central.density(x) == 0.0) return 0.0;
        double best = 0.0;
        for (const auto& d : members) best = std::max(best, d.density(x));
        return fx * best;
      };
      cert.x_range = family_x_range(fam, ts, 8.0);
      const auto r = integrate_real_line(h, cert.x_range, uniform_breaks(cert.x_range, kSupPieces), g.quad_abs_tol,
                                         16, kSupDepth);
      cert.envelope_norm = r.value;
      cert.envelope_norm_converged = r.converged && std::isfinite(r.value);
      cert.max_violation = cert.envelope_norm_converged ? 0.0 : std::numeric_limits<double>::infinity();
      cert.issued = cert.envelope_norm_converged;
      cert.reason = cert.issued ? "compact box, smooth maps, integrable supremum" : "supremum of |f_t| not integrable";
      return cert;
    }
    case Route::is_compact_bounded_f: {
      detail::require_box_family(setup, route);
      detail::require_gradient(setup, route);
      if (!setup.f.bounded) {
        cert.reason = "f is not bounded";
        return cert;
      }
      const auto chk = check_sup_density_integrable(fam, g);
      cert.sup_density_integral = chk.integral;
      cert.sup_density_closed_form = chk.closed_form;
      cert.envelope_norm = chk.integral;
      cert.envelope_norm_converged = chk.converged;
      cert.max_violation = chk.holds ? 0.0 : std::numeric_limits<double>::infinity();
      cert.issued = chk.holds;
      cert.reason = chk.holds ? "compact box, bounded f, integrable supremum of densities"
                              : "supremum of densities not shown integrable";
      return cert;
    }
    case Route::finite_T: break;
  }
  return cert;
}

}  // namespace lowenv
