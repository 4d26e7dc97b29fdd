#pragma once

// Lower-envelope estimators
//
//   E_n(f) = inf_{t in T} (1/n) sum_k f_t(X_k)
//
// with one shared sample X_1..X_n for every t, and the naive variant that
// draws an independent sample per distribution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowenv/distributions.hpp"
#include "lowenv/errors.hpp"
#include "lowenv/parallel.hpp"
#include "lowenv/sampling.hpp"

namespace lowenv {

/// Neumaier-compensated running sum.
class KahanSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double sample_mean(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("sample mean of an empty list");
  KahanSum s;
  for (double v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

/// Standard error of the mean, sqrt(s^2 / n) with the unbiased variance.
inline double standard_error(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = sample_mean(values);
  KahanSum ss;
  for (double v : values) ss.add((v - m) * (v - m));
  const auto n = static_cast<double>(values.size());
  return std::sqrt(ss.value() / (n - 1.0) / n);
}

// ---------------------------------------------------------------------------
// Infimum over the parameter box

struct SolverConfig {
  int grid_points_per_dim = 21;
  bool refine = true;
  int refine_iters = 2;
  int threads = 1;

  void validate() const {
    if (grid_points_per_dim < 2) throw std::invalid_argument("grid_points_per_dim must be >= 2");
    if (refine_iters < 0) throw std::invalid_argument("refine_iters must be >= 0");
  }
};

struct TracePoint {
  Point t;
  double value;
};

struct MinimizeResult {
  Point argmin;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<TracePoint> trace;
  std::size_t nan_count = 0;
  double grid_value = std::numeric_limits<double>::quiet_NaN();  // best before refinement
};

namespace detail {

inline bool lexicographically_less(const Point& a, const Point& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Minimum over a trace, NaNs skipped, ties to the lexicographically smallest t.
inline std::size_t best_index(const std::vector<TracePoint>& trace, std::size_t end) {
  std::size_t best = end;
  for (std::size_t i = 0; i < end; ++i) {
    const auto& p = trace[i];
    if (std::isnan(p.value)) continue;
    if (best == end || p.value < trace[best].value ||
        (p.value == trace[best].value && lexicographically_less(p.t, trace[best].t))) {
      best = i;
    }
  }
  return best;
}

}  // namespace detail

/// Dense grid (grid_points_per_dim per non-degenerate axis) followed by
/// optional coordinate-wise golden-section passes around the incumbent.
/// When `finite_points` is non-empty the index set is exactly those points.
template <class Objective>
MinimizeResult minimize_over_box(const Objective& objective, const ParamBox& box, const SolverConfig& solver,
                                 std::span<const Point> finite_points = {}) {
  solver.validate();
  MinimizeResult out;
  std::vector<Point> points =
      finite_points.empty() ? box.grid(solver.grid_points_per_dim)
                            : std::vector<Point>(finite_points.begin(), finite_points.end());
  if (!finite_points.empty()) std::sort(points.begin(), points.end(), detail::lexicographically_less);

  std::vector<double> values(points.size());
  parallel_for_index(points.size(), solver.threads,
                     [&](std::size_t i) { values[i] = objective(std::span<const double>(points[i])); });
  out.trace.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (std::isnan(values[i])) ++out.nan_count;
    out.trace.push_back({std::move(points[i]), values[i]});
  }
  std::size_t best = detail::best_index(out.trace, out.trace.size());
  if (best == out.trace.size()) throw SolverFailure("every objective value on the grid was NaN");
  out.grid_value = out.trace[best].value;

  if (solver.refine && finite_points.empty()) {
    Point incumbent = out.trace[best].t;
    double incumbent_value = out.trace[best].value;
    auto eval = [&](const Point& t) {
      const double v = objective(std::span<const double>(t));
      if (std::isnan(v)) ++out.nan_count;
      out.trace.push_back({t, v});
      return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };
    constexpr double kInvPhi = 0.6180339887498948482;
    for (int pass = 0; pass < solver.refine_iters; ++pass) {
      for (std::size_t d = 0; d < box.dimension(); ++d) {
        if (box.degenerate(d)) continue;
        const double spacing = (box.upper()[d] - box.lower()[d]) / (solver.grid_points_per_dim - 1);
        const double radius = spacing / std::pow(2.0, pass);
        double a = std::max(box.lower()[d], incumbent[d] - radius);
        double b = std::min(box.upper()[d], incumbent[d] + radius);
        const double tol = 1e-10 * (box.upper()[d] - box.lower()[d]);
        Point probe = incumbent;
        probe[d] = b - kInvPhi * (b - a);
        double fc = eval(probe);
        Point probe2 = incumbent;
        probe2[d] = a + kInvPhi * (b - a);
        double fd = eval(probe2);
        double c = probe[d];
        double e = probe2[d];
        for (int it = 0; it < 60 && (b - a) > tol; ++it) {
          if (fc <= fd) {
            b = e;
            e = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            probe = incumbent;
            probe[d] = c;
            fc = eval(probe);
          } else {
            a = c;
            c = e;
            fc = fd;
            e = a + kInvPhi * (b - a);
            probe = incumbent;
            probe[d] = e;
            fd = eval(probe);
          }
        }
        const std::size_t cand = detail::best_index(out.trace, out.trace.size());
        if (out.trace[cand].value < incumbent_value) {
          incumbent = out.trace[cand].t;
          incumbent_value = out.trace[cand].value;
        }
      }
    }
    best = detail::best_index(out.trace, out.trace.size());
  }
  out.argmin = out.trace[best].t;
  out.value = out.trace[best].value;
  return out;
}

// ---------------------------------------------------------------------------
// Shared-sample envelope estimator

struct EnvelopeEstimate {
  double value = 0.0;
  Point argmin;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Backend backend = Backend::importance;
  std::vector<TracePoint> solver_trace;
  double grid_value = 0.0;         // minimum over the grid alone
  double stderr_at_argmin = 0.0;   // standard error of the sample mean at argmin
  WeightDiagnostics diagnostics;   // weights at argmin
};

/// Objective t -> (1/n) sum_k f_t(X_k) over one immutable sample.
template <class F>
class SharedSampleObjective {
 public:
  SharedSampleObjective(const F& f, const Family& family, const Distribution& central, Backend backend,
                        std::vector<double> uniforms)
      : f_(f), family_(family), backend_(backend) {
    if (backend == Backend::inverse_transform) {
      points_ = std::move(uniforms);
      return;
    }
    if (!central.has_density()) throw DensityUnavailable("importance backend needs a central density");
    points_.resize(uniforms.size());
    fx_.resize(uniforms.size());
    central_.reserve(uniforms.size());
    for (std::size_t k = 0; k < uniforms.size(); ++k) {
      points_[k] = central.quantile(uniforms[k]);
      fx_[k] = f(points_[k]);
      central_.push_back(detail::CentralPoint::at(central, points_[k]));
    }
  }

  /// Samples the objective averages over: uniforms (inverse transform) or
  /// central draws (importance).
  std::span<const double> points() const noexcept { return points_; }

  double operator()(std::span<const double> t) const {
    const Distribution member = family_.dist_at(t);
    KahanSum sum;
    if (backend_ == Backend::inverse_transform) {
      for (double u : points_) sum.add(f_(member.quantile(u)));
    } else {
      for (std::size_t k = 0; k < points_.size(); ++k) {
        if (fx_[k] == 0.0) continue;
        sum.add(fx_[k] * detail::weight_with_central(member, central_[k], points_[k], nullptr));
      }
    }
    return sum.value() / static_cast<double>(points_.size());
  }

 private:
  const F& f_;
  const Family& family_;
  Backend backend_;
  std::vector<double> points_;
  std::vector<double> fx_;
  std::vector<detail::CentralPoint> central_;
};

template <class F>
EnvelopeEstimate lower_envelope_estimate(const F& f, const Family& family, const Distribution& central,
                                         Backend backend, std::size_t n, std::uint64_t seed,
                                         const SolverConfig& solver) {
  if (n == 0) throw std::invalid_argument("sample size must be positive");
  if (backend == Backend::importance) {
    const Distribution probe = family.dist_at(family.box.center());
    if (!probe.has_density()) throw DensityUnavailable("importance backend needs member densities");
  }
  const SharedSampleObjective<F> objective(f, family, central, backend, draw_uniform_stream(seed, n));
  MinimizeResult m = minimize_over_box(objective, family.box, solver, family.finite_points);

  EnvelopeEstimate est;
  est.value = m.value;
  est.argmin = m.argmin;
  est.n = n;
  est.seed = seed;
  est.backend = backend;
  est.grid_value = m.grid_value;
  est.solver_trace = std::move(m.trace);
  const WeightedEval at_min = evaluate_f_t(f, family, central, est.argmin, objective.points(), backend);
  est.stderr_at_argmin = standard_error(at_min.values);
  est.diagnostics = at_min.diagnostics;
  return est;
}

/// Upper envelope as -(lower envelope of -f).
template <class F>
EnvelopeEstimate upper_envelope_estimate(const F& f, const Family& family, const Distribution& central,
                                         Backend backend, std::size_t n, std::uint64_t seed,
                                         const SolverConfig& solver) {
  const auto neg = [&f](double x) { return -f(x); };
  EnvelopeEstimate est = lower_envelope_estimate(neg, family, central, backend, n, seed, solver);
  est.value = -est.value;
  est.grid_value = -est.grid_value;
  for (auto& p : est.solver_trace) p.value = -p.value;
  return est;
}

/// Naive estimator: min over a finite family of independent sample means,
/// member i sampled by inverse transform from sub-stream derive_seed(seed, i).
template <class F>
double naive_lower_envelope(const F& f, std::span<const Distribution> family, std::size_t n_per_dist,
                            std::uint64_t seed) {
  if (family.empty()) throw std::invalid_argument("naive estimator needs at least one distribution");
  if (n_per_dist == 0) throw std::invalid_argument("sample size must be positive");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    SampleStream stream(derive_seed(seed, i));
    KahanSum sum;
    for (std::size_t k = 0; k < n_per_dist; ++k) sum.add(f(family[i].quantile(stream.next())));
    best = std::min(best, sum.value() / static_cast<double>(n_per_dist));
  }
  return best;
}

}  // namespace lowenv
