#pragma once

// Desk-scale studies: bias in n, naive-estimator bias in the family size, the
// beam example with its certificates, and the family D counterexample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lowenv/beam.hpp"
#include "lowenv/consistency.hpp"
#include "lowenv/distributions.hpp"
#include "lowenv/estimator.hpp"
#include "lowenv/integrand.hpp"
#include "lowenv/parallel.hpp"
#include "lowenv/quadrature.hpp"
#include "lowenv/sampling.hpp"

namespace lowenv {

/// Seed of replication r at sweep position i.
inline std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t i, std::uint64_t r) {
  return derive_seed(derive_seed(seed, i), r);
}

struct ReplicationRecord {
  std::size_t n = 0;
  std::size_t replication = 0;
  double estimate = 0.0;
  Point argmin;
  std::uint64_t seed = 0;
};

struct SummaryStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  double stddev = 0.0;
};

inline SummaryStats summarize(std::span<const double> v) {
  SummaryStats s;
  s.mean = sample_mean(v);
  s.stderr_ = standard_error(v);
  s.stddev = s.stderr_ * std::sqrt(static_cast<double>(v.size()));
  return s;
}

// ---------------------------------------------------------------------------
// Quadrature oracles

/// E^P(f) by quadrature: against the density when there is one (split at the
/// jumps of f and of the density), else as the integral of f(F^-1(u)) over
/// (0,1).
inline double expectation_oracle(const Integrand& f, const Distribution& d) {
  if (d.has_density()) {
    std::vector<double> breaks = distribution_breakpoints(d);
    breaks.insert(breaks.end(), f.breaks.begin(), f.breaks.end());
    const auto h = [&](double x) {
      const double p = d.density(x);
      return p == 0.0 ? 0.0 : f(x) * p;
    };
    const auto r = integrate_real_line(h, d.effective_range(8.0), breaks, 1e-10);
    if (!r.converged) throw ComputationError("expectation oracle did not converge for " + f.name);
    return r.value;
  }
  return integrate([&](double u) { return f(d.quantile(u)); }, 0.0, 1.0).value;
}

struct EnvelopeOracle {
  double value = 0.0;
  Point argmin;
  int grid_points_per_dim = 0;
};

/// Minimum of the quadrature expectations over the finite index set, or over
/// a box grid five times denser than the solver grid.
inline EnvelopeOracle envelope_oracle(const Integrand& f, const Family& family, int solver_grid_points) {
  EnvelopeOracle o;
  o.grid_points_per_dim = 5 * (solver_grid_points - 1) + 1;
  const std::vector<Point> ts = family.is_finite() ? family.finite_points : family.box.grid(o.grid_points_per_dim);
  o.value = std::numeric_limits<double>::infinity();
  for (const auto& t : ts) {
    const double v = expectation_oracle(f, family.dist_at(t));
    if (v < o.value) {
      o.value = v;
      o.argmin = t;
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// Bias of the shared-sample estimator as n grows

struct EnvelopeSetup {
  Integrand f;
  Family family;
  Distribution central = Distribution::uniform(0.0, 1.0);
  Backend backend = Backend::inverse_transform;
  SolverConfig solver;
};

struct BiasSweepResult {
  std::vector<std::size_t> n_grid;
  std::vector<double> replication_means;
  std::vector<double> stderrs;
  double oracle_envelope = 0.0;
  bool below_oracle_ok = false;
  bool non_decreasing_ok = false;
  bool monotone_ok = false;
  std::vector<ReplicationRecord> records;
};

/// `replications` independent estimates per n. monotone_ok holds when every
/// mean is at most oracle + 3 stderr and each mean is at least the previous
/// one minus 3 combined stderr.
inline BiasSweepResult bias_sweep(const EnvelopeSetup& setup, std::span<const std::size_t> n_grid,
                                  std::size_t replications, double oracle, std::uint64_t seed, int threads = 1) {
  if (replications < 2) throw std::invalid_argument("bias sweep needs at least two replications");
  BiasSweepResult out;
  out.n_grid.assign(n_grid.begin(), n_grid.end());
  out.oracle_envelope = oracle;
  SolverConfig solver = setup.solver;
  solver.threads = 1;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    std::vector<ReplicationRecord> recs(replications);
    parallel_for_index(replications, threads, [&](std::size_t r) {
      const std::uint64_t s = replication_seed(seed, i, r);
      const auto est = lower_envelope_estimate(setup.f, setup.family, setup.central, setup.backend, n_grid[i], s,
                                               solver);
      recs[r] = {n_grid[i], r, est.value, est.argmin, s};
    });
    std::vector<double> values;
    for (const auto& rec : recs) values.push_back(rec.estimate);
    const auto st = summarize(values);
    out.replication_means.push_back(st.mean);
    out.stderrs.push_back(st.stderr_);
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  out.below_oracle_ok = true;
  out.non_decreasing_ok = true;
  for (std::size_t i = 0; i < out.n_grid.size(); ++i) {
    if (out.replication_means[i] > oracle + 3.0 * out.stderrs[i]) out.below_oracle_ok = false;
    if (i > 0) {
      const double band = 3.0 * std::hypot(out.stderrs[i], out.stderrs[i - 1]);
      if (out.replication_means[i] < out.replication_means[i - 1] - band) out.non_decreasing_ok = false;
    }
  }
  out.monotone_ok = out.below_oracle_ok && out.non_decreasing_ok;
  return out;
}

// ---------------------------------------------------------------------------
// Naive estimator over m identical members

struct NaiveSweepResult {
  std::vector<std::size_t> m_grid;
  std::size_t n = 0;
  std::vector<double> replication_means;
  std::vector<double> stderrs;
  bool non_increasing = false;
  std::vector<ReplicationRecord> records;  // `n` field carries m
};

/// Replication r uses the same seed for every m, so the m-member minimum
/// extends the smaller family's minimum with fresh members.
inline NaiveSweepResult naive_sweep(const Integrand& f, const Distribution& dist, std::span<const std::size_t> m_grid,
                                    std::size_t n, std::size_t replications, std::uint64_t seed, int threads = 1) {
  NaiveSweepResult out;
  out.m_grid.assign(m_grid.begin(), m_grid.end());
  out.n = n;
  for (std::size_t i = 0; i < m_grid.size(); ++i) {
    const std::vector<Distribution> members(m_grid[i], dist);
    std::vector<ReplicationRecord> recs(replications);
    parallel_for_index(replications, threads, [&](std::size_t r) {
      const std::uint64_t s = derive_seed(seed, r);
      recs[r] = {m_grid[i], r, naive_lower_envelope(f, members, n, s), {}, s};
    });
    std::vector<double> values;
    for (const auto& rec : recs) values.push_back(rec.estimate);
    const auto st = summarize(values);
    out.replication_means.push_back(st.mean);
    out.stderrs.push_back(st.stderr_);
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  out.non_increasing = true;
  for (std::size_t i = 1; i < out.replication_means.size(); ++i) {
    if (out.replication_means[i] > out.replication_means[i - 1]) out.non_increasing = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Beam example

namespace beam {

/// Failure probability P_(mu,sigma)(g(X) <= 0) by quadrature of the density
/// over the failure set.
inline double failure_probability_quadrature(const BeamParams& p, double mu, double sigma) {
  const Distribution d = Distribution::normal(mu, sigma);
  const double lo = mu - 40.0 * sigma;
  const double hi = mu + 40.0 * sigma;
  std::vector<double> cuts = limit_state_roots(p, lo, hi);
  cuts.insert(cuts.begin(), lo);
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
    if (beam_limit_state(mid, p) > 0.0) continue;
    total += integrate([&d](double x) { return d.density(x); }, cuts[i], cuts[i + 1], {}, 1e-13).value;
  }
  return std::clamp(total, 0.0, 1.0);
}

struct BeamOracle {
  double upper_failure = 0.0;
  double lower_survival = 1.0;
  Point argmax;
  int grid_points_per_dim = 0;
};

/// Max over a (mu, sigma) grid of the quadrature failure probability.
inline BeamOracle failure_oracle(const BeamParams& p, int grid_points_per_dim = 101) {
  BeamOracle o;
  o.grid_points_per_dim = grid_points_per_dim;
  o.upper_failure = -1.0;
  for (const auto& t : p.box().grid(grid_points_per_dim)) {
    const double v = failure_probability_quadrature(p, t[0], t[1]);
    if (v > o.upper_failure) {
      o.upper_failure = v;
      o.argmax = t;
    }
  }
  o.lower_survival = 1.0 - o.upper_failure;
  return o;
}

struct BeamRun {
  double upper_failure_prob = 0.0;
  EnvelopeEstimate estimate;
  std::vector<ConsistencyCertificate> certificates;
};

inline EnvelopeMap route_envelope(const BeamParams& p, Route r) {
  switch (r) {
    case Route::lipschitz_box:
    case Route::gradient_box: return [p](double x) { return envelope_weighted_gradient(x, p); };
    case Route::is_lipschitz_density:
    case Route::is_gradient_density: return [p](double x) { return envelope_density_gradient(x, p); };
    default: return nullptr;
  }
}

inline std::vector<ConsistencyCertificate> certify_beam(const BeamParams& p, std::span<const Route> routes,
                                                        const GridSpec& grid, int threads = 1) {
  const Family fam = beam_family(p);
  std::vector<ConsistencyCertificate> out;
  for (Route r : routes) {
    CertifySetup s;
    s.family = &fam;
    s.f = survival_indicator(p);
    s.central = p.central();
    s.backend = Backend::importance;
    s.envelope = route_envelope(p, r);
    s.grid = grid;
    s.threads = threads;
    out.push_back(certify(s, r));
  }
  return out;
}

/// Importance-sampling lower envelope of 1{g > 0}; the upper failure
/// probability is one minus it.
inline BeamRun run_beam_example(const BeamParams& p, std::size_t n, std::uint64_t seed, const SolverConfig& solver,
                                std::span<const Route> routes = {}, const GridSpec& grid = {}) {
  const Family fam = beam_family(p);
  BeamRun run;
  run.estimate = lower_envelope_estimate(survival_indicator(p), fam, p.central(), Backend::importance, n, seed, solver);
  run.upper_failure_prob = std::clamp(1.0 - run.estimate.value, 0.0, 1.0);
  if (!routes.empty()) run.certificates = certify_beam(p, routes, grid, solver.threads);
  return run;
}

struct ConvergenceRow {
  std::size_t n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  double spread = 0.0;  // replication standard deviation
  double abs_error = 0.0;
};

struct BeamConvergence {
  BeamOracle oracle;
  std::vector<ConvergenceRow> rows;
  bool halves_per_decade = false;
  bool final_within_tol = false;
  std::vector<ReplicationRecord> records;  // estimates of the upper failure probability
};

/// Upper failure probability at each n over `replications` seeds, against
/// the fine-grid quadrature oracle.
inline BeamConvergence beam_convergence(const BeamParams& p, std::span<const std::size_t> n_grid,
                                        std::size_t replications, std::uint64_t seed, const SolverConfig& solver,
                                        const BeamOracle& oracle, double final_tol = 0.01, int threads = 1) {
  BeamConvergence out;
  out.oracle = oracle;
  SolverConfig inner = solver;
  inner.threads = 1;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    std::vector<ReplicationRecord> recs(replications);
    parallel_for_index(replications, threads, [&](std::size_t r) {
      const std::uint64_t s = replication_seed(seed, i, r);
      const auto run = run_beam_example(p, n_grid[i], s, inner);
      recs[r] = {n_grid[i], r, run.upper_failure_prob, run.estimate.argmin, s};
    });
    std::vector<double> v;
    for (const auto& rec : recs) v.push_back(rec.estimate);
    const auto st = summarize(v);
    out.rows.push_back({n_grid[i], st.mean, st.stderr_, st.stddev, std::abs(st.mean - oracle.upper_failure)});
    out.records.insert(out.records.end(), recs.begin(), recs.end());
  }
  out.halves_per_decade = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    const double decades = std::log10(static_cast<double>(out.rows[i].n) / static_cast<double>(out.rows[i - 1].n));
    if (out.rows[i].abs_error > out.rows[i - 1].abs_error * std::pow(0.5, decades)) out.halves_per_decade = false;
  }
  out.final_within_tol = !out.rows.empty() && out.rows.back().abs_error <= final_tol;
  return out;
}

}  // namespace beam

// ---------------------------------------------------------------------------
// Family D: a density vanishing on every sample

struct NoConsistencyRow {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  int k = 0;
  int occupied_cells = 0;
  BinaryDensitySpec spec;
  double objective = 0.0;
};

struct NoConsistencyResult {
  std::vector<NoConsistencyRow> rows;
  bool all_zero = false;
  double envelope_lower_bound = 0.0;  // inf of f over [0,2]: every member of D has E(f) at least this
};

/// For each n: n draws from uniform(0,2), a member of D vanishing on all of
/// them (level k = n, raised only if boundary samples exhaust the free
/// cells), and the importance objective at that member, which must be 0.
inline NoConsistencyResult run_no_consistency_example(const Integrand& f, std::span<const std::size_t> n_list,
                                                      std::uint64_t seed) {
  NoConsistencyResult out;
  double inf_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10000; ++i) {
    const double v = f(2.0 * i / 10000.0);
    if (!(v > 1.0)) throw std::invalid_argument("the counterexample needs f > 1 on [0,2]");
    inf_f = std::min(inf_f, v);
  }
  out.envelope_lower_bound = inf_f;
  const Distribution central = Distribution::uniform(0.0, 2.0);
  out.all_zero = true;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::size_t n = n_list[i];
    const std::uint64_t s = derive_seed(seed, i);
    const auto samples = inverse_transform_sample(central, draw_uniform_stream(s, n));
    int k = static_cast<int>(std::max<std::size_t>(n, 1));
    std::optional<BinaryDensitySpec> spec = find_vanishing_bits(samples, k);
    while (!spec) spec = find_vanishing_bits(samples, ++k);
    const Distribution member = make_binary_density(*spec);
    KahanSum sum;
    for (double x : samples) {
      const double fx = f(x);
      sum.add(fx == 0.0 ? 0.0 : fx * importance_weight(member, central, x));
    }
    const double objective = sum.value() / static_cast<double>(n);
    if (objective != 0.0) throw ComputationError("vanishing density has a non-zero objective");
    out.rows.push_back({n, s, k, count_occupied_cells(samples, k), *spec, objective});
  }
  return out;
}

struct FiniteSubfamilyCheck {
  std::vector<BinaryDensitySpec> members;
  EnvelopeEstimate estimate;
  double exact_min = 0.0;
  bool within_band = false;
};

/// The fixed 5-member slice of D used for the finite-index contrast.
inline std::vector<BinaryDensitySpec> default_binary_subfamily() {
  return {{1, {1, 0}}, {1, {0, 1}}, {2, {0, 1, 1, 0}}, {3, {1, 0, 1, 0, 1, 0}}, {4, {0, 1, 1, 0, 0, 1, 1, 0}}};
}

/// Importance estimate over a finite slice of D against the exact minimum of
/// E(f) over the slice (quadrature on each member's cells).
inline FiniteSubfamilyCheck finite_subfamily_check(const Integrand& f, std::vector<BinaryDensitySpec> members,
                                                   std::size_t n, std::uint64_t seed) {
  FiniteSubfamilyCheck out;
  std::vector<Distribution> dists;
  out.exact_min = std::numeric_limits<double>::infinity();
  for (const auto& m : members) {
    dists.push_back(make_binary_density(m));
    const Distribution& d = dists.back();
    const auto q = integrate([&](double x) { return f(x) * d.density(x); }, 0.0, 2.0, distribution_breakpoints(d));
    out.exact_min = std::min(out.exact_min, q.value);
  }
  out.members = std::move(members);
  const Family fam = make_finite_family(std::move(dists), "binary_D_slice");
  out.estimate =
      lower_envelope_estimate(f, fam, Distribution::uniform(0.0, 2.0), Backend::importance, n, seed, SolverConfig{});
  out.within_band = std::abs(out.estimate.value - out.exact_min) <= 3.0 * out.estimate.stderr_at_argmin;
  return out;
}

}  // namespace lowenv
