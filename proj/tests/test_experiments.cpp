#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "lowenv/experiments.hpp"

namespace lowenv {
namespace {

TEST(Oracle, IndicatorOverNormalMeans) {
  const Family fam = make_normal_family(ParamBox({-1.0, 1.0}, {1.0, 1.0}));
  const auto o = envelope_oracle(positive_indicator(), fam, 21);
  EXPECT_NEAR(o.value, 0.15865525393145705, 1e-10);
  EXPECT_EQ(o.argmin[0], -1.0);
}

TEST(Oracle, BinaryMemberAndCdfOnlyLaw) {
  const Distribution d = make_binary_density({2, {0, 1, 1, 0}});
  EXPECT_NEAR(expectation_oracle(identity_integrand(), d), 1.0, 1e-12);
  const Distribution t = Distribution::cdf_table({0.0, 1.0, 3.0}, {0.0, 0.5, 1.0});
  // Mean of the piecewise-linear cdf: 0.5 * 0.5 + 0.5 * 2.
  EXPECT_NEAR(expectation_oracle(identity_integrand(), t), 1.25, 1e-9);
}

TEST(BeamOracle, QuadratureMatchesClosedForm) {
  const beam::BeamParams p;
  const auto roots = beam::limit_state_roots(p, -100.0, 1000.0);
  ASSERT_EQ(roots.size(), 1u);
  for (double mu : {43.2, 48.0, 52.8}) {
    for (double sigma : {4.32, 6.0, 8.64}) {
      const double exact = standard_normal_cdf((roots[0] - mu) / sigma);
      EXPECT_NEAR(beam::failure_probability_quadrature(p, mu, sigma), exact, 1e-10);
    }
  }
}

TEST(BeamOracle, DefaultFailureInDeskRange) {
  const auto o = beam::failure_oracle(beam::BeamParams{}, 21);
  EXPECT_GE(o.upper_failure, 0.01);
  EXPECT_LE(o.upper_failure, 0.2);
}

TEST(BeamOracle, MonotoneInYieldMoment) {
  double prev = -1.0;
  for (double m : {0.08, 0.073, 0.066}) {
    beam::BeamParams p;
    p.M_yield = m;
    const double v = beam::failure_oracle(p, 11).upper_failure;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(BeamRun, SingletonBoxIsClassicalMonteCarlo) {
  beam::BeamParams p;
  p.mu_lower = p.mu_upper = p.mu_central;
  p.sigma_lower = p.sigma_upper = p.sigma_central;
  const auto run = beam::run_beam_example(p, 20'000, 9, SolverConfig{});
  const auto u = draw_uniform_stream(9, 20'000);
  const Distribution c = p.central();
  std::vector<double> fails;
  for (double v : u) fails.push_back(beam::beam_limit_state(c.quantile(v), p) > 0.0 ? 0.0 : 1.0);
  EXPECT_NEAR(run.upper_failure_prob, sample_mean(fails), 1e-12);
  const double oracle = beam::failure_probability_quadrature(p, p.mu_central, p.sigma_central);
  EXPECT_NEAR(run.upper_failure_prob, oracle, 3.0 * standard_error(fails));
}

TEST(BeamRun, NoFailureWhenYieldIsHuge) {
  beam::BeamParams p;
  p.M_yield = 1e6;
  EXPECT_EQ(beam::failure_oracle(p, 11).upper_failure, 0.0);
  // With f = 1 the importance objective is the mean weight, which is not
  // exactly one; the estimate is one minus the envelope of the constant.
  SolverConfig solver;
  solver.grid_points_per_dim = 5;
  const auto run = beam::run_beam_example(p, 2000, 4, solver);
  const auto ones = lower_envelope_estimate(constant_integrand(1.0), beam::beam_family(p), p.central(),
                                            Backend::importance, 2000, 4, solver);
  EXPECT_EQ(run.upper_failure_prob, std::clamp(1.0 - ones.value, 0.0, 1.0));
  EXPECT_LT(run.upper_failure_prob, 0.05);
}

TEST(BeamRun, MonteCarloMonotoneInYieldMoment) {
  double prev = -1.0;
  for (double m : {0.08, 0.073, 0.066}) {
    beam::BeamParams p;
    p.M_yield = m;
    const auto run = beam::run_beam_example(p, 20'000, 17, SolverConfig{});
    EXPECT_GE(run.upper_failure_prob, prev);
    EXPECT_GE(run.upper_failure_prob, 0.0);
    EXPECT_LE(run.upper_failure_prob, 1.0);
    prev = run.upper_failure_prob;
  }
}

TEST(BeamRun, CertificatesAttached) {
  const Route routes[] = {Route::gradient_box, Route::is_gradient_density, Route::is_compact_bounded_f};
  const auto run = beam::run_beam_example(beam::BeamParams{}, 1000, 2, SolverConfig{}, routes);
  ASSERT_EQ(run.certificates.size(), 3u);
  for (const auto& c : run.certificates) EXPECT_TRUE(c.issued) << to_string(c.route) << ": " << c.reason;
}

TEST(BiasSweep, SingletonIsUnbiased) {
  EnvelopeSetup s{identity_integrand(), make_normal_family(ParamBox({0.5, 1.0}, {0.5, 1.0})),
                  Distribution::normal(0, 1), Backend::inverse_transform, SolverConfig{}};
  const std::vector<std::size_t> ns{1, 4, 16};
  const auto r = bias_sweep(s, ns, 400, 0.5, 3);
  for (std::size_t i = 0; i < ns.size(); ++i) EXPECT_NEAR(r.replication_means[i], 0.5, 3.0 * r.stderrs[i]);
  EXPECT_TRUE(r.monotone_ok);
  EXPECT_EQ(r.records.size(), 3u * 400u);
}

TEST(BiasSweep, ScheduleIndependent) {
  EnvelopeSetup s{positive_indicator(), make_normal_family(ParamBox({-1.0, 1.0}, {1.0, 1.0})),
                  Distribution::normal(0, 1), Backend::inverse_transform, SolverConfig{}};
  const std::vector<std::size_t> ns{2, 8};
  const auto a = bias_sweep(s, ns, 30, 0.15865525393145705, 5, 1);
  const auto b = bias_sweep(s, ns, 30, 0.15865525393145705, 5, 3);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].estimate, b.records[i].estimate);
    EXPECT_EQ(a.records[i].seed, b.records[i].seed);
  }
}

TEST(NaiveSweep, MeansNonIncreasingInFamilySize) {
  const std::vector<std::size_t> ms{1, 2, 4, 8};
  const auto r = naive_sweep(identity_integrand(), Distribution::normal(0, 1), ms, 50, 500, 8);
  EXPECT_TRUE(r.non_increasing);
  EXPECT_LT(r.replication_means.back(), r.replication_means.front());
}

TEST(NoConsistency, ObjectivesVanish) {
  const std::vector<std::size_t> ns{1, 10, 100, 1000};
  const auto r = run_no_consistency_example(constant_integrand(2.0), ns, 12);
  EXPECT_TRUE(r.all_zero);
  EXPECT_GE(r.envelope_lower_bound, 2.0);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.objective, 0.0);
    EXPECT_TRUE(row.spec.is_valid());
    EXPECT_LE(row.occupied_cells, static_cast<int>(row.n));
  }
}

TEST(NoConsistency, RejectsIntegrandNotAboveOne) {
  const std::vector<std::size_t> ns{1};
  EXPECT_THROW(run_no_consistency_example(constant_integrand(1.0), ns, 1), std::invalid_argument);
}

TEST(NoConsistency, FiniteSliceIsConsistent) {
  const auto r = finite_subfamily_check(constant_integrand(2.0), default_binary_subfamily(), 10'000, 6);
  EXPECT_NEAR(r.exact_min, 2.0, 1e-12);
  EXPECT_TRUE(r.within_band) << r.estimate.value << " +- " << r.estimate.stderr_at_argmin;
}

}  // namespace
}  // namespace lowenv
