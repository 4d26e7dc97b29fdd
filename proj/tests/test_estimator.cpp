#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lowenv/estimator.hpp"

namespace lowenv {
namespace {

TEST(SampleMean, Examples) {
  EXPECT_EQ(sample_mean(std::vector<double>{1, 1, 1}), 1.0);
  EXPECT_EQ(sample_mean(std::vector<double>{0, 1}), 0.5);
  const std::vector<double> tenths(1'000'000, 0.1);
  EXPECT_NEAR(sample_mean(tenths), 0.1, 1e-12);
  EXPECT_THROW(sample_mean(std::vector<double>{}), std::invalid_argument);
}

TEST(Minimize, ConvexQuadratic) {
  const ParamBox box({0.0}, {1.0});
  SolverConfig solver;
  solver.grid_points_per_dim = 11;
  const auto r = minimize_over_box([](std::span<const double> t) { return (t[0] - 0.3) * (t[0] - 0.3); }, box, solver);
  EXPECT_NEAR(r.argmin[0], 0.3, 1e-6);
  EXPECT_LE(r.value, r.grid_value);
}

TEST(Minimize, ConstantObjectivePicksLowerCorner) {
  const ParamBox box({-1.0, 2.0}, {1.0, 3.0});
  const auto r = minimize_over_box([](std::span<const double>) { return 4.0; }, box, SolverConfig{});
  EXPECT_EQ(r.argmin, (Point{-1.0, 2.0}));
  EXPECT_EQ(r.value, 4.0);
}

TEST(Minimize, TiesGoToSmallestT) {
  const ParamBox box({0.0}, {1.0});
  SolverConfig solver;
  solver.grid_points_per_dim = 11;
  const auto r = minimize_over_box(
      [](std::span<const double> t) { return std::min(std::abs(t[0] - 0.2), std::abs(t[0] - 0.8)); }, box, solver);
  EXPECT_NEAR(r.argmin[0], 0.2, 1e-9);
}

TEST(Minimize, NanPointsAreSkippedAndAllNanFails) {
  const ParamBox box({0.0}, {1.0});
  SolverConfig solver;
  solver.refine = false;
  const auto r = minimize_over_box(
      [](std::span<const double> t) { return t[0] < 0.5 ? std::nan("") : t[0]; }, box, solver);
  EXPECT_EQ(r.argmin[0], 0.5);
  EXPECT_GT(r.nan_count, 0u);
  EXPECT_THROW(minimize_over_box([](std::span<const double>) { return std::nan(""); }, box, solver), SolverFailure);
}

TEST(Minimize, ParallelScheduleMatchesSequential) {
  const ParamBox box({0.0, 0.0}, {1.0, 1.0});
  auto obj = [](std::span<const double> t) { return std::sin(7 * t[0]) * std::cos(5 * t[1]); };
  SolverConfig one;
  SolverConfig four;
  four.threads = 4;
  const auto a = minimize_over_box(obj, box, one);
  const auto b = minimize_over_box(obj, box, four);
  EXPECT_EQ(a.argmin, b.argmin);
  EXPECT_EQ(a.value, b.value);
  ASSERT_EQ(a.trace.size(), b.trace.size());
}

TEST(Envelope, SingletonBoxIsClassicalEstimate) {
  const Family fam = make_normal_family(ParamBox({0.5, 2.0}, {0.5, 2.0}));
  const auto f = [](double x) { return x * x; };
  const auto est = lower_envelope_estimate(f, fam, Distribution::normal(0, 1), Backend::inverse_transform, 1000, 3,
                                           SolverConfig{});
  const auto u = draw_uniform_stream(3, 1000);
  KahanSum s;
  for (double v : u) s.add(f(Distribution::normal(0.5, 2.0).quantile(v)));
  EXPECT_EQ(est.value, s.value() / 1000.0);
}

TEST(Envelope, ConstantIntegrandWithUnitWeights) {
  const Family fam = make_finite_family({Distribution::uniform(0, 2), Distribution::uniform(0, 2)});
  const auto est = lower_envelope_estimate([](double) { return 3.5; }, fam, Distribution::uniform(0, 2),
                                           Backend::importance, 500, 11, SolverConfig{});
  EXPECT_EQ(est.value, 3.5);
}

TEST(Envelope, IndicatorOverNormalMeans) {
  const Family fam = make_normal_family(ParamBox({-1.0, 1.0}, {1.0, 1.0}));
  const auto est = lower_envelope_estimate([](double x) { return x > 0.0 ? 1.0 : 0.0; }, fam,
                                           Distribution::normal(0, 1), Backend::inverse_transform, 100'000, 5,
                                           SolverConfig{});
  EXPECT_NEAR(est.value, 0.15865525393145705, 0.01);
  EXPECT_NEAR(est.argmin[0], -1.0, 0.05);
  EXPECT_LE(est.value, est.grid_value);
  for (const auto& p : est.solver_trace) EXPECT_LE(est.value, p.value);
}

TEST(Envelope, BackendsAgreeOnNormalFamily) {
  const Family fam = make_normal_family(ParamBox({-0.5, 0.8}, {0.5, 1.2}));
  const auto f = [](double x) { return x * x; };
  SolverConfig solver;
  solver.grid_points_per_dim = 9;
  const auto a = lower_envelope_estimate(f, fam, Distribution::normal(0, 1), Backend::inverse_transform, 100'000, 21,
                                         solver);
  const auto b = lower_envelope_estimate(f, fam, Distribution::normal(0, 1.5), Backend::importance, 100'000, 22,
                                         solver);
  // Oracle: min of mu^2 + sigma^2 is 0.64 at (0, 0.8).
  const double band = 3.0 * std::hypot(a.stderr_at_argmin, b.stderr_at_argmin);
  EXPECT_NEAR(a.value, b.value, band);
  EXPECT_NEAR(a.value, 0.64, 0.02);
}

TEST(Envelope, UpperIsNegatedLowerOfNegation) {
  const Family fam = make_normal_family(ParamBox({-1.0, 1.0}, {1.0, 1.0}));
  const auto ind = [](double x) { return x > 0.0 ? 1.0 : 0.0; };
  const auto up = upper_envelope_estimate(ind, fam, Distribution::normal(0, 1), Backend::inverse_transform, 20'000, 8,
                                          SolverConfig{});
  EXPECT_NEAR(up.value, 1.0 - 0.15865525393145705, 0.015);
  EXPECT_NEAR(up.argmin[0], 1.0, 0.05);
}

TEST(Naive, SingleDistributionIsSampleMean) {
  const std::vector<Distribution> one{Distribution::normal(0, 1)};
  const auto id = [](double x) { return x; };
  SampleStream stream(derive_seed(4, 0));
  KahanSum s;
  for (int k = 0; k < 50; ++k) s.add(Distribution::normal(0, 1).quantile(stream.next()));
  EXPECT_EQ(naive_lower_envelope(id, one, 50, 4), s.value() / 50.0);
}

TEST(Naive, MinOfTwoMeansMatchesAnalyticBias) {
  const std::vector<Distribution> two(2, Distribution::normal(0, 1));
  const auto id = [](double x) { return x; };
  std::vector<double> reps;
  for (std::uint64_t r = 0; r < 10'000; ++r) reps.push_back(naive_lower_envelope(id, two, 100, derive_seed(99, r)));
  const double oracle = -0.1 / std::sqrt(std::numbers::pi);
  EXPECT_NEAR(sample_mean(reps), oracle, 3.0 * standard_error(reps));
}

}  // namespace
}  // namespace lowenv
