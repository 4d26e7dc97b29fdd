#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lowenv/distributions.hpp"

namespace lowenv {
namespace {

// Independent pseudo-inverse: plain real-valued bisection on the cdf.
double bisect_quantile(const Distribution& d, double u, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (u <= d.cdf(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

BinaryDensitySpec spec(int k, std::vector<std::uint8_t> bits) { return {k, std::move(bits)}; }

TEST(Cdf, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(Distribution::uniform(0, 1).cdf(0.5), 0.5);
  EXPECT_DOUBLE_EQ(Distribution::normal(0, 1).cdf(0.0), 0.5);
  EXPECT_DOUBLE_EQ(make_binary_density(spec(2, {0, 1, 1, 0})).cdf(1.0), 0.5);
  // Phi(-1) to double precision.
  EXPECT_NEAR(Distribution::normal(0, 1).cdf(-1.0), 0.15865525393145705, 1e-16);
  EXPECT_NEAR(Distribution::normal(0, 1).cdf(-8.0), 6.22096057427178e-16, 1e-29);
}

TEST(Cdf, MonotoneWithLimits) {
  const std::vector<Distribution> all = {
      Distribution::uniform(-1, 3), Distribution::normal(2, 0.5),
      make_binary_density(spec(4, {0, 1, 1, 0, 0, 1, 1, 0})),
      Distribution::cdf_table({0, 1, 2, 3}, {0, 0.2, 0.2, 1})};
  for (const auto& d : all) {
    double prev = 0.0;
    for (double x = -50.0; x <= 50.0; x += 0.001) {
      const double v = d.cdf(x);
      ASSERT_GE(v, prev) << d.kind() << " at " << x;
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      prev = v;
    }
    EXPECT_EQ(d.cdf(-1e300), 0.0) << d.kind();
    EXPECT_EQ(d.cdf(1e300), 1.0) << d.kind();
  }
}

TEST(Quantile, Examples) {
  EXPECT_DOUBLE_EQ(Distribution::uniform(0, 1).quantile(0.25), 0.25);
  EXPECT_NEAR(Distribution::normal(0, 1).quantile(0.5), 0.0, 1e-15);
  EXPECT_EQ(make_binary_density(spec(2, {0, 1, 1, 0})).quantile(0.5), 1.0);
  EXPECT_EQ(make_binary_density(spec(2, {0, 1, 1, 0})).quantile(0.25), 0.75);
}

TEST(Quantile, FlatSegmentResolvesToLeftEnd) {
  // F = 0.5 on [0.5, 1.5].
  const auto d = make_binary_density(spec(2, {1, 0, 0, 1}));
  EXPECT_EQ(d.quantile(0.5), 0.5);
  const auto table = Distribution::cdf_table({0, 1, 2, 3}, {0, 0.2, 0.2, 1});
  EXPECT_EQ(table.quantile(0.2), 1.0);
}

TEST(Quantile, RejectsClosedEndpoints) {
  const auto d = Distribution::normal(0, 1);
  EXPECT_THROW((void)d.quantile(0.0), std::domain_error);
  EXPECT_THROW((void)d.quantile(1.0), std::domain_error);
  EXPECT_THROW((void)d.quantile(-0.1), std::domain_error);
}

TEST(Quantile, NormalMatchesIndependentBisection) {
  const auto d = Distribution::normal(1.5, 2.0);
  for (double u : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.99, 1 - 1e-9}) {
    const double ref = bisect_quantile(d, u, -100.0, 100.0);
    EXPECT_NEAR(d.quantile(u), ref, 1e-12 * std::max(1.0, std::abs(ref))) << u;
  }
  // Relative accuracy of the standard normal quantile against tabulated values.
  const auto z = Distribution::normal(0, 1);
  EXPECT_NEAR(z.quantile(0.975), 1.959963984540054, 1e-9 * 1.96);
  EXPECT_NEAR(z.quantile(0.001), -3.090232306167814, 1e-9 * 3.09);
}

TEST(Density, Values) {
  EXPECT_DOUBLE_EQ(Distribution::uniform(0, 2).density(1.0), 0.5);
  EXPECT_NEAR(Distribution::normal(0, 1).density(0.0), 0.398942280401432678, 1e-16);
  EXPECT_EQ(make_binary_density(spec(1, {0, 1})).density(1.2), 1.0);
  EXPECT_EQ(Distribution::uniform(0, 2).density(2.5), 0.0);
  EXPECT_THROW((void)Distribution::cdf_table({0, 1}, {0, 1}).density(0.5), DensityUnavailable);
}

TEST(Density, IntegratesToOne) {
  const std::vector<Distribution> all = {Distribution::uniform(-1, 3), Distribution::normal(2, 0.5),
                                         make_binary_density(spec(4, {0, 1, 1, 0, 0, 1, 1, 0})),
                                         make_binary_density(spec(3, {1, 0, 1, 0, 1, 0}))};
  for (const auto& d : all) {
    // Midpoint rule on a grid aligned with every breakpoint used here.
    const auto r = d.effective_range(12.0);
    const int n = 2'400'000;
    const double h = (r.upper - r.lower) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += d.density(r.lower + (i + 0.5) * h);
    EXPECT_NEAR(acc * h, 1.0, 1e-6) << d.kind();
  }
}

TEST(BinaryDensity, SmallMembers) {
  const auto a = make_binary_density(spec(2, {0, 1, 1, 0}));
  for (double x : {0.6, 0.9, 1.1, 1.4}) EXPECT_EQ(a.density(x), 1.0) << x;
  for (double x : {0.1, 0.4, 1.6, 1.9}) EXPECT_EQ(a.density(x), 0.0) << x;

  const auto b = make_binary_density(spec(4, {0, 1, 1, 0, 0, 1, 1, 0}));
  for (double x : {0.3, 0.7, 1.3, 1.7}) EXPECT_EQ(b.density(x), 1.0) << x;
  for (double x : {0.1, 0.9, 1.1, 1.9}) EXPECT_EQ(b.density(x), 0.0) << x;

  const auto c = make_binary_density(spec(1, {1, 0}));
  EXPECT_EQ(c.density(0.5), 1.0);
  EXPECT_EQ(c.density(1.5), 0.0);
}

TEST(BinaryDensity, RejectsInvalidSpecs) {
  EXPECT_THROW(make_binary_density(spec(2, {1, 1, 1, 0})), std::invalid_argument);
  EXPECT_THROW(make_binary_density(spec(2, {1, 0, 1})), std::invalid_argument);
  EXPECT_THROW(make_binary_density(spec(0, {})), std::invalid_argument);
}

TEST(VanishingBits, Examples) {
  const std::vector<double> s = {0.1, 1.6};
  const auto a = find_vanishing_bits(s, 2);
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->bits, (std::vector<std::uint8_t>{0, 1, 1, 0}));

  const auto empty = find_vanishing_bits(std::vector<double>{}, 1);
  ASSERT_TRUE(empty.has_value());
  EXPECT_EQ(empty->bits, (std::vector<std::uint8_t>{1, 0}));

  // Three occupied cells out of four leave too few free cells for k = 2.
  EXPECT_FALSE(find_vanishing_bits(std::vector<double>{0.1, 0.6, 1.1}, 2).has_value());
}

TEST(VanishingBits, BoundarySampleMarksBothCells) {
  const std::vector<double> s = {1.0};
  const auto a = find_vanishing_bits(s, 2);
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(a->bits[1], 0);
  EXPECT_EQ(a->bits[2], 0);
  EXPECT_EQ(make_binary_density(*a).density(1.0), 0.0);
}

TEST(VanishingBits, PropertyZeroAtEverySample) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 60);
    std::vector<double> s(static_cast<std::size_t>(n));
    for (auto& x : s) x = unif(rng);
    if (trial % 7 == 0) s[0] = static_cast<double>(rng() % 5) / 2.0;  // grid points
    const auto a = find_vanishing_bits(s, n);
    // Interior samples occupy one cell each; a boundary sample occupies two.
    ASSERT_EQ(a.has_value(), count_occupied_cells(s, n) <= n);
    if (trial % 7 != 0) {
      ASSERT_TRUE(a.has_value()) << "n interior samples leave n free cells at k = n";
    }
    if (!a) continue;
    ASSERT_TRUE(a->is_valid());
    const auto d = make_binary_density(*a);
    for (double x : s) ASSERT_EQ(d.density(x), 0.0) << x;
  }
}

// Pseudo-inverse identities, all kinds.
TEST(QuantileLaws, GaloisAndRoundTrips) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<Distribution> all = {
      Distribution::uniform(-2, 5), Distribution::normal(0.3, 1.7),
      make_binary_density(spec(3, {1, 0, 0, 1, 1, 0})),
      Distribution::cdf_table({-1, 0, 0.5, 2}, {0, 0.3, 0.3, 1})};
  for (const auto& d : all) {
    const auto r = d.effective_range(6.0);
    for (int i = 0; i < 2000; ++i) {
      double u = unit(rng);
      if (u == 0.0) continue;
      const double x = r.lower - 1.0 + (r.upper - r.lower + 2.0) * unit(rng);
      const double q = d.quantile(u);
      ASSERT_EQ(u <= d.cdf(x), q <= x) << d.kind() << " u=" << u << " x=" << x;
      ASSERT_GE(d.cdf(q), u) << d.kind();
      const double fx = d.cdf(x);
      if (fx > 0.0 && fx < 1.0) {
        ASSERT_LE(d.quantile(fx), x) << d.kind();
      }
    }
  }
}

TEST(ParamBox, InvariantsAndSupNorm) {
  EXPECT_THROW(ParamBox({1.0}, {0.0}), std::invalid_argument);
  EXPECT_THROW(ParamBox({0.0}, {INFINITY}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(ParamBox({0.0}, {1.0}).sup_norm(), 1.0);
  EXPECT_DOUBLE_EQ(ParamBox({0.0, 0.0}, {1.0, 1.0}).sup_norm(), std::numbers::sqrt2);
  EXPECT_DOUBLE_EQ(ParamBox({-3.0, 0.0}, {1.0, 1.0}, NormKind::sum).sup_norm(), 4.0);
  EXPECT_DOUBLE_EQ(ParamBox({-3.0, 0.0}, {1.0, 1.0}, NormKind::max).sup_norm(), 3.0);
}

TEST(ParamBox, GridIsLexicographic) {
  const ParamBox box({0.0, 5.0}, {1.0, 5.0});
  const auto g = box.grid(3);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_EQ(g[0], (Point{0.0, 5.0}));
  EXPECT_EQ(g[2], (Point{1.0, 5.0}));
  const auto g2 = ParamBox({0.0, 0.0}, {1.0, 1.0}).grid(2);
  ASSERT_EQ(g2.size(), 4u);
  EXPECT_EQ(g2[1], (Point{0.0, 1.0}));
}

TEST(Family, NormalMembersAreValidOnGrid) {
  const auto fam = make_normal_family(ParamBox({-1.0, 0.5}, {1.0, 2.0}));
  for (const auto& t : fam.box.grid(5)) {
    const auto d = fam.dist_at(t);
    EXPECT_NEAR(d.cdf(t[0]), 0.5, 1e-15);
    EXPECT_GT(d.density(t[0]), 0.0);
  }
  EXPECT_THROW(make_normal_family(ParamBox({0.0, 0.0}, {1.0, 1.0})), std::invalid_argument);
}

TEST(Family, BinaryTruncationCounts) {
  const auto fam = make_binary_family_truncation(3);
  EXPECT_EQ(fam.finite_points.size(), 2u + 6u + 20u);
  EXPECT_TRUE(fam.countable_truncation);
}

}  // namespace
}  // namespace lowenv
