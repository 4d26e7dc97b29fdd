#pragma once

// One-dimensional laws, parameter boxes and parametrised families.
//
// Every distribution exposes a cdf and its pseudo-inverse
//   F^-1(u) = inf { y : u <= F(y) },  u in (0,1).
// Quantiles are resolved to the exact pseudo-inverse of the floating-point
// cdf: a closed-form guess (or the support midpoint) is refined by bisection
// over the ordered set of representable doubles. For any cdf that is monotone
// in floating point this makes u <= F(x) <=> F^-1(u) <= x hold bit-exactly,
// and flat cdf segments resolve to their left endpoint.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "lowenv/errors.hpp"

namespace lowenv {

using Point = std::vector<double>;

struct Interval {
  double lower;
  double upper;
};

namespace detail {

// Monotone bijection between doubles (without NaN) and int64; -0.0 and +0.0
// share the code 0.
inline std::int64_t ordered_code(double x) noexcept {
  const auto bits = std::bit_cast<std::int64_t>(x);
  return bits < 0 ? -(bits & std::numeric_limits<std::int64_t>::max()) : bits;
}

inline double from_ordered_code(std::int64_t code) noexcept {
  if (code < 0) {
    const auto bits = static_cast<std::uint64_t>(-code) | (std::uint64_t{1} << 63);
    return std::bit_cast<double>(bits);
  }
  return std::bit_cast<double>(code);
}

inline std::int64_t midpoint_code(std::int64_t lo, std::int64_t hi) noexcept {
  const auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  return lo + static_cast<std::int64_t>(span / 2);
}

// Smallest double y with u <= cdf(y). Requires cdf monotone, cdf(-max) < u and
// u <= cdf(+max). `guess` only affects the cost.
template <class Cdf>
double pseudo_inverse(const Cdf& cdf, double u, double guess) {
  constexpr double kMax = std::numeric_limits<double>::max();
  const std::int64_t floor_code = ordered_code(-kMax);
  const std::int64_t ceil_code = ordered_code(kMax);
  if (!std::isfinite(guess)) guess = 0.0;

  std::int64_t lo;
  std::int64_t hi;
  const std::int64_t g = ordered_code(guess);
  if (u <= cdf(guess)) {
    hi = g;
    std::uint64_t step = 1;
    for (;;) {
      const std::int64_t cand =
          (static_cast<std::uint64_t>(hi - floor_code) <= step) ? floor_code
                                                                 : hi - static_cast<std::int64_t>(step);
      if (cand == floor_code || cdf(from_ordered_code(cand)) < u) {
        lo = cand;
        break;
      }
      hi = cand;
      step *= 2;
    }
  } else {
    lo = g;
    std::uint64_t step = 1;
    for (;;) {
      const std::int64_t cand =
          (static_cast<std::uint64_t>(ceil_code - lo) <= step) ? ceil_code
                                                                : lo + static_cast<std::int64_t>(step);
      if (cand == ceil_code || u <= cdf(from_ordered_code(cand))) {
        hi = cand;
        break;
      }
      lo = cand;
      step *= 2;
    }
  }
  while (static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) > 1) {
    const std::int64_t mid = midpoint_code(lo, hi);
    if (u <= cdf(from_ordered_code(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return from_ordered_code(hi);
}

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;  // 1/sqrt(2 pi)
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;  // log sqrt(2 pi)

}  // namespace detail

/// Standard normal cdf via the complementary error function (glibc erfc,
/// < 1 ulp), accurate to double precision in both tails.
inline double standard_normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

struct UniformLaw {
  double a;
  double b;
};

struct NormalLaw {
  double mu;
  double sigma;
  double log_sigma;
};

/// Balanced bit sequence a in Bi: length 2k with exactly k ones.
struct BinaryDensitySpec {
  int k = 0;
  std::vector<std::uint8_t> bits;

  bool is_valid() const {
    if (k <= 0 || bits.size() != static_cast<std::size_t>(2 * k)) return false;
    int ones = 0;
    for (auto b : bits) {
      if (b > 1) return false;
      ones += b;
    }
    return ones == k;
  }

  friend bool operator==(const BinaryDensitySpec&, const BinaryDensitySpec&) = default;
};

/// Density sum_l a_l 1[(l-1)/k, l/k] on [0,2] for a balanced bit sequence.
struct BinaryLaw {
  BinaryDensitySpec spec;
  std::vector<int> ones_before;  // ones_before[j] = number of ones in cells < j
};

/// Piecewise-linear cdf through (x_i, F_i); cdf-only (no density).
struct CdfTableLaw {
  std::vector<double> x;
  std::vector<double> cdf;
};

namespace detail {

// Cell coordinate shared by every binary-density computation so that the
// density and the cell-marking search agree bit-for-bit.
inline double binary_cell_coordinate(double x, int k) noexcept { return x * static_cast<double>(k); }

}  // namespace detail

class Distribution {
 public:
  using Law = std::variant<UniformLaw, NormalLaw, BinaryLaw, CdfTableLaw>;

  static Distribution uniform(double a, double b) {
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) {
      throw std::invalid_argument("uniform requires finite a < b");
    }
    return Distribution(UniformLaw{a, b});
  }

  static Distribution normal(double mu, double sigma) {
    if (!(std::isfinite(mu) && std::isfinite(sigma) && sigma > 0.0)) {
      throw std::invalid_argument("normal requires finite mu and sigma > 0");
    }
    return Distribution(NormalLaw{mu, sigma, std::log(sigma)});
  }

  static Distribution binary(const BinaryDensitySpec& spec) {
    if (!spec.is_valid()) {
      throw std::invalid_argument("binary density needs 2k bits with exactly k ones");
    }
    BinaryLaw law{spec, std::vector<int>(spec.bits.size() + 1, 0)};
    for (std::size_t j = 0; j < spec.bits.size(); ++j) {
      law.ones_before[j + 1] = law.ones_before[j] + spec.bits[j];
    }
    return Distribution(std::move(law));
  }

  static Distribution cdf_table(std::vector<double> x, std::vector<double> cdf) {
    if (x.size() < 2 || x.size() != cdf.size()) {
      throw std::invalid_argument("cdf table needs at least two (x, F) pairs of equal length");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(cdf[i])) {
        throw std::invalid_argument("cdf table entries must be finite");
      }
      if (i > 0 && !(x[i] > x[i - 1])) throw std::invalid_argument("cdf table x must be strictly increasing");
      if (i > 0 && cdf[i] < cdf[i - 1]) throw std::invalid_argument("cdf table F must be non-decreasing");
    }
    if (cdf.front() != 0.0 || cdf.back() != 1.0) {
      throw std::invalid_argument("cdf table must start at F=0 and end at F=1");
    }
    return Distribution(CdfTableLaw{std::move(x), std::move(cdf)});
  }

  const Law& law() const noexcept { return law_; }

  std::string kind() const {
    return std::visit(
        [](const auto& l) -> std::string {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, UniformLaw>) return "uniform";
          else if constexpr (std::is_same_v<L, NormalLaw>) return "normal";
          else if constexpr (std::is_same_v<L, BinaryLaw>) return "binary";
          else return "cdf_table";
        },
        law_);
  }

  bool has_density() const noexcept { return !std::holds_alternative<CdfTableLaw>(law_); }
  bool is_normal() const noexcept { return std::holds_alternative<NormalLaw>(law_); }
  const NormalLaw* as_normal() const noexcept { return std::get_if<NormalLaw>(&law_); }

  /// Smallest closed interval carrying all the mass (infinite for normal).
  Interval support() const {
    return std::visit(
        [](const auto& l) -> Interval {
          using L = std::decay_t<decltype(l)>;
          constexpr double inf = std::numeric_limits<double>::infinity();
          if constexpr (std::is_same_v<L, UniformLaw>) return {l.a, l.b};
          else if constexpr (std::is_same_v<L, NormalLaw>) return {-inf, inf};
          else if constexpr (std::is_same_v<L, BinaryLaw>) return {0.0, 2.0};
          else return {l.x.front(), l.x.back()};
        },
        law_);
  }

  /// Finite interval holding essentially all mass: support for bounded laws,
  /// mu +- width*sigma for the normal.
  Interval effective_range(double width = 8.0) const {
    if (const auto* n = as_normal()) return {n->mu - width * n->sigma, n->mu + width * n->sigma};
    return support();
  }

  double cdf(double x) const {
    return std::visit([x](const auto& l) { return cdf_of(l, x); }, law_);
  }

  /// Pseudo-inverse F^-1(u) for u in the open unit interval.
  double quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) {
      throw std::domain_error("quantile argument must lie in the open interval (0,1)");
    }
    const double guess = std::visit([u](const auto& l) { return quantile_guess(l, u); }, law_);
    return detail::pseudo_inverse([this](double y) { return cdf(y); }, u, guess);
  }

  double density(double x) const {
    return std::visit(
        [x](const auto& l) -> double {
          using L = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<L, CdfTableLaw>) {
            throw DensityUnavailable("cdf_table distribution has no density");
          } else {
            return density_of(l, x);
          }
        },
        law_);
  }

  /// log p(x); -inf outside the support.
  double log_density(double x) const {
    if (const auto* n = as_normal()) {
      const double z = (x - n->mu) / n->sigma;
      return -0.5 * z * z - n->log_sigma - detail::kLogSqrt2Pi;
    }
    return std::log(density(x));
  }

 private:
  explicit Distribution(Law law) : law_(std::move(law)) {}

  static double cdf_of(const UniformLaw& l, double x) {
    if (x <= l.a) return 0.0;
    if (x >= l.b) return 1.0;
    return std::min((x - l.a) / (l.b - l.a), 1.0);
  }
  static double cdf_of(const NormalLaw& l, double x) { return standard_normal_cdf((x - l.mu) / l.sigma); }
  static double cdf_of(const BinaryLaw& l, double x) {
    if (!(x > 0.0)) return 0.0;
    if (x >= 2.0) return 1.0;
    const int k = l.spec.k;
    const double y = detail::binary_cell_coordinate(x, k);
    const auto j = std::min(static_cast<int>(std::floor(y)), 2 * k - 1);
    const double frac = y - static_cast<double>(j);
    return (static_cast<double>(l.ones_before[j]) + static_cast<double>(l.spec.bits[j]) * frac) /
           static_cast<double>(k);
  }
  static double cdf_of(const CdfTableLaw& l, double x) {
    if (x <= l.x.front()) return 0.0;
    if (x >= l.x.back()) return 1.0;
    const auto it = std::upper_bound(l.x.begin(), l.x.end(), x);
    const auto i = static_cast<std::size_t>(it - l.x.begin()) - 1;
    const double w = (x - l.x[i]) / (l.x[i + 1] - l.x[i]);
    const double v = l.cdf[i] + (l.cdf[i + 1] - l.cdf[i]) * w;
    return std::clamp(v, l.cdf[i], l.cdf[i + 1]);
  }

  static double quantile_guess(const UniformLaw& l, double u) { return l.a + u * (l.b - l.a); }
  static double quantile_guess(const NormalLaw& l, double u) {
    // Boost.Math erfc_inv: Phi^-1(u) = -sqrt(2) erfc^-1(2u).
    return l.mu - l.sigma * std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
  }
  static double quantile_guess(const BinaryLaw&, double) { return 1.0; }
  static double quantile_guess(const CdfTableLaw& l, double) { return 0.5 * (l.x.front() + l.x.back()); }

  static double density_of(const UniformLaw& l, double x) {
    return (x >= l.a && x <= l.b) ? 1.0 / (l.b - l.a) : 0.0;
  }
  static double density_of(const NormalLaw& l, double x) {
    const double z = (x - l.mu) / l.sigma;
    return detail::kInvSqrt2Pi / l.sigma * std::exp(-0.5 * z * z);
  }
  static double density_of(const BinaryLaw& l, double x) {
    if (x < 0.0 || x > 2.0) return 0.0;
    const int k = l.spec.k;
    const double y = detail::binary_cell_coordinate(x, k);
    const auto j = static_cast<int>(std::floor(y));
    if (j >= 2 * k) return l.spec.bits[2 * k - 1];
    // Closed cells: a boundary point belongs to both neighbours.
    double v = l.spec.bits[j];
    if (y == static_cast<double>(j) && j > 0) v = std::max<double>(v, l.spec.bits[j - 1]);
    return v;
  }

  Law law_;
};

/// Gradient of the normal density with respect to (mu, sigma):
/// p(x) * (z/sigma, (z^2-1)/sigma), z = (x-mu)/sigma.
inline std::pair<double, double> normal_density_gradient(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  const double p = detail::kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
  return {p * z / sigma, p * (z * z - 1.0) / sigma};
}

// ---------------------------------------------------------------------------
// Parameter boxes

enum class NormKind { euclidean, max, sum };

inline std::string to_string(NormKind n) {
  switch (n) {
    case NormKind::euclidean: return "euclidean";
    case NormKind::max: return "max";
    case NormKind::sum: return "sum";
  }
  return "euclidean";
}

inline double vector_norm(std::span<const double> v, NormKind kind) {
  double acc = 0.0;
  for (double x : v) {
    switch (kind) {
      case NormKind::euclidean: acc += x * x; break;
      case NormKind::max: acc = std::max(acc, std::abs(x)); break;
      case NormKind::sum: acc += std::abs(x); break;
    }
  }
  return kind == NormKind::euclidean ? std::sqrt(acc) : acc;
}

/// Norm dual to `kind`; bounds |g . d| <= dual(g) * norm(d).
inline NormKind dual_norm(NormKind kind) {
  switch (kind) {
    case NormKind::euclidean: return NormKind::euclidean;
    case NormKind::max: return NormKind::sum;
    case NormKind::sum: return NormKind::max;
  }
  return NormKind::euclidean;
}

/// Axis-aligned box T in R^m with a norm.
class ParamBox {
 public:
  ParamBox(Point lower, Point upper, NormKind norm = NormKind::euclidean)
      : lower_(std::move(lower)), upper_(std::move(upper)), norm_(norm) {
    if (lower_.empty() || lower_.size() != upper_.size()) {
      throw std::invalid_argument("parameter box needs matching, non-empty bounds");
    }
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
        throw std::invalid_argument("parameter box must be bounded");
      }
      if (lower_[i] > upper_[i]) throw std::invalid_argument("parameter box needs lower <= upper");
    }
  }

  std::size_t dimension() const noexcept { return lower_.size(); }
  const Point& lower() const noexcept { return lower_; }
  const Point& upper() const noexcept { return upper_; }
  NormKind norm_kind() const noexcept { return norm_; }
  bool degenerate(std::size_t i) const { return lower_[i] == upper_[i]; }

  double norm(std::span<const double> v) const { return vector_norm(v, norm_); }

  double distance(std::span<const double> s, std::span<const double> t) const {
    Point d(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) d[i] = s[i] - t[i];
    return norm(d);
  }

  bool contains(std::span<const double> t) const {
    if (t.size() != dimension()) return false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] < lower_[i] || t[i] > upper_[i]) return false;
    }
    return true;
  }

  /// c = sup over the box of ||t||; a convex function peaks at a corner.
  double sup_norm() const {
    const std::size_t m = dimension();
    double best = 0.0;
    Point corner(m);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      for (std::size_t i = 0; i < m; ++i) corner[i] = (mask >> i) & 1u ? upper_[i] : lower_[i];
      best = std::max(best, norm(corner));
    }
    return best;
  }

  Point center() const {
    Point c(dimension());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lower_[i] + upper_[i]);
    return c;
  }

  /// Box grown by `fraction` of its width on every side (degenerate axes
  /// grow by `fraction` of max(1, |value|)).
  ParamBox inflated(double fraction) const {
    Point lo = lower_;
    Point hi = upper_;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      const double w = upper_[i] - lower_[i];
      const double pad = fraction * (w > 0.0 ? w : std::max(1.0, std::abs(lower_[i])));
      lo[i] -= pad;
      hi[i] += pad;
    }
    return ParamBox(std::move(lo), std::move(hi), norm_);
  }

  /// Axis values of a regular grid; degenerate axes collapse to one value.
  std::vector<double> axis(std::size_t i, int points) const {
    if (degenerate(i) || points < 2) return {lower_[i]};
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) {
      v[static_cast<std::size_t>(j)] =
          j == points - 1 ? upper_[i] : lower_[i] + (upper_[i] - lower_[i]) * j / (points - 1);
    }
    return v;
  }

  /// Tensor grid in lexicographic order (first coordinate most significant).
  std::vector<Point> grid(int points_per_dim) const {
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < dimension(); ++i) axes.push_back(axis(i, points_per_dim));
    std::vector<Point> out;
    Point cur(dimension());
    std::vector<std::size_t> idx(dimension(), 0);
    for (;;) {
      for (std::size_t i = 0; i < dimension(); ++i) cur[i] = axes[i][idx[i]];
      out.push_back(cur);
      std::size_t d = dimension();
      for (;;) {
        if (d == 0) return out;
        --d;
        if (++idx[d] < axes[d].size()) break;
        idx[d] = 0;
      }
    }
  }

 private:
  Point lower_;
  Point upper_;
  NormKind norm_;
};

// ---------------------------------------------------------------------------
// Families t -> P_t

using DensityGradient = std::function<void(double x, std::span<const double> t, std::span<double> grad)>;

struct Family {
  std::string name;
  ParamBox box;
  std::function<Distribution(std::span<const double>)> dist_at;
  DensityGradient density_grad_at;             // empty when unavailable
  std::function<double(double)> envelope;      // optional envelope map F
  std::vector<Point> finite_points;            // non-empty: T is exactly this set
  bool countable_truncation = false;           // finite slice of a countably infinite family

  bool is_finite() const noexcept { return !finite_points.empty(); }
  bool has_density_gradient() const noexcept { return static_cast<bool>(density_grad_at); }
};

/// Normal family over t = (mu, sigma) in the given 2-d box (sigma > 0).
inline Family make_normal_family(ParamBox box) {
  if (box.dimension() != 2 || !(box.lower()[1] > 0.0)) {
    throw std::invalid_argument("normal family needs a (mu, sigma) box with sigma_lower > 0");
  }
  Family fam{"normal", std::move(box), nullptr, nullptr, nullptr, {}, false};
  fam.dist_at = [](std::span<const double> t) { return Distribution::normal(t[0], t[1]); };
  fam.density_grad_at = [](double x, std::span<const double> t, std::span<double> g) {
    const auto [dmu, dsigma] = normal_density_gradient(x, t[0], t[1]);
    g[0] = dmu;
    g[1] = dsigma;
  };
  return fam;
}

/// Finite family indexed by t in {0, 1, ..., N-1}.
inline Family make_finite_family(std::vector<Distribution> members, std::string name = "finite") {
  if (members.empty()) throw std::invalid_argument("finite family needs at least one member");
  const double last = static_cast<double>(members.size() - 1);
  Family fam{std::move(name), ParamBox({0.0}, {last}), nullptr, nullptr, nullptr, {}, false};
  for (std::size_t i = 0; i < members.size(); ++i) fam.finite_points.push_back({static_cast<double>(i)});
  fam.dist_at = [members = std::move(members)](std::span<const double> t) {
    const auto i = static_cast<std::size_t>(std::llround(t[0]));
    return members.at(i);
  };
  return fam;
}

// ---------------------------------------------------------------------------
// The countable family D of balanced binary densities

inline Distribution make_binary_density(const BinaryDensitySpec& spec) {
  if (!spec.is_valid()) {
    throw std::invalid_argument("invalid binary density spec: need 2k bits with exactly k ones");
  }
  return Distribution::binary(spec);
}

namespace detail {

// Cells of width 1/k on [0,2] touched by the samples; a sample on a cell
// boundary marks both neighbours.
inline std::vector<bool> occupied_cells(std::span<const double> samples, int k) {
  std::vector<bool> marked(static_cast<std::size_t>(2 * k), false);
  for (double x : samples) {
    if (!(x >= 0.0 && x <= 2.0)) continue;
    const double y = binary_cell_coordinate(x, k);
    const auto j = static_cast<int>(std::floor(y));
    if (j < 2 * k) marked[static_cast<std::size_t>(j)] = true;
    if (y == static_cast<double>(j) && j > 0) marked[static_cast<std::size_t>(j - 1)] = true;
  }
  return marked;
}

}  // namespace detail

inline int count_occupied_cells(std::span<const double> samples, int k) {
  const auto m = detail::occupied_cells(samples, k);
  return static_cast<int>(std::count(m.begin(), m.end(), true));
}

/// A member of D (at level k) whose density vanishes at every sample, or
/// nothing when fewer than k cells are free.
inline std::optional<BinaryDensitySpec> find_vanishing_bits(std::span<const double> samples, int k) {
  if (k <= 0) return std::nullopt;
  const auto marked = detail::occupied_cells(samples, k);
  BinaryDensitySpec spec{k, std::vector<std::uint8_t>(marked.size(), 0)};
  int ones = 0;
  for (std::size_t j = 0; j < marked.size() && ones < k; ++j) {
    if (!marked[j]) {
      spec.bits[j] = 1;
      ++ones;
    }
  }
  if (ones < k) return std::nullopt;
  return spec;
}

/// All balanced sequences of length 2k, in lexicographic order.
inline std::vector<BinaryDensitySpec> enumerate_balanced_bits(int k) {
  std::vector<BinaryDensitySpec> out;
  const int n = 2 * k;
  if (k <= 0 || n > 30) throw std::invalid_argument("enumeration supports 1 <= k <= 15");
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    BinaryDensitySpec s{k, std::vector<std::uint8_t>(static_cast<std::size_t>(n))};
    for (int j = 0; j < n; ++j) s.bits[static_cast<std::size_t>(j)] = (mask >> (n - 1 - j)) & 1u;
    out.push_back(std::move(s));
  }
  return out;
}

/// Finite slice of D holding every member with level k <= k_max; flagged as a
/// truncation of a countable family.
inline Family make_binary_family_truncation(int k_max) {
  std::vector<Distribution> members;
  for (int k = 1; k <= k_max; ++k) {
    for (const auto& s : enumerate_balanced_bits(k)) members.push_back(make_binary_density(s));
  }
  Family fam = make_finite_family(std::move(members), "binary_D");
  fam.countable_truncation = true;
  return fam;
}

}  // namespace lowenv
