#pragma once

// JSON run configuration. Unknown keys are rejected; the resolved values are
// echoed into each output.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lowenv/beam.hpp"
#include "lowenv/consistency.hpp"
#include "lowenv/distributions.hpp"
#include "lowenv/errors.hpp"
#include "lowenv/estimator.hpp"
#include "lowenv/experiments.hpp"
#include "lowenv/integrand.hpp"
#include "lowenv/report.hpp"
#include "lowenv/sampling.hpp"

namespace lowenv::config {

enum class Command { estimate, bias_sweep, consistency_check, example_beam, example_no_consistency };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::estimate: return "estimate";
    case Command::bias_sweep: return "bias-sweep";
    case Command::consistency_check: return "consistency-check";
    case Command::example_beam: return "example-beam";
    case Command::example_no_consistency: return "example-no-consistency";
  }
  return "estimate";
}

inline std::optional<Command> command_from_string(const std::string& s) {
  for (Command c : {Command::estimate, Command::bias_sweep, Command::consistency_check, Command::example_beam,
                    Command::example_no_consistency}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Common synonyms mapped to the schema's names.
inline const std::map<std::string, std::string>& key_aliases() {
  static const std::map<std::string, std::string> aliases{
      {"samples", "n"},          {"sample_size", "n"},      {"num_samples", "n"},   {"n_samples", "n"},
      {"reps", "replications"},  {"n_reps", "replications"}, {"seeds", "battery"},  {"distribution", "central"},
      {"integrand", "f"},        {"grid_points", "grid_points_per_dim"},             {"ns", "n_grid"},
      {"sigma_min", "sigma_lower"}, {"sigma_max", "sigma_upper"}, {"mu_min", "mu_lower"}, {"mu_max", "mu_upper"},
  };
  return aliases;
}

inline std::string suggestion(const std::string& key, const std::set<std::string>& known) {
  const auto& aliases = key_aliases();
  if (const auto it = aliases.find(key); it != aliases.end() && known.count(it->second)) return it->second;
  std::string best;
  std::size_t best_d = 3;
  for (const auto& k : known) {
    const std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

/// Reads fields of one JSON object; finish() rejects every key that no read
/// asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  std::string field_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& at(const std::string& key) {
    known_.insert(key);
    if (!j_.contains(key)) throw ConfigError(field_path(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(field_path(key), "required number is missing");
    }
    const Json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(field_path(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(field_path(key), "must be finite");
    return d;
  }

  double positive(const std::string& key, std::optional<double> def = std::nullopt) {
    const double v = number(key, def);
    if (!(v > 0.0)) throw ConfigError(field_path(key), "must be > 0");
    return v;
  }

  std::int64_t integer(const std::string& key, std::optional<std::int64_t> def, std::int64_t min_value) {
    std::int64_t v = 0;
    if (!has(key)) {
      if (!def) throw ConfigError(field_path(key), "required integer is missing");
      v = *def;
    } else {
      const Json& x = j_.at(key);
      if (!x.is_number_integer()) throw ConfigError(field_path(key), "expected an integer");
      v = x.get<std::int64_t>();
    }
    if (v < min_value) throw ConfigError(field_path(key), "must be >= " + std::to_string(min_value));
    return v;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    const Json& x = j_.at(key);
    if (!x.is_number_integer() || (x.is_number_integer() && !x.is_number_unsigned() && x.get<std::int64_t>() < 0)) {
      throw ConfigError(field_path(key), "expected a non-negative integer");
    }
    return x.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const Json& x = j_.at(key);
    if (!x.is_boolean()) throw ConfigError(field_path(key), "expected true or false");
    return x.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(field_path(key), "required string is missing");
    }
    const Json& x = j_.at(key);
    if (!x.is_string()) throw ConfigError(field_path(key), "expected a string");
    return x.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> def = std::nullopt) {
    if (!has(key)) {
      if (def) return *def;
      throw ConfigError(field_path(key), "required array is missing");
    }
    const Json& x = j_.at(key);
    if (!x.is_array()) throw ConfigError(field_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!x[i].is_number()) throw ConfigError(field_path(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(x[i].get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> def) {
    if (!has(key)) return def;
    const Json& x = j_.at(key);
    if (!x.is_array() || x.empty()) throw ConfigError(field_path(key), "expected a non-empty array of integers");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!x[i].is_number_integer() || x[i].get<std::int64_t>() < 1) {
        throw ConfigError(field_path(key) + "[" + std::to_string(i) + "]", "expected an integer >= 1");
      }
      out.push_back(x[i].get<std::size_t>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (known_.count(key)) continue;
      std::string msg = "unknown key";
      const std::string s = detail::suggestion(key, known_);
      if (!s.empty()) msg += "; did you mean \"" + s + "\"?";
      throw ConfigError(field_path(key), msg);
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> known_;
};

// ---------------------------------------------------------------------------
// Typed sections

inline Distribution parse_distribution(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  const std::string kind = r.string("kind");
  Distribution d = Distribution::uniform(0.0, 1.0);
  try {
    if (kind == "normal") {
      const double mu = r.number("mu");
      const double sigma = r.positive("sigma");
      d = Distribution::normal(mu, sigma);
    } else if (kind == "uniform") {
      const double a = r.number("a");
      const double b = r.number("b");
      if (!(b > a)) throw ConfigError(r.field_path("b"), "must exceed a");
      d = Distribution::uniform(a, b);
    } else if (kind == "binary") {
      const auto k = r.integer("k", std::nullopt, 1);
      const auto bits = r.numbers("bits");
      BinaryDensitySpec spec{static_cast<int>(k), {}};
      for (double b : bits) {
        if (b != 0.0 && b != 1.0) throw ConfigError(r.field_path("bits"), "bits must be 0 or 1");
        spec.bits.push_back(static_cast<std::uint8_t>(b));
      }
      if (!spec.is_valid()) throw ConfigError(r.field_path("bits"), "need 2k bits with exactly k ones");
      d = make_binary_density(spec);
    } else if (kind == "cdf_table") {
      d = Distribution::cdf_table(r.numbers("x"), r.numbers("cdf"));
    } else {
      throw ConfigError(r.field_path("kind"), "unknown distribution kind \"" + kind +
                                                  "\" (normal, uniform, binary, cdf_table)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  r.finish();
  return d;
}

inline Json distribution_json(const Distribution& d) {
  return std::visit(
      [](const auto& l) -> Json {
        using L = std::decay_t<decltype(l)>;
        Json j;
        if constexpr (std::is_same_v<L, UniformLaw>) {
          j["kind"] = "uniform";
          j["a"] = l.a;
          j["b"] = l.b;
        } else if constexpr (std::is_same_v<L, NormalLaw>) {
          j["kind"] = "normal";
          j["mu"] = l.mu;
          j["sigma"] = l.sigma;
        } else if constexpr (std::is_same_v<L, BinaryLaw>) {
          j["kind"] = "binary";
          j["k"] = l.spec.k;
          Json bits = Json::array();
          for (auto b : l.spec.bits) bits.push_back(static_cast<int>(b));
          j["bits"] = bits;
        } else {
          j["kind"] = "cdf_table";
          j["x"] = l.x;
          j["cdf"] = l.cdf;
        }
        return j;
      },
      d.law());
}

inline beam::BeamParams parse_beam(const Json* j, const std::string& path) {
  beam::BeamParams p;
  if (j == nullptr) return p;
  ObjectReader r(*j, path);
  p.L = r.positive("L", p.L);
  p.q = r.positive("q", p.q);
  p.M_yield = r.positive("M_yield", p.M_yield);
  p.EI = r.positive("EI", p.EI);
  p.mu_lower = r.number("mu_lower", p.mu_lower);
  p.mu_upper = r.number("mu_upper", p.mu_upper);
  p.sigma_lower = r.positive("sigma_lower", p.sigma_lower);
  p.sigma_upper = r.positive("sigma_upper", p.sigma_upper);
  p.mu_central = r.number("mu_central", p.mu_central);
  p.sigma_central = r.positive("sigma_central", p.sigma_central);
  if (p.mu_lower > p.mu_upper) throw ConfigError(r.field_path("mu_upper"), "must be >= mu_lower");
  if (p.sigma_lower > p.sigma_upper) throw ConfigError(r.field_path("sigma_upper"), "must be >= sigma_lower");
  r.finish();
  return p;
}

inline Json beam_json(const beam::BeamParams& p) {
  Json j;
  j["L"] = p.L;
  j["q"] = p.q;
  j["M_yield"] = p.M_yield;
  j["EI"] = p.EI;
  j["mu_lower"] = p.mu_lower;
  j["mu_upper"] = p.mu_upper;
  j["sigma_lower"] = p.sigma_lower;
  j["sigma_upper"] = p.sigma_upper;
  j["mu_central"] = p.mu_central;
  j["sigma_central"] = p.sigma_central;
  return j;
}

/// f, resolved to an Integrand plus its echo.
struct IntegrandSpec {
  Integrand f;
  Json echo;
};

inline IntegrandSpec parse_integrand(const Json* j, const std::string& path, const IntegrandSpec& def,
                                     const beam::BeamParams& beam_params) {
  if (j == nullptr) return def;
  ObjectReader r(*j, path);
  const std::string kind = r.string("kind");
  IntegrandSpec out;
  out.echo["kind"] = kind;
  if (kind == "indicator_g_positive") {
    const std::string g = r.string("g", "identity");
    out.echo["g"] = g;
    if (g == "identity") {
      out.f = positive_indicator();
    } else if (g == "beam") {
      out.f = beam::survival_indicator(beam_params);
    } else {
      throw ConfigError(r.field_path("g"), "unknown limit state \"" + g + "\" (identity, beam)");
    }
  } else if (kind == "constant") {
    const double c = r.number("c");
    out.echo["c"] = c;
    out.f = constant_integrand(c);
  } else if (kind == "identity") {
    out.f = identity_integrand();
  } else if (kind == "polynomial") {
    const auto c = r.numbers("coefficients");
    if (c.empty()) throw ConfigError(r.field_path("coefficients"), "need at least one coefficient");
    out.echo["coefficients"] = c;
    out.f = polynomial_integrand(c);
  } else {
    throw ConfigError(r.field_path("kind"),
                      "unknown integrand \"" + kind + "\" (indicator_g_positive, constant, identity, polynomial)");
  }
  r.finish();
  return out;
}

inline IntegrandSpec default_indicator() { return {positive_indicator(), Json{{"kind", "indicator_g_positive"}, {"g", "identity"}}}; }

struct FamilySpec {
  std::string kind = "normal";
  double mu_lower = -1.0;
  double mu_upper = 1.0;
  double sigma_lower = 1.0;
  double sigma_upper = 1.0;
  NormKind norm = NormKind::euclidean;
  std::vector<Distribution> members;
  int k_max = 3;

  Family build(const beam::BeamParams& bp) const {
    if (kind == "normal") return make_normal_family(ParamBox({mu_lower, sigma_lower}, {mu_upper, sigma_upper}, norm));
    if (kind == "finite") return make_finite_family(members);
    if (kind == "binary_D") return make_binary_family_truncation(k_max);
    return beam::beam_family(bp);
  }

  Json echo() const {
    Json j;
    j["kind"] = kind;
    if (kind == "normal") {
      j["mu_lower"] = mu_lower;
      j["mu_upper"] = mu_upper;
      j["sigma_lower"] = sigma_lower;
      j["sigma_upper"] = sigma_upper;
      j["norm"] = to_string(norm);
    } else if (kind == "finite") {
      Json m = Json::array();
      for (const auto& d : members) m.push_back(distribution_json(d));
      j["members"] = m;
    } else if (kind == "binary_D") {
      j["k_max"] = k_max;
    }
    return j;
  }
};

inline FamilySpec parse_family(const Json* j, const std::string& path, FamilySpec def) {
  if (j == nullptr) return def;
  ObjectReader r(*j, path);
  FamilySpec f;
  f.kind = r.string("kind");
  if (f.kind == "normal") {
    f.mu_lower = r.number("mu_lower");
    f.mu_upper = r.number("mu_upper");
    f.sigma_lower = r.positive("sigma_lower");
    f.sigma_upper = r.positive("sigma_upper");
    if (f.mu_lower > f.mu_upper) throw ConfigError(r.field_path("mu_upper"), "must be >= mu_lower");
    if (f.sigma_lower > f.sigma_upper) throw ConfigError(r.field_path("sigma_upper"), "must be >= sigma_lower");
    const std::string norm = r.string("norm", "euclidean");
    if (norm == "euclidean") {
      f.norm = NormKind::euclidean;
    } else if (norm == "max") {
      f.norm = NormKind::max;
    } else if (norm == "sum") {
      f.norm = NormKind::sum;
    } else {
      throw ConfigError(r.field_path("norm"), "unknown norm \"" + norm + "\" (euclidean, max, sum)");
    }
  } else if (f.kind == "finite") {
    const Json& m = r.at("members");
    if (!m.is_array() || m.empty()) throw ConfigError(r.field_path("members"), "expected a non-empty array");
    for (std::size_t i = 0; i < m.size(); ++i) {
      f.members.push_back(parse_distribution(m[i], r.field_path("members") + "[" + std::to_string(i) + "]"));
    }
  } else if (f.kind == "binary_D") {
    f.k_max = static_cast<int>(r.integer("k_max", 3, 1));
    if (f.k_max > 8) throw ConfigError(r.field_path("k_max"), "must be <= 8");
  } else if (f.kind != "beam") {
    throw ConfigError(r.field_path("kind"), "unknown family \"" + f.kind + "\" (normal, finite, binary_D, beam)");
  }
  r.finish();
  return f;
}

inline SolverConfig parse_solver(const Json* j, const std::string& path, int threads) {
  SolverConfig s;
  s.threads = threads;
  if (j == nullptr) return s;
  ObjectReader r(*j, path);
  s.grid_points_per_dim = static_cast<int>(r.integer("grid_points_per_dim", s.grid_points_per_dim, 2));
  s.refine = r.boolean("refine", s.refine);
  s.refine_iters = static_cast<int>(r.integer("refine_iters", s.refine_iters, 0));
  r.finish();
  return s;
}

inline Json solver_json(const SolverConfig& s) {
  return Json{{"grid_points_per_dim", s.grid_points_per_dim},
              {"refine", s.refine},
              {"refine_iters", s.refine_iters},
              {"tie_break", "lexicographic_smallest_t"}};
}

inline GridSpec parse_grid(const Json* j, const std::string& path) {
  GridSpec g;
  if (j == nullptr) return g;
  ObjectReader r(*j, path);
  g.x_points = static_cast<int>(r.integer("x_points", g.x_points, 2));
  g.x_pad_sigmas = r.positive("x_pad_sigmas", g.x_pad_sigmas);
  if (r.has("x_range")) {
    const auto v = r.numbers("x_range");
    if (v.size() != 2 || !(v[1] > v[0])) throw ConfigError(r.field_path("x_range"), "expected [lower, upper]");
    g.x_range = Interval{v[0], v[1]};
  }
  g.t_points_per_dim = static_cast<int>(r.integer("t_points_per_dim", g.t_points_per_dim, 2));
  g.inflate_fraction = r.positive("inflate_fraction", g.inflate_fraction);
  r.finish();
  return g;
}

inline Json grid_json(const GridSpec& g) {
  Json j;
  j["x_points"] = g.x_points;
  j["x_pad_sigmas"] = g.x_pad_sigmas;
  if (g.x_range) j["x_range"] = Json::array({g.x_range->lower, g.x_range->upper});
  j["t_points_per_dim"] = g.t_points_per_dim;
  j["inflate_fraction"] = g.inflate_fraction;
  j["fd_rel_step"] = g.fd_rel_step;
  j["fd_rel_tol"] = g.fd_rel_tol;
  j["quad_abs_tol"] = g.quad_abs_tol;
  return j;
}

inline std::vector<Route> parse_routes(ObjectReader& r, const std::string& key, std::vector<Route> def) {
  if (!r.has(key)) return def;
  const Json& x = r.at(key);
  if (!x.is_array() || x.empty()) throw ConfigError(r.field_path(key), "expected a non-empty array of route names");
  std::vector<Route> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto route = x[i].is_string() ? route_from_string(x[i].get<std::string>()) : std::nullopt;
    if (!route) throw ConfigError(r.field_path(key) + "[" + std::to_string(i) + "]", "unknown route");
    out.push_back(*route);
  }
  return out;
}

inline Json routes_json(const std::vector<Route>& routes) {
  Json a = Json::array();
  for (Route r : routes) a.push_back(to_string(r));
  return a;
}

inline Backend parse_backend(ObjectReader& r, Backend def) {
  const std::string b = r.string("backend", lowenv::to_string(def));
  if (b == "importance") return Backend::importance;
  if (b == "inverse_transform") return Backend::inverse_transform;
  throw ConfigError(r.field_path("backend"), "unknown backend \"" + b + "\" (importance, inverse_transform)");
}

// ---------------------------------------------------------------------------
// Run configuration

struct NaiveSpec {
  bool enabled = true;
  Distribution distribution = Distribution::normal(0.0, 1.0);
  IntegrandSpec f{identity_integrand(), Json{{"kind", "identity"}}};
  std::vector<std::size_t> m_grid{1, 2, 4, 8};
  std::size_t n = 100;
  std::size_t replications = 10'000;
};

struct ConvergenceSpec {
  bool enabled = true;
  std::vector<std::size_t> n_grid{1'000, 10'000, 100'000};
  std::size_t replications = 20;
  int oracle_grid_points = 101;
  double final_tol = 0.01;
};

struct SubfamilySpec {
  std::vector<BinaryDensitySpec> members = default_binary_subfamily();
  std::size_t n = 10'000;
};

struct RunConfig {
  Command command = Command::estimate;
  std::uint64_t seed = 1;
  int threads = 1;
  SolverConfig solver;
  beam::BeamParams beam;
  IntegrandSpec f = default_indicator();
  FamilySpec family;
  Distribution central = Distribution::normal(0.0, 1.0);
  Backend backend = Backend::inverse_transform;
  std::size_t n = 100'000;
  // bias-sweep
  std::vector<std::size_t> n_grid{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t replications = 2000;
  std::optional<double> oracle;
  NaiveSpec naive;
  // consistency-check and example-beam
  std::vector<Route> routes;
  GridSpec grid;
  ConvergenceSpec convergence;
  // example-no-consistency
  std::vector<std::size_t> n_list{1, 10, 100, 1000};
  std::size_t battery = 20;
  SubfamilySpec subfamily;

  Json echo() const;
};

inline Json RunConfig::echo() const {
  Json j;
  j["command"] = to_string(command);
  j["seed"] = seed;
  j["threads"] = threads;
  switch (command) {
    case Command::estimate:
    case Command::bias_sweep:
      j["f"] = f.echo;
      j["family"] = family.echo();
      j["central"] = distribution_json(central);
      j["backend"] = lowenv::to_string(backend);
      j["solver"] = solver_json(solver);
      if (family.kind == "beam" || f.echo.value("g", "") == "beam") j["beam"] = beam_json(beam);
      if (command == Command::estimate) {
        j["n"] = n;
      } else {
        j["n_grid"] = n_grid;
        j["replications"] = replications;
        j["oracle"] = oracle ? Json(*oracle) : Json("quadrature");
        Json nv;
        nv["enabled"] = naive.enabled;
        if (naive.enabled) {
          nv["distribution"] = distribution_json(naive.distribution);
          nv["f"] = naive.f.echo;
          nv["m_grid"] = naive.m_grid;
          nv["n"] = naive.n;
          nv["replications"] = naive.replications;
        }
        j["naive"] = nv;
      }
      break;
    case Command::consistency_check:
      j["f"] = f.echo;
      j["family"] = family.echo();
      j["central"] = distribution_json(central);
      j["backend"] = lowenv::to_string(backend);
      if (family.kind == "beam" || f.echo.value("g", "") == "beam") j["beam"] = beam_json(beam);
      j["routes"] = routes_json(routes);
      j["grid"] = grid_json(grid);
      break;
    case Command::example_beam: {
      j["beam"] = beam_json(beam);
      j["n"] = n;
      j["solver"] = solver_json(solver);
      j["routes"] = routes_json(routes);
      j["grid"] = grid_json(grid);
      Json c;
      c["enabled"] = convergence.enabled;
      c["n_grid"] = convergence.n_grid;
      c["replications"] = convergence.replications;
      c["oracle_grid_points"] = convergence.oracle_grid_points;
      c["final_tol"] = convergence.final_tol;
      j["convergence"] = c;
      break;
    }
    case Command::example_no_consistency: {
      j["f"] = f.echo;
      j["n_list"] = n_list;
      j["battery"] = battery;
      Json s;
      Json members = Json::array();
      for (const auto& m : subfamily.members) members.push_back(distribution_json(make_binary_density(m)));
      s["members"] = members;
      s["n"] = subfamily.n;
      j["subfamily"] = s;
      break;
    }
  }
  return j;
}

namespace detail {

inline const Json* child(ObjectReader& r, const Json& root, const std::string& key) {
  return r.has(key) ? &root.at(key) : nullptr;
}

}  // namespace detail

/// Validates `root` against the schema of `command` and fills defaults.
inline RunConfig parse_run_config(Command command, const Json& root) {
  ObjectReader r(root, "");
  RunConfig c;
  c.command = command;
  c.seed = r.seed("seed", 1);
  c.threads = static_cast<int>(r.integer("threads", 1, 1));
  c.solver = parse_solver(detail::child(r, root, "solver"), "solver", c.threads);

  switch (command) {
    case Command::estimate:
    case Command::bias_sweep:
    case Command::consistency_check: {
      c.beam = parse_beam(detail::child(r, root, "beam"), "beam");
      c.family = parse_family(detail::child(r, root, "family"), "family", FamilySpec{});
      if (command == Command::consistency_check && !r.has("family")) c.family.kind = "beam";
      IntegrandSpec def_f = default_indicator();
      if (c.family.kind == "beam") def_f = {beam::survival_indicator(c.beam), Json{{"kind", "indicator_g_positive"}, {"g", "beam"}}};
      c.f = parse_integrand(detail::child(r, root, "f"), "f", def_f, c.beam);
      const bool beam_default_central = c.family.kind == "beam";
      c.central = r.has("central") ? parse_distribution(root.at("central"), "central")
                                   : (beam_default_central ? c.beam.central() : Distribution::normal(0.0, 1.0));
      c.backend = parse_backend(r, command == Command::consistency_check || c.family.kind != "normal"
                                       ? Backend::importance
                                       : Backend::inverse_transform);
      if (command == Command::estimate) {
        c.n = static_cast<std::size_t>(r.integer("n", 100'000, 1));
      } else if (command == Command::bias_sweep) {
        c.n_grid = r.counts("n_grid", c.n_grid);
        c.replications = static_cast<std::size_t>(r.integer("replications", 2000, 2));
        if (r.has("oracle")) c.oracle = r.number("oracle");
        if (const Json* nv = detail::child(r, root, "naive")) {
          ObjectReader nr(*nv, "naive");
          c.naive.enabled = nr.boolean("enabled", true);
          if (nr.has("distribution")) c.naive.distribution = parse_distribution(nv->at("distribution"), "naive.distribution");
          c.naive.f = parse_integrand(nr.has("f") ? &nv->at("f") : nullptr, "naive.f", c.naive.f, c.beam);
          c.naive.m_grid = nr.counts("m_grid", c.naive.m_grid);
          c.naive.n = static_cast<std::size_t>(nr.integer("n", 100, 1));
          c.naive.replications = static_cast<std::size_t>(nr.integer("replications", 10'000, 2));
          nr.finish();
        }
      } else {
        std::vector<Route> def_routes{Route::finite_T};
        if (c.family.kind == "beam" || c.family.kind == "normal") {
          def_routes = {Route::gradient_box, Route::is_gradient_density, Route::is_compact_bounded_f};
        }
        c.routes = parse_routes(r, "routes", def_routes);
        c.grid = parse_grid(detail::child(r, root, "grid"), "grid");
      }
      break;
    }
    case Command::example_beam: {
      c.beam = parse_beam(detail::child(r, root, "beam"), "beam");
      c.n = static_cast<std::size_t>(r.integer("n", 100'000, 1));
      c.routes = parse_routes(r, "routes", {Route::gradient_box, Route::is_gradient_density, Route::is_compact_bounded_f});
      c.grid = parse_grid(detail::child(r, root, "grid"), "grid");
      if (const Json* cv = detail::child(r, root, "convergence")) {
        ObjectReader cr(*cv, "convergence");
        c.convergence.enabled = cr.boolean("enabled", true);
        c.convergence.n_grid = cr.counts("n_grid", c.convergence.n_grid);
        c.convergence.replications = static_cast<std::size_t>(cr.integer("replications", 20, 2));
        c.convergence.oracle_grid_points = static_cast<int>(cr.integer("oracle_grid_points", 101, 2));
        c.convergence.final_tol = cr.positive("final_tol", 0.01);
        cr.finish();
      }
      break;
    }
    case Command::example_no_consistency: {
      c.f = parse_integrand(detail::child(r, root, "f"), "f",
                            {constant_integrand(2.0), Json{{"kind", "constant"}, {"c", 2.0}}}, c.beam);
      c.n_list = r.counts("n_list", c.n_list);
      c.battery = static_cast<std::size_t>(r.integer("battery", 20, 1));
      if (const Json* sf = detail::child(r, root, "subfamily")) {
        ObjectReader sr(*sf, "subfamily");
        if (sr.has("members")) {
          const Json& m = sr.at("members");
          if (!m.is_array() || m.empty()) throw ConfigError("subfamily.members", "expected a non-empty array");
          c.subfamily.members.clear();
          for (std::size_t i = 0; i < m.size(); ++i) {
            const std::string p = "subfamily.members[" + std::to_string(i) + "]";
            const Distribution d = parse_distribution(m[i], p);
            const auto* law = std::get_if<BinaryLaw>(&d.law());
            if (law == nullptr) throw ConfigError(p, "members of D must have kind \"binary\"");
            c.subfamily.members.push_back(law->spec);
          }
        }
        c.subfamily.n = static_cast<std::size_t>(sr.integer("n", 10'000, 1));
        sr.finish();
      }
      break;
    }
  }
  r.finish();
  return c;
}

/// Reads JSON from a file path, or from stdin when the path is "-".
inline Json read_json(const std::string& path) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  } else {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("", "cannot open config file " + path);
    text.assign(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
}

}  // namespace lowenv::config
