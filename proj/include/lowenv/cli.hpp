#pragma once

// Command-line front end.

#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lowenv/config.hpp"
#include "lowenv/version.hpp"

namespace lowenv::cli {

namespace fs = std::filesystem;

enum ExitStatus : int { kOk = 0, kComputationError = 1, kConfigError = 2 };

inline Json point_json(const Point& p) { return json_array(p); }

inline Json box_json(const ParamBox& b) {
  return Json{{"lower", point_json(b.lower())}, {"upper", point_json(b.upper())}, {"norm", to_string(b.norm_kind())}};
}

inline Json certificate_json(const ConsistencyCertificate& c) {
  Json j;
  j["route"] = to_string(c.route);
  j["issued"] = c.issued;
  j["reason"] = c.reason;
  j["max_violation"] = json_number(c.max_violation);
  j["max_fd_rel_error"] = json_number(c.max_fd_rel_error);
  j["checked_points"] = c.checked_points;
  j["envelope_norm"] = json_number(c.envelope_norm);
  j["envelope_norm_converged"] = c.envelope_norm_converged;
  j["sup_density_integral"] = c.sup_density_integral ? json_number(*c.sup_density_integral) : Json(nullptr);
  j["sup_density_closed_form"] = c.sup_density_closed_form ? json_number(*c.sup_density_closed_form) : Json(nullptr);
  Json bounds = Json::array();
  for (const auto& r : c.bounds) {
    bounds.push_back(Json{{"eps", json_number(r.eps)},
                          {"covering_number", json_number(r.covering)},
                          {"bracket_size", json_number(r.bracket_size)},
                          {"bracketing_number", json_number(r.bracket_count)}});
  }
  j["bounds"] = bounds;
  j["grid"] = config::grid_json(c.grid);
  j["x_range"] = Json::array({json_number(c.x_range.lower), json_number(c.x_range.upper)});
  j["t_box"] = box_json(c.t_box);
  return j;
}

inline Json estimate_json(const EnvelopeEstimate& e) {
  Json j;
  j["value"] = json_number(e.value);
  j["argmin"] = point_json(e.argmin);
  j["n"] = e.n;
  j["seed"] = e.seed;
  j["backend"] = to_string(e.backend);
  j["grid_value"] = json_number(e.grid_value);
  j["stderr_at_argmin"] = json_number(e.stderr_at_argmin);
  j["objective_evaluations"] = e.solver_trace.size();
  j["zero_central_density"] = e.diagnostics.zero_central_density;
  j["support_violations"] = e.diagnostics.support_violations;
  return j;
}

inline std::vector<std::string> record_header(std::size_t dims) {
  std::vector<std::string> h{"n", "replication", "estimate"};
  for (std::size_t d = 0; d < dims; ++d) h.push_back("argmin_" + std::to_string(d));
  h.push_back("seed");
  return h;
}

inline void add_record_rows(CsvTable& csv, std::span<const ReplicationRecord> records, std::size_t dims) {
  for (const auto& r : records) {
    std::vector<std::string> row{CsvTable::cell(static_cast<std::uint64_t>(r.n)),
                                 CsvTable::cell(static_cast<std::uint64_t>(r.replication)), CsvTable::cell(r.estimate)};
    for (std::size_t d = 0; d < dims; ++d) row.push_back(d < r.argmin.size() ? CsvTable::cell(r.argmin[d]) : "");
    row.push_back(CsvTable::cell(r.seed));
    csv.add_row(std::move(row));
  }
}

/// Files and summary produced by one run.
struct RunOutput {
  Json summary;
  std::vector<std::pair<std::string, std::string>> files;  // (file name, contents)
};

// ---------------------------------------------------------------------------
// Subcommands

inline RunOutput run_estimate(const config::RunConfig& c) {
  const Family fam = c.family.build(c.beam);
  const EnvelopeEstimate e = lower_envelope_estimate(c.f.f, fam, c.central, c.backend, c.n, c.seed, c.solver);
  RunOutput out;
  out.summary = estimate_json(e);
  CsvTable csv(record_header(fam.box.dimension()));
  const ReplicationRecord rec{e.n, 0, e.value, e.argmin, e.seed};
  add_record_rows(csv, std::span(&rec, 1), fam.box.dimension());
  out.files.emplace_back("estimate.csv", csv.text());
  return out;
}

inline RunOutput run_bias_sweep(const config::RunConfig& c) {
  EnvelopeSetup setup{c.f.f, c.family.build(c.beam), c.central, c.backend, c.solver};
  Json oracle_info;
  double oracle = 0.0;
  if (c.oracle) {
    oracle = *c.oracle;
    oracle_info = Json{{"value", oracle}, {"source", "config"}};
  } else {
    const EnvelopeOracle o = envelope_oracle(c.f.f, setup.family, c.solver.grid_points_per_dim);
    oracle = o.value;
    oracle_info = Json{{"value", json_number(o.value)},
                       {"source", "quadrature"},
                       {"argmin", point_json(o.argmin)},
                       {"grid_points_per_dim", o.grid_points_per_dim}};
  }
  const BiasSweepResult r = bias_sweep(setup, c.n_grid, c.replications, oracle, c.seed, c.threads);

  RunOutput out;
  Json rows = Json::array();
  for (std::size_t i = 0; i < r.n_grid.size(); ++i) {
    rows.push_back(Json{{"n", r.n_grid[i]},
                        {"mean", json_number(r.replication_means[i])},
                        {"stderr", json_number(r.stderrs[i])},
                        {"bias", json_number(r.replication_means[i] - oracle)}});
  }
  Json envelope;
  envelope["oracle"] = oracle_info;
  envelope["rows"] = rows;
  envelope["below_oracle_ok"] = r.below_oracle_ok;
  envelope["non_decreasing_ok"] = r.non_decreasing_ok;
  envelope["monotone_ok"] = r.monotone_ok;
  out.summary["envelope"] = envelope;

  const std::size_t dims = setup.family.box.dimension();
  CsvTable csv(record_header(dims));
  add_record_rows(csv, r.records, dims);
  out.files.emplace_back("bias_sweep.csv", csv.text());

  if (c.naive.enabled) {
    const NaiveSweepResult nr = naive_sweep(c.naive.f.f, c.naive.distribution, c.naive.m_grid, c.naive.n,
                                            c.naive.replications, c.seed, c.threads);
    Json naive;
    Json nrows = Json::array();
    CsvTable ncsv({"m", "n", "mean", "stderr"});
    for (std::size_t i = 0; i < nr.m_grid.size(); ++i) {
      nrows.push_back(Json{{"m", nr.m_grid[i]},
                           {"mean", json_number(nr.replication_means[i])},
                           {"stderr", json_number(nr.stderrs[i])}});
      ncsv.add_row({CsvTable::cell(static_cast<std::uint64_t>(nr.m_grid[i])),
                    CsvTable::cell(static_cast<std::uint64_t>(nr.n)), CsvTable::cell(nr.replication_means[i]),
                    CsvTable::cell(nr.stderrs[i])});
    }
    naive["rows"] = nrows;
    naive["non_increasing"] = nr.non_increasing;
    // E[min of two independent normal sample means] = mu - sigma / sqrt(pi n).
    const auto* law = std::get_if<NormalLaw>(&c.naive.distribution.law());
    const auto m2 = std::find(nr.m_grid.begin(), nr.m_grid.end(), std::size_t{2});
    if (law != nullptr && c.naive.f.echo.at("kind") == "identity" && m2 != nr.m_grid.end()) {
      const auto i = static_cast<std::size_t>(m2 - nr.m_grid.begin());
      const double expected = law->mu - law->sigma / std::sqrt(std::numbers::pi * static_cast<double>(nr.n));
      naive["m2_oracle"] = expected;
      naive["m2_within_3se"] = std::abs(nr.replication_means[i] - expected) <= 3.0 * nr.stderrs[i];
    } else {
      naive["m2_oracle"] = nullptr;
      naive["m2_within_3se"] = nullptr;
    }
    out.summary["naive"] = naive;
    out.files.emplace_back("naive_sweep.csv", ncsv.text());
  }
  return out;
}

/// Envelope maps for a normal box family: gradient bounds of the density and,
/// with a normal central law, of |f| p_t / p.
inline EnvelopeMap normal_box_envelope(const config::RunConfig& c, Route r) {
  if (c.family.kind == "beam") return beam::route_envelope(c.beam, r);
  if (c.family.kind != "normal") return nullptr;
  beam::BeamParams p;
  p.mu_lower = c.family.mu_lower;
  p.mu_upper = c.family.mu_upper;
  p.sigma_lower = c.family.sigma_lower;
  p.sigma_upper = c.family.sigma_upper;
  if (r == Route::is_gradient_density || r == Route::is_lipschitz_density) return beam::route_envelope(p, r);
  const auto* law = std::get_if<NormalLaw>(&c.central.law());
  if (law == nullptr) return nullptr;
  p.mu_central = law->mu;
  p.sigma_central = law->sigma;
  const EnvelopeMap base = beam::route_envelope(p, r);
  if (!base) return nullptr;
  const Integrand f = c.f.f;
  return [base, f](double x) {
    const double fx = std::abs(f(x));
    return fx == 0.0 ? 0.0 : fx * base(x);
  };
}

inline RunOutput run_consistency_check(const config::RunConfig& c) {
  const Family fam = c.family.build(c.beam);
  RunOutput out;
  Json certs = Json::array();
  CsvTable csv({"route", "issued", "max_violation", "max_fd_rel_error", "checked_points", "envelope_norm",
                "sup_density_integral"});
  bool all_issued = true;
  for (Route r : c.routes) {
    CertifySetup s;
    s.family = &fam;
    s.f = c.f.f;
    s.central = c.central;
    s.backend = c.backend;
    s.envelope = normal_box_envelope(c, r);
    s.grid = c.grid;
    s.threads = c.threads;
    const ConsistencyCertificate cert = certify(s, r);
    all_issued = all_issued && cert.issued;
    certs.push_back(certificate_json(cert));
    csv.add_row({to_string(r), cert.issued ? "true" : "false", CsvTable::cell(cert.max_violation),
                 CsvTable::cell(cert.max_fd_rel_error), CsvTable::cell(static_cast<std::uint64_t>(cert.checked_points)),
                 CsvTable::cell(cert.envelope_norm),
                 cert.sup_density_integral ? CsvTable::cell(*cert.sup_density_integral) : std::string()});
  }
  out.summary["certificates"] = certs;
  out.summary["all_issued"] = all_issued;
  out.files.emplace_back("consistency.csv", csv.text());
  return out;
}

inline RunOutput run_example_beam(const config::RunConfig& c) {
  RunOutput out;
  const beam::BeamRun run = beam::run_beam_example(c.beam, c.n, c.seed, c.solver, c.routes, c.grid);
  Json single = estimate_json(run.estimate);
  single["upper_failure_prob"] = json_number(run.upper_failure_prob);
  out.summary["estimate"] = single;
  Json certs = Json::array();
  bool all_issued = true;
  for (const auto& cert : run.certificates) {
    all_issued = all_issued && cert.issued;
    certs.push_back(certificate_json(cert));
  }
  out.summary["certificates"] = certs;
  out.summary["all_issued"] = all_issued;

  if (c.convergence.enabled) {
    const beam::BeamOracle oracle = beam::failure_oracle(c.beam, c.convergence.oracle_grid_points);
    const beam::BeamConvergence conv = beam::beam_convergence(
        c.beam, c.convergence.n_grid, c.convergence.replications, c.seed, c.solver, oracle, c.convergence.final_tol,
        c.threads);
    Json j;
    j["oracle"] = Json{{"upper_failure", json_number(oracle.upper_failure)},
                       {"lower_survival", json_number(oracle.lower_survival)},
                       {"argmax", point_json(oracle.argmax)},
                       {"grid_points_per_dim", oracle.grid_points_per_dim}};
    Json rows = Json::array();
    for (const auto& r : conv.rows) {
      rows.push_back(Json{{"n", r.n},
                          {"mean", json_number(r.mean)},
                          {"stderr", json_number(r.stderr_)},
                          {"spread", json_number(r.spread)},
                          {"abs_error", json_number(r.abs_error)}});
    }
    j["rows"] = rows;
    j["halves_per_decade"] = conv.halves_per_decade;
    j["final_within_tol"] = conv.final_within_tol;
    out.summary["convergence"] = j;
    CsvTable csv(record_header(2));
    add_record_rows(csv, conv.records, 2);
    out.files.emplace_back("beam_convergence.csv", csv.text());
  }
  return out;
}

inline std::string bits_text(const BinaryDensitySpec& s) {
  std::string out;
  out.reserve(s.bits.size());
  for (auto b : s.bits) out += b ? '1' : '0';
  return out;
}

inline RunOutput run_example_no_consistency(const config::RunConfig& c) {
  RunOutput out;
  CsvTable csv({"battery_index", "seed", "n", "k", "occupied_cells", "objective", "bits"});
  Json battery = Json::array();
  bool all_zero = true;
  double lower_bound = 0.0;
  for (std::size_t b = 0; b < c.battery; ++b) {
    const std::uint64_t seed = derive_seed(c.seed, b);
    const NoConsistencyResult r = run_no_consistency_example(c.f.f, c.n_list, seed);
    all_zero = all_zero && r.all_zero;
    lower_bound = r.envelope_lower_bound;
    Json objectives = Json::array();
    for (const auto& row : r.rows) {
      objectives.push_back(json_number(row.objective));
      csv.add_row({CsvTable::cell(static_cast<std::uint64_t>(b)), CsvTable::cell(row.seed),
                   CsvTable::cell(static_cast<std::uint64_t>(row.n)), CsvTable::cell(row.k),
                   CsvTable::cell(row.occupied_cells), CsvTable::cell(row.objective), bits_text(row.spec)});
    }
    battery.push_back(Json{{"seed", seed}, {"all_zero", r.all_zero}, {"objectives", objectives}});
  }
  out.summary["all_zero"] = all_zero;
  out.summary["envelope_lower_bound"] = json_number(lower_bound);
  out.summary["battery"] = battery;

  const FiniteSubfamilyCheck fs = finite_subfamily_check(c.f.f, c.subfamily.members, c.subfamily.n, c.seed);
  Json slice = estimate_json(fs.estimate);
  slice["exact_min"] = json_number(fs.exact_min);
  slice["within_3se"] = fs.within_band;
  out.summary["finite_subfamily"] = slice;
  out.files.emplace_back("no_consistency.csv", csv.text());
  return out;
}

/// Runs `c`, writes `<command>.json` plus the CSV files into `out_dir`, and
/// returns the JSON document.
inline Json execute(const config::RunConfig& c, const fs::path& out_dir) {
  RunOutput run;
  switch (c.command) {
    case config::Command::estimate: run = run_estimate(c); break;
    case config::Command::bias_sweep: run = run_bias_sweep(c); break;
    case config::Command::consistency_check: run = run_consistency_check(c); break;
    case config::Command::example_beam: run = run_example_beam(c); break;
    case config::Command::example_no_consistency: run = run_example_no_consistency(c); break;
  }
  Json doc;
  doc["artifact"] = "lowenv";
  doc["version"] = kVersion;
  doc["command"] = config::to_string(c.command);
  doc["config"] = c.echo();
  doc["result"] = std::move(run.summary);
  Json files = Json::array();
  for (const auto& [name, text] : run.files) files.push_back(name);
  doc["files"] = files;

  std::string stem = config::to_string(c.command);
  std::replace(stem.begin(), stem.end(), '-', '_');
  for (const auto& [name, text] : run.files) write_text_file(out_dir / name, text);
  write_text_file(out_dir / (stem + ".json"), to_json_text(doc));
  return doc;
}

/// Full command line: parse, validate, run. Returns the process exit status.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Monte Carlo lower envelopes of expectations over families of distributions", "lowenv"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir = "out";
  std::vector<std::string> route_names;

  struct Sub {
    config::Command command;
    const char* help;
  };
  const Sub subs[] = {
      {config::Command::estimate, "shared-sample lower envelope estimate"},
      {config::Command::bias_sweep, "replicated bias sweep over n, plus the naive sweep"},
      {config::Command::consistency_check, "issue consistency certificates"},
      {config::Command::example_beam, "beam failure probability example"},
      {config::Command::example_no_consistency, "inconsistent binary-density family example"},
  };
  std::vector<std::pair<CLI::App*, config::Command>> commands;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(config::to_string(s.command), s.help);
    sub->add_option("--config", config_path, "JSON config file, or - for stdin");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out-dir", out_dir, "directory for CSV and JSON outputs")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    if (s.command == config::Command::consistency_check) {
      sub->add_option("--route", route_names, "certification route (repeatable)");
    }
    commands.emplace_back(sub, s.command);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  config::Command command = config::Command::estimate;
  for (const auto& [sub, cmd] : commands) {
    if (sub->parsed()) command = cmd;
  }

  try {
    Json root = config_path.empty() ? Json::object() : config::read_json(config_path);
    if (!root.is_object()) throw ConfigError("", "config must be a JSON object");
    if (seed) root["seed"] = *seed;
    if (threads) root["threads"] = *threads;
    if (!route_names.empty()) root["routes"] = route_names;
    const config::RunConfig cfg = config::parse_run_config(command, root);
    const Json doc = execute(cfg, out_dir);
    out << to_json_text(doc);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kComputationError;
  }
}

}  // namespace lowenv::cli
