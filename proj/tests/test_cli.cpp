#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lowenv/cli.hpp"

namespace lowenv {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lowenv_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CliResult {
  int status;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lowenv");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int status = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  write_text_file(p, text);
  return p;
}

config::RunConfig parse(config::Command c, const std::string& text) {
  return config::parse_run_config(c, Json::parse(text));
}

std::string config_error(config::Command c, const std::string& text) {
  try {
    parse(c, text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Report, SeventeenDigitsAndNonFinite) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(to_json_text(Json{{"a", std::nan("")}}), "{\n  \"a\": \"NaN\"\n}\n");
  EXPECT_EQ(to_json_text(Json{{"b", Json::array({1.5, -0.25})}, {"a", true}}),
            "{\n  \"b\": [\n    1.5,\n    -0.25\n  ],\n  \"a\": true\n}\n");
}

TEST(Report, CsvHeaderAndLf) {
  CsvTable t({"n", "estimate"});
  t.add_row({CsvTable::cell(std::uint64_t{3}), CsvTable::cell(0.5)});
  EXPECT_EQ(t.text(), "n,estimate\n3,0.5\n");
  EXPECT_THROW(t.add_row({"1"}), std::logic_error);
}

TEST(Config, MinimalEstimateFillsDefaults) {
  const auto c = parse(config::Command::estimate, "{}");
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.n, 100'000u);
  EXPECT_EQ(c.family.kind, "normal");
  EXPECT_EQ(c.backend, Backend::inverse_transform);
  const Json echo = c.echo();
  EXPECT_EQ(echo.at("solver").at("grid_points_per_dim"), 21);
  EXPECT_EQ(echo.at("f").at("kind"), "indicator_g_positive");
}

TEST(Config, UnknownSamplesSuggestsN) {
  const std::string msg = config_error(config::Command::estimate, R"({"samples": 100})");
  EXPECT_NE(msg.find("samples"), std::string::npos);
  EXPECT_NE(msg.find("did you mean \"n\""), std::string::npos) << msg;
}

TEST(Config, NestedTypoSuggestsClosestKey) {
  const std::string msg = config_error(config::Command::example_beam, R"({"beam": {"M_yeild": 0.07}})");
  EXPECT_NE(msg.find("beam.M_yeild"), std::string::npos);
  EXPECT_NE(msg.find("\"M_yield\""), std::string::npos) << msg;
}

TEST(Config, ZeroSigmaNamesTheField) {
  const std::string msg = config_error(
      config::Command::estimate,
      R"({"family": {"kind": "normal", "mu_lower": 0, "mu_upper": 1, "sigma_lower": 0, "sigma_upper": 1}})");
  EXPECT_NE(msg.find("family.sigma_lower"), std::string::npos) << msg;
  EXPECT_NE(msg.find("> 0"), std::string::npos);
  EXPECT_NE(config_error(config::Command::example_beam, R"({"beam": {"sigma_lower": 0}})").find("beam.sigma_lower"),
            std::string::npos);
}

TEST(Config, TypeAndKindErrors) {
  EXPECT_NE(config_error(config::Command::estimate, R"({"n": "many"})").find("n: expected an integer"),
            std::string::npos);
  EXPECT_NE(config_error(config::Command::estimate, R"({"n": 0})").find("n: must be >= 1"), std::string::npos);
  EXPECT_NE(config_error(config::Command::estimate, R"({"central": {"kind": "cauchy"}})").find("central.kind"),
            std::string::npos);
  EXPECT_NE(config_error(config::Command::estimate,
                         R"({"family": {"kind": "finite", "members": [{"kind": "binary", "k": 1, "bits": [1, 1]}]}})")
                .find("family.members[0].bits"),
            std::string::npos);
  EXPECT_NE(config_error(config::Command::consistency_check, R"({"routes": ["magic"]})").find("routes[0]"),
            std::string::npos);
}

TEST(Config, KeysBelongToTheirSubcommand) {
  EXPECT_FALSE(config_error(config::Command::example_no_consistency, R"({"n": 10})").empty());
  EXPECT_TRUE(config_error(config::Command::example_no_consistency, R"({"n_list": [1, 5]})").empty());
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("exit");
  const auto unknown = run_cli({"estimate", "--config", write_config(dir, R"({"samples": 5})").string()});
  EXPECT_EQ(unknown.status, cli::kConfigError);
  EXPECT_NE(unknown.err.find("did you mean \"n\""), std::string::npos);
  EXPECT_EQ(run_cli({"estimate", "--config", (dir / "missing.json").string()}).status, cli::kConfigError);
  EXPECT_EQ(run_cli({"no-such-command"}).status, cli::kConfigError);
  // A cdf-only central law has no density for the importance weights.
  const auto cdf_only = run_cli({"estimate", "--out-dir", dir.string(), "--config",
                                 write_config(dir, R"({"n": 10, "backend": "importance",
                                   "central": {"kind": "cdf_table", "x": [-5, 5], "cdf": [0, 1]}})")
                                     .string()});
  EXPECT_EQ(cdf_only.status, cli::kComputationError) << cdf_only.err;
  EXPECT_FALSE(cdf_only.err.empty());
}

TEST(Cli, EstimateOnSingletonFamily) {
  const fs::path dir = scratch_dir("estimate");
  const auto r = run_cli({"estimate", "--seed", "5", "--out-dir", dir.string(), "--config",
                          write_config(dir, R"({"n": 500, "f": {"kind": "identity"},
                            "family": {"kind": "normal", "mu_lower": 0.5, "mu_upper": 0.5,
                                       "sigma_lower": 1, "sigma_upper": 1}})")
                              .string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json doc = Json::parse(r.out);
  EXPECT_EQ(doc.at("version"), kVersion);
  EXPECT_EQ(doc.at("config").at("seed"), 5);
  const Json& res = doc.at("result");
  EXPECT_EQ(res.at("n"), 500);
  EXPECT_EQ(res.at("seed"), 5);
  EXPECT_EQ(res.at("argmin"), Json::array({0.5, 1.0}));
  EXPECT_NEAR(res.at("value").get<double>(), 0.5, 0.2);
  EXPECT_EQ(slurp(dir / "estimate.json"), r.out);
  EXPECT_EQ(slurp(dir / "estimate.csv").rfind("n,replication,estimate,argmin_0,argmin_1,seed\n", 0), 0u);
}

TEST(Cli, FiniteRouteOnThreeMembers) {
  const fs::path dir = scratch_dir("finite");
  const auto r = run_cli({"consistency-check", "--route", "finite_T", "--out-dir", dir.string(), "--config",
                          write_config(dir, R"({"f": {"kind": "identity"}, "family": {"kind": "finite", "members": [
                            {"kind": "normal", "mu": 0, "sigma": 1},
                            {"kind": "uniform", "a": 0, "b": 1},
                            {"kind": "binary", "k": 1, "bits": [0, 1]}]}})")
                              .string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json cert = Json::parse(r.out).at("result").at("certificates").at(0);
  EXPECT_EQ(cert.at("route"), "finite_T");
  EXPECT_EQ(cert.at("issued"), true);
}

TEST(Cli, InapplicableRouteIsComputationError) {
  const fs::path dir = scratch_dir("inapplicable");
  const auto r = run_cli({"consistency-check", "--route", "gradient_box", "--out-dir", dir.string(), "--config",
                          write_config(dir, R"({"family": {"kind": "binary_D", "k_max": 2}})").string()});
  EXPECT_EQ(r.status, cli::kComputationError);
}

TEST(Cli, NoConsistencyDefaults) {
  const fs::path dir = scratch_dir("nocons");
  const auto r = run_cli({"example-no-consistency", "--out-dir", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const Json res = Json::parse(r.out).at("result");
  EXPECT_EQ(res.at("all_zero"), true);
  EXPECT_GT(res.at("envelope_lower_bound").get<double>(), 1.0);
  EXPECT_EQ(res.at("battery").size(), 20u);
  EXPECT_EQ(res.at("finite_subfamily").at("within_3se"), true);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const std::string cfg = R"({"n_grid": [1, 4], "replications": 50,
    "naive": {"m_grid": [1, 2], "replications": 100}})";
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  const auto ra = run_cli({"bias-sweep", "--out-dir", a.string(), "--config", write_config(a, cfg).string()});
  const auto rb = run_cli(
      {"bias-sweep", "--threads", "3", "--out-dir", b.string(), "--config", write_config(b, cfg).string()});
  ASSERT_EQ(ra.status, 0) << ra.err;
  ASSERT_EQ(rb.status, 0) << rb.err;
  for (const char* name : {"bias_sweep.csv", "naive_sweep.csv"}) EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  // Only the echoed thread count may differ.
  Json ja = Json::parse(slurp(a / "bias_sweep.json"));
  Json jb = Json::parse(slurp(b / "bias_sweep.json"));
  ja["config"].erase("threads");
  jb["config"].erase("threads");
  EXPECT_EQ(ja, jb);
  const std::string text = slurp(a / "bias_sweep.json");
  EXPECT_EQ(text.find(" \n"), std::string::npos);
  EXPECT_EQ(text.find('\r'), std::string::npos);
}

}  // namespace
}  // namespace lowenv
