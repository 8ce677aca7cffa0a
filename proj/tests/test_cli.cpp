#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "fracbayes/cli.hpp"
#include "fracbayes/config.hpp"
#include "fracbayes/csv.hpp"

using namespace fracbayes;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "fracbayes_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string simulate_config(const std::string& out_dir, int seed = 11) {
  return std::string(R"({
  "base_seed": )") +
         std::to_string(seed) + R"(,
  "output_dir": ")" + out_dir +
         R"(",
  "design": {"kind": "gaussian_iso", "d": 4},
  "prior": {"kind": "student"},
  "sampler": {"algorithm": "student_gibbs", "alpha": 0.9, "iterations": 1500, "burn_in": 400},
  "simulate": {"n": 40, "s_star": 2, "sigma0": 1.0, "emit_chain_csv": true}
})";
}

}  // namespace

TEST_CASE("config parsing rejects unknown keys and bad fields") {
  CHECK_THROWS_AS(parse_config_text(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"design": {"kind": "hypercube", "d": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"sampler": {"alpha": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"sampler": {"extra": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);

  // the error message names the offending field
  try {
    parse_config_text(R"({"sampler": {"alpha": 1.5}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }

  const ExperimentConfig ok = parse_config_text(R"({"design": {"kind": "unit_sphere", "d": 7}})");
  CHECK(ok.design.kind == DesignSpec::Kind::UnitSphere);
  CHECK(ok.design.d == 7);
}

TEST_CASE("resolved defaults follow the standard prescriptions") {
  const ExperimentConfig cfg = parse_config_text(R"({"design": {"kind": "gaussian_iso", "d": 10}})");
  const ScaledStudentPrior student = cfg.resolved_student(100, 10);
  // tau = 1/(C_x sqrt(n d)) with C_x = sqrt(d)
  CHECK(student.tau ==
        doctest::Approx(1.0 / (std::sqrt(10.0) * std::sqrt(1000.0))).epsilon(1e-12));
  CHECK(student.c1 == 1e6);

  const SpikeSlabPrior ss = cfg.resolved_spike_slab(100, 10);
  CHECK(ss.p == doctest::Approx(1.0 - std::exp(-0.1)));
  CHECK(ss.v0 == doctest::Approx(1.0 / (2.0 * 100 * 10 * std::log(2.0))));
  CHECK(ss.v1 == 1.0);

  const InvGammaPrior ig = cfg.resolved_ig(100);
  CHECK(ig.a == 2.0);
  CHECK(ig.b == doctest::Approx(0.1));
}

TEST_CASE("simulate runs, writes a summary, and is value-deterministic") {
  const fs::path out = scratch() / "sim_out";
  fs::remove_all(out);
  const std::string cfg = write_config("sim.json", simulate_config(out.string()));
  CHECK(cmd_simulate(cfg) == kOk);
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "chain.csv"));
  REQUIRE(fs::exists(out / "dataset.csv"));

  const std::string first_summary = slurp(out / "summary.json");
  const std::string first_chain = slurp(out / "chain.csv");
  CHECK(cmd_simulate(cfg) == kOk);
  CHECK(slurp(out / "summary.json") == first_summary);
  CHECK(slurp(out / "chain.csv") == first_chain);
}

TEST_CASE("simulate exit codes: config error vs missing parent") {
  const std::string bad = write_config("bad.json", R"({"sampler": {"alpha": 1.5}})");
  CHECK(cmd_simulate(bad) == kConfigError);

  const std::string no_parent = write_config(
      "noparent.json",
      simulate_config((scratch() / "does" / "not" / "exist" / "out").string()));
  CHECK(cmd_simulate(no_parent) == kConfigError);
}

TEST_CASE("seed overrides: flag beats environment beats config") {
  const fs::path out = scratch() / "seed_out";
  fs::remove_all(out);
  const std::string cfg = write_config("seed.json", simulate_config(out.string(), 11));
  CHECK(cmd_simulate(cfg) == kOk);
  const std::string base = slurp(out / "summary.json");

  setenv("FRACBAYES_SEED", "999", 1);
  CHECK(cmd_simulate(cfg) == kOk);
  const std::string env_run = slurp(out / "summary.json");
  CHECK(env_run != base);

  CliOptions opts;
  opts.seed_override = 11;
  CHECK(cmd_simulate(cfg, opts) == kOk);
  CHECK(slurp(out / "summary.json") == base);
  unsetenv("FRACBAYES_SEED");
}

TEST_CASE("verify-lemmas emits one row per check and honors --only") {
  const fs::path out = scratch() / "lemma_out";
  fs::remove_all(out);
  const std::string cfg = write_config("lemmas.json", std::string(R"({
  "output_dir": ")") + out.string() + R"(",
  "lemmas": {"seed": 424243}
})");
  CliOptions only;
  only.only = "A.7";
  CHECK(cmd_verify_lemmas(cfg, only) == kOk);
  auto rows = read_csv((out / "lemmas.csv").string());
  REQUIRE(rows.size() == 2);  // header + exactly one row
  CHECK(rows[1][0] == "A.7");

  CliOptions unknown;
  unknown.only = "A.99";
  CHECK(cmd_verify_lemmas(cfg, unknown) == kConfigError);
}

TEST_CASE("an A.4 precondition violation is reported skipped, not failed") {
  const fs::path out = scratch() / "lemma_skip_out";
  fs::remove_all(out);
  const std::string cfg = write_config("lemmas_skip.json", std::string(R"({
  "output_dir": ")") + out.string() + R"(",
  "lemmas": {"seed": 424245, "a4_eta_grid": [0.4]}
})");
  CliOptions only;
  only.only = "A.4";
  CHECK(cmd_verify_lemmas(cfg, only) == kOk);  // skipped does not fail the run
  auto rows = read_csv((out / "lemmas.csv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][4] == "skipped");
}

TEST_CASE("rate study dry run prints the grid without computing") {
  const fs::path out = scratch() / "rate_out_dry";
  fs::remove_all(out);
  const std::string cfg = write_config("rate.json", std::string(R"({
  "base_seed": 21,
  "output_dir": ")") + out.string() +
                                                        R"(",
  "design": {"kind": "gaussian_iso", "d": 10},
  "prior": {"kind": "student"},
  "sampler": {"algorithm": "student_gibbs", "alpha": 0.9, "iterations": 800, "burn_in": 200},
  "study": {"type": "rate", "n_grid": [40, 80], "d_grid": [10], "s_grid": [2],
            "replications": 3, "metrics": ["sq_l2_error"], "divergence_m": 1000}
})");
  CliOptions dry;
  dry.dry_run = true;
  CHECK(cmd_rate_study(cfg, dry) == kOk);
  CHECK(!fs::exists(out / "cells.csv"));

  const auto start = std::chrono::steady_clock::now();
  CHECK(cmd_rate_study(cfg) == kOk);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 60.0);  // smoke config finishes well inside a minute
  CHECK(fs::exists(out / "cells.csv"));
  CHECK(fs::exists(out / "slopes.csv"));
  CHECK(fs::exists(out / "report.md"));

  // byte-identical rerun
  const std::string first = slurp(out / "cells.csv");
  CHECK(cmd_rate_study(cfg) == kOk);
  CHECK(slurp(out / "cells.csv") == first);

  // wrong study type is a config error
  const std::string wrong = write_config("rate_wrong.json", simulate_config(out.string()));
  CHECK(cmd_rate_study(wrong) == kConfigError);
}

TEST_CASE("misspec study command smoke") {
  const fs::path out = scratch() / "misspec_out";
  fs::remove_all(out);
  const std::string cfg = write_config("misspec.json", std::string(R"({
  "base_seed": 23,
  "output_dir": ")") + out.string() +
                                                            R"(",
  "design": {"kind": "gaussian_iso", "d": 12},
  "prior": {"kind": "student"},
  "sampler": {"algorithm": "student_gibbs", "alpha": 0.9, "iterations": 1200, "burn_in": 300},
  "study": {"type": "misspec", "n_grid": [60], "replications": 3,
            "truth_kind": "nonlinear_sin", "divergence_m": 2000},
  "simulate": {"n": 60, "s_star": 2}
})");
  CHECK(cmd_misspec_study(cfg) == kOk);
  CHECK(fs::exists(out / "cells.csv"));
  const auto cells = parse_cells_csv((out / "cells.csv").string());
  bool has_oracle = false;
  for (const auto& c : cells) has_oracle = has_oracle || c.metric == "oracle_term";
  CHECK(has_oracle);
}

TEST_CASE("the built binary runs end to end") {
  const fs::path out = scratch() / "bin_out";
  fs::remove_all(out);
  const std::string cfg = write_config("bin.json", simulate_config(out.string(), 99));
  const std::string cmd = std::string(FRACBAYES_CLI_PATH) + " simulate " + cfg;
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(out / "summary.json"));

  const std::string bad = std::string(FRACBAYES_CLI_PATH) + " simulate " +
                          write_config("bin_bad.json", R"({"sampler": {"alpha": 1.5}})");
  const int code = std::system(bad.c_str());
  CHECK(WEXITSTATUS(code) == 2);
}
