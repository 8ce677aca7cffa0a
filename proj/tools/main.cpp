// Command-line entry point: simulate, verify-lemmas, rate-study,
// misspec-study, all driven by a JSON experiment config.

#include <CLI11.hpp>

#include "fracbayes/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fractional and regular posteriors for sparse linear regression"};
  app.require_subcommand(1);

  std::string config_path;
  fracbayes::CliOptions opts;
  std::uint64_t seed = 0;
  int jobs = 0;
  bool seed_given = false, jobs_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "override base_seed")->each([&](const std::string&) {
      seed_given = true;
    });
    sub->add_option("--jobs", jobs, "worker thread cap")->each([&](const std::string&) {
      jobs_given = true;
    });
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate data, run the sampler");
  add_common(simulate);

  CLI::App* lemmas = app.add_subcommand("verify-lemmas", "run the inequality check suite");
  add_common(lemmas);
  lemmas->add_option("--only", opts.only, "run a single lemma id, e.g. A.7");

  CLI::App* rate = app.add_subcommand("rate-study", "concentration-rate scaling study");
  add_common(rate);
  rate->add_flag("--dry-run", opts.dry_run, "print the resolved grid and exit");

  CLI::App* misspec = app.add_subcommand("misspec-study", "misspecification oracle inequality study");
  add_common(misspec);
  misspec->add_flag("--dry-run", opts.dry_run, "print the resolved grid and exit");

  CLI11_PARSE(app, argc, argv);

  if (seed_given) opts.seed_override = seed;
  if (jobs_given) opts.jobs_override = jobs;

  if (simulate->parsed()) return fracbayes::cmd_simulate(config_path, opts);
  if (lemmas->parsed()) return fracbayes::cmd_verify_lemmas(config_path, opts);
  if (rate->parsed()) return fracbayes::cmd_rate_study(config_path, opts);
  return fracbayes::cmd_misspec_study(config_path, opts);
}
