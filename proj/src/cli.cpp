#include "fracbayes/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fracbayes/config.hpp"
#include "fracbayes/csv.hpp"
#include "fracbayes/oracle.hpp"

namespace fracbayes {

namespace {

namespace fs = std::filesystem;

ExperimentConfig load_config(const std::string& path, const CliOptions& opts) {
  ExperimentConfig cfg = parse_config(path);
  if (const char* env = std::getenv("FRACBAYES_SEED")) cfg.base_seed = std::strtoull(env, nullptr, 10);
  if (opts.seed_override) cfg.base_seed = *opts.seed_override;
  if (opts.jobs_override) cfg.jobs = *opts.jobs_override;
  return cfg;
}

// Creates output_dir when only the leaf is missing; a missing parent is a
// config error.
void ensure_output_dir(const std::string& out_dir) {
  const fs::path dir(out_dir);
  if (fs::exists(dir)) return;
  if (dir.has_parent_path() && !fs::exists(dir.parent_path()))
    throw ConfigError("output_dir parent does not exist: " + dir.parent_path().string());
  fs::create_directory(dir);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

void write_lemma_csv(const std::vector<LemmaCheckResult>& results, const std::string& path) {
  CsvWriter csv(path);
  csv.row(std::vector<std::string>{"lemma_id", "lhs", "rhs", "margin", "passed", "se",
                                   "digest"});
  for (const auto& r : results)
    csv.row(std::vector<std::string>{
        r.lemma_id, format_double(r.lhs), format_double(r.rhs), format_double(r.margin),
        r.skipped ? "skipped" : (r.passed ? "true" : "false"), format_double(r.mc_std_error),
        r.config_digest});
  csv.close();
}

}  // namespace

int cmd_simulate(const std::string& config_path, const CliOptions& opts) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = load_config(config_path, opts);
    if (cfg.sim_n < 1) throw ConfigError("simulate.n: required for the simulate command");
    ensure_output_dir(cfg.output_dir);

    const int n = cfg.sim_n;
    const int d = cfg.design.d;
    Eigen::VectorXd theta0 =
        cfg.sim_theta0.empty()
            ? sparse_truth(d, cfg.sim_s_star)
            : Eigen::Map<const Eigen::VectorXd>(cfg.sim_theta0.data(), cfg.sim_theta0.size());
    const Dataset data = generate_dataset(cfg.design, n, theta0, cfg.sigma0, cfg.base_seed);
    save_dataset_csv(data, (fs::path(cfg.output_dir) / "dataset.csv").string());

    SamplerConfig scfg;
    scfg.alpha = cfg.alpha;
    scfg.iterations = cfg.iterations;
    scfg.burn_in = cfg.burn_in;
    scfg.thin = cfg.thin;
    scfg.init = cfg.init == "truth" ? SamplerConfig::Init::Truth : SamplerConfig::Init::Zero;
    scfg.seed = cfg.base_seed;
    scfg.step_size = cfg.step_size;

    const InvGammaPrior ig = cfg.resolved_ig(n);
    Chain chain;
    if (cfg.algorithm == "student_gibbs") {
      chain = run_student_gibbs(data, cfg.resolved_student(n, d), ig, scfg);
    } else if (cfg.algorithm == "spike_slab_gibbs") {
      chain = run_spike_slab_gibbs(data, cfg.resolved_spike_slab(n, d), ig, scfg);
    } else {
      const PriorHandle handle = cfg.prior_kind == PriorSpec::Kind::Student
                                     ? make_student_handle(cfg.resolved_student(n, d))
                                     : make_spike_slab_handle(cfg.resolved_spike_slab(n, d));
      if (!(scfg.step_size > 0.0)) throw ConfigError("sampler.step_size: required for mala");
      chain = run_mala(data, handle, ig, scfg);
    }

    const ChainDiagnostics diag = chain_diagnostics(chain);

    nlohmann::json summary;
    summary["n"] = n;
    summary["d"] = d;
    summary["alpha"] = cfg.alpha;
    summary["draws"] = chain.size();
    summary["accept_rate"] = chain.accept_rate;
    summary["accept_rate_flagged"] = chain.accept_rate_flagged;
    summary["theta_rejections"] = chain.theta_rejections;
    summary["ess_min"] = diag.ess_min;
    Eigen::VectorXd post_mean = Eigen::VectorXd::Zero(d);
    for (const auto& p : chain.draws) post_mean += p.theta;
    post_mean /= chain.size();
    summary["posterior_mean_theta"] =
        std::vector<double>(post_mean.data(), post_mean.data() + d);
    summary["posterior_mean_sigma"] = chain.sigma_series().mean();
    for (const auto& [key, fn] :
         std::vector<std::pair<std::string, Functional>>{
             {"sq_l2_error", Functional::sq_l2_error()},
             {"sq_prediction_error", Functional::sq_prediction_error()},
             {"sigma_sq_error", Functional::sigma_sq_error()}}) {
      const FunctionalEstimate est = posterior_functional(
          chain, fn, *data.truth, cfg.design, cfg.divergence_m, cfg.base_seed ^ 0xF00Dull);
      summary["posterior_functionals"][key]["mean"] = est.mean;
      summary["posterior_functionals"][key]["mcse"] = est.mcse;
    }
    std::ofstream out(fs::path(cfg.output_dir) / "summary.json");
    out << summary.dump(2) << "\n";

    if (cfg.emit_chain_csv)
      save_chain_csv(chain, (fs::path(cfg.output_dir) / "chain.csv").string());
    return kOk;
  });
}

int cmd_verify_lemmas(const std::string& config_path, const CliOptions& opts) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = load_config(config_path, opts);
    ensure_output_dir(cfg.output_dir);
    std::vector<LemmaCheckResult> results = run_all_lemma_checks(cfg.lemma_seed, cfg.a4_eta_grid);
    if (!opts.only.empty()) {
      std::vector<LemmaCheckResult> filtered;
      for (const auto& r : results)
        if (r.lemma_id == opts.only) filtered.push_back(r);
      if (filtered.empty()) throw ConfigError("--only: unknown lemma id " + opts.only);
      results = filtered;
    }
    write_lemma_csv(results, (fs::path(cfg.output_dir) / "lemmas.csv").string());
    bool all_ok = true;
    for (const auto& r : results) {
      std::cout << r.lemma_id << ": "
                << (r.skipped ? "precondition-skipped" : (r.passed ? "pass" : "FAIL"))
                << " (lhs=" << r.lhs << ", rhs=" << r.rhs << ")\n";
      if (!r.skipped) all_ok = all_ok && r.passed;
    }
    return all_ok ? kOk : kAssertionFailed;
  });
}

int cmd_rate_study(const std::string& config_path, const CliOptions& opts) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = load_config(config_path, opts);
    if (cfg.study_type != "rate") throw ConfigError("study.type: must be rate for rate-study");
    const RateStudyConfig rs = cfg.rate_study();
    rs.validate();
    if (opts.dry_run) {
      const std::size_t n_cells = rs.n_grid.size() * rs.d_grid.size() * rs.s_grid.size();
      std::cout << "rate study: " << n_cells << " cells x " << rs.replications
                << " replications, metrics:";
      for (const auto& m : cfg.metrics) std::cout << " " << m;
      std::cout << "\n";
      return kOk;
    }
    ensure_output_dir(cfg.output_dir);
    const RateReport report = run_rate_study(rs);
    emit_report(report, cfg.output_dir);
    return report.all_assertions_passed ? kOk : kAssertionFailed;
  });
}

int cmd_misspec_study(const std::string& config_path, const CliOptions& opts) {
  return guarded([&]() -> int {
    const ExperimentConfig cfg = load_config(config_path, opts);
    if (cfg.study_type != "misspec")
      throw ConfigError("study.type: must be misspec for misspec-study");
    const MisspecStudyConfig ms = cfg.misspec_study();
    ms.validate();
    if (opts.dry_run) {
      std::cout << "misspec study: " << ms.n_grid.size() << " cells x " << ms.replications
                << " replications, d=" << ms.d << "\n";
      return kOk;
    }
    ensure_output_dir(cfg.output_dir);
    const RateReport report = run_misspec_study(ms);
    emit_report(report, cfg.output_dir);
    return report.all_assertions_passed ? kOk : kAssertionFailed;
  });
}

}  // namespace fracbayes
