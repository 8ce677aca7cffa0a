#include "fracbayes/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace fracbayes {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key " + (where.empty() ? it.key() : where + "." + it.key()));
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field " + key + " has the wrong type");
  }
}

void parse_design(const json& j, DesignSpec* out) {
  check_keys(j, {"kind", "d", "vartheta"}, "design");
  const std::string kind = get_or<std::string>(j, "kind", "gaussian_iso");
  if (kind == "gaussian_iso")
    out->kind = DesignSpec::Kind::GaussianIso;
  else if (kind == "unit_sphere")
    out->kind = DesignSpec::Kind::UnitSphere;
  else
    throw ConfigError("design.kind: must be gaussian_iso or unit_sphere");
  out->d = get_or<int>(j, "d", 1);
  out->vartheta = get_or<double>(j, "vartheta", 1.0);
  if (out->d < 1) throw ConfigError("design.d: must be >= 1");
  if (!(out->vartheta > 0.0)) throw ConfigError("design.vartheta: must be > 0");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"base_seed", "output_dir", "jobs", "design", "prior", "ig", "sampler", "study",
                 "simulate", "lemmas"},
             "");

  ExperimentConfig cfg;
  cfg.base_seed = get_or<std::uint64_t>(j, "base_seed", 1);
  cfg.output_dir = get_or<std::string>(j, "output_dir", "out");
  cfg.jobs = get_or<int>(j, "jobs", 0);

  if (j.contains("design")) parse_design(j.at("design"), &cfg.design);

  if (j.contains("prior")) {
    const json& p = j.at("prior");
    check_keys(p, {"kind", "tau", "c1", "p", "v0", "v1"}, "prior");
    const std::string kind = get_or<std::string>(p, "kind", "student");
    if (kind == "student")
      cfg.prior_kind = PriorSpec::Kind::Student;
    else if (kind == "spike_slab")
      cfg.prior_kind = PriorSpec::Kind::SpikeSlab;
    else
      throw ConfigError("prior.kind: must be student or spike_slab");
    cfg.tau = get_or<double>(p, "tau", 0.0);
    cfg.c1 = get_or<double>(p, "c1", 1e6);
    cfg.ss_p = get_or<double>(p, "p", -1.0);
    cfg.ss_v0 = get_or<double>(p, "v0", 0.0);
    cfg.ss_v1 = get_or<double>(p, "v1", 1.0);
    if (!(cfg.c1 > 0.0)) throw ConfigError("prior.c1: must be > 0");
    if (cfg.tau < 0.0) throw ConfigError("prior.tau: must be > 0 when given");
    if (p.contains("p") && !(cfg.ss_p >= 0.0 && cfg.ss_p <= 1.0))
      throw ConfigError("prior.p: must be in [0,1]");
  }

  if (j.contains("ig")) {
    const json& g = j.at("ig");
    check_keys(g, {"a", "b", "n_dependent"}, "ig");
    cfg.ig_a = get_or<double>(g, "a", 2.0);
    cfg.ig_b = get_or<double>(g, "b", 0.0);
    if (!(cfg.ig_a > 0.0)) throw ConfigError("ig.a: must be > 0");
    if (cfg.ig_b < 0.0) throw ConfigError("ig.b: must be > 0 when given");
    if (g.contains("n_dependent")) {
      const json& nd = g.at("n_dependent");
      check_keys(nd, {"n", "alpha"}, "ig.n_dependent");
      InvGammaPrior::NDependent mark;
      mark.n = get_or<int>(nd, "n", 0);
      mark.alpha = get_or<double>(nd, "alpha", 1.0);
      if (mark.n < 1) throw ConfigError("ig.n_dependent.n: must be >= 1");
      if (!(mark.alpha > 0.0 && mark.alpha <= 1.0))
        throw ConfigError("ig.n_dependent.alpha: must be in (0,1]");
      cfg.ig_n_dependent = mark;
    }
  }

  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    check_keys(s, {"algorithm", "alpha", "iterations", "burn_in", "thin", "init", "step_size",
                   "alpha_policy", "policy_t"},
               "sampler");
    cfg.algorithm = get_or<std::string>(s, "algorithm", "student_gibbs");
    if (cfg.algorithm != "student_gibbs" && cfg.algorithm != "spike_slab_gibbs" &&
        cfg.algorithm != "mala")
      throw ConfigError("sampler.algorithm: must be student_gibbs, spike_slab_gibbs or mala");
    cfg.alpha = get_or<double>(s, "alpha", 0.9);
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
      throw ConfigError("sampler.alpha: must be in (0,1]");
    cfg.iterations = get_or<int>(s, "iterations", 10000);
    cfg.burn_in = get_or<int>(s, "burn_in", 2500);
    cfg.thin = get_or<int>(s, "thin", 1);
    if (cfg.iterations < 1) throw ConfigError("sampler.iterations: must be >= 1");
    if (!(cfg.burn_in >= 0 && cfg.burn_in < cfg.iterations))
      throw ConfigError("sampler.burn_in: must satisfy 0 <= burn_in < iterations");
    if (cfg.thin < 1) throw ConfigError("sampler.thin: must be >= 1");
    cfg.init = get_or<std::string>(s, "init", "zero");
    if (cfg.init != "zero" && cfg.init != "truth")
      throw ConfigError("sampler.init: must be zero or truth");
    cfg.step_size = get_or<double>(s, "step_size", 0.0);
    cfg.alpha_policy = get_or<std::string>(s, "alpha_policy", "fixed");
    if (cfg.alpha_policy != "fixed" && cfg.alpha_policy != "one_minus_inv_log_pow")
      throw ConfigError("sampler.alpha_policy: must be fixed or one_minus_inv_log_pow");
    cfg.policy_t = get_or<double>(s, "policy_t", 2.0);
  }

  if (j.contains("study")) {
    const json& s = j.at("study");
    check_keys(s, {"type", "n_grid", "d_grid", "s_grid", "replications", "metrics",
                   "divergence_m", "truth_kind", "c1_small", "band_lo", "band_hi", "sigma0"},
               "study");
    cfg.study_type = get_or<std::string>(s, "type", "none");
    if (cfg.study_type != "none" && cfg.study_type != "rate" && cfg.study_type != "misspec")
      throw ConfigError("study.type: must be none, rate or misspec");
    cfg.n_grid = get_or<std::vector<int>>(s, "n_grid", {});
    cfg.d_grid = get_or<std::vector<int>>(s, "d_grid", {});
    cfg.s_grid = get_or<std::vector<int>>(s, "s_grid", {});
    cfg.replications = get_or<int>(s, "replications", 10);
    cfg.metrics = get_or<std::vector<std::string>>(s, "metrics", {"sq_l2_error"});
    cfg.divergence_m = get_or<int>(s, "divergence_m", 4000);
    cfg.truth_kind = get_or<std::string>(s, "truth_kind", "nonlinear_sin");
    if (cfg.truth_kind != "nonlinear_sin" && cfg.truth_kind != "outside_l1_ball")
      throw ConfigError("study.truth_kind: must be nonlinear_sin or outside_l1_ball");
    cfg.c1_small = get_or<double>(s, "c1_small", 0.0);
    cfg.band_lo = get_or<double>(s, "band_lo", 0.5);
    cfg.band_hi = get_or<double>(s, "band_hi", 2.0);
    cfg.sigma0 = get_or<double>(s, "sigma0", 1.0);
    if (!(cfg.sigma0 > 0.0)) throw ConfigError("study.sigma0: must be > 0");
  }

  if (j.contains("simulate")) {
    const json& s = j.at("simulate");
    check_keys(s, {"n", "s_star", "sigma0", "theta0", "emit_chain_csv"}, "simulate");
    cfg.sim_n = get_or<int>(s, "n", 0);
    cfg.sim_s_star = get_or<int>(s, "s_star", 1);
    cfg.sigma0 = get_or<double>(s, "sigma0", cfg.sigma0);
    cfg.sim_theta0 = get_or<std::vector<double>>(s, "theta0", {});
    cfg.emit_chain_csv = get_or<bool>(s, "emit_chain_csv", false);
    if (cfg.sim_n < 1) throw ConfigError("simulate.n: must be >= 1");
    if (!cfg.sim_theta0.empty() && static_cast<int>(cfg.sim_theta0.size()) != cfg.design.d)
      throw ConfigError("simulate.theta0: length must equal design.d");
    if (cfg.sim_theta0.empty() && (cfg.sim_s_star < 0 || cfg.sim_s_star > cfg.design.d))
      throw ConfigError("simulate.s_star: must be in [0, design.d]");
  }

  if (j.contains("lemmas")) {
    const json& l = j.at("lemmas");
    check_keys(l, {"seed", "a4_eta_grid"}, "lemmas");
    cfg.lemma_seed = get_or<std::uint64_t>(l, "seed", cfg.lemma_seed);
    cfg.a4_eta_grid = get_or<std::vector<double>>(l, "a4_eta_grid", cfg.a4_eta_grid);
    for (double e : cfg.a4_eta_grid)
      if (!(e > 0.0)) throw ConfigError("lemmas.a4_eta_grid: etas must be > 0");
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

ScaledStudentPrior ExperimentConfig::resolved_student(int n, int d) const {
  ScaledStudentPrior prior;
  prior.d = d;
  prior.c1 = c1;
  DesignSpec ds = design;
  ds.d = d;
  prior.tau = tau > 0.0 ? tau : 1.0 / (ds.c_x() * std::sqrt(static_cast<double>(n) * d));
  return prior;
}

SpikeSlabPrior ExperimentConfig::resolved_spike_slab(int n, int d) const {
  SpikeSlabPrior prior;
  prior.d = d;
  prior.p = ss_p >= 0.0 ? ss_p : 1.0 - std::exp(-1.0 / d);
  prior.v0 = ss_v0 > 0.0 ? ss_v0 : 1.0 / (2.0 * n * d * std::log(2.0));
  prior.v1 = ss_v1;
  return prior;
}

InvGammaPrior ExperimentConfig::resolved_ig(int n) const {
  InvGammaPrior ig;
  ig.a = ig_a;
  ig.b = ig_b > 0.0 ? ig_b : 1.0 / std::sqrt(std::max(n, 1));
  ig.n_dependent = ig_n_dependent;
  return ig;
}

Functional ExperimentConfig::parse_metric(const std::string& name) const {
  if (name == "sq_l2_error") return Functional::sq_l2_error();
  if (name == "sq_l1_error") return Functional::sq_l1_error();
  if (name == "sq_prediction_error") return Functional::sq_prediction_error();
  if (name == "sigma_sq_error") return Functional::sigma_sq_error();
  if (name == "kl") return Functional::joint_divergence(DivergenceKind::kl());
  if (name == "hellinger_sq")
    return Functional::joint_divergence(DivergenceKind::hellinger_sq());
  if (name == "tv") return Functional::joint_divergence(DivergenceKind::tv());
  if (name == "renyi") {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("study.metrics: renyi requires sampler.alpha in (0,1)");
    return Functional::joint_divergence(DivergenceKind::renyi(alpha));
  }
  throw ConfigError("study.metrics: unknown metric " + name);
}

RateStudyConfig ExperimentConfig::rate_study() const {
  RateStudyConfig rs;
  rs.n_grid = n_grid;
  rs.d_grid = d_grid;
  rs.s_grid = s_grid;
  rs.design = design;
  rs.prior_kind = prior_kind;
  rs.c1 = c1;
  rs.tau_override = tau;
  rs.ig_a = ig_a;
  rs.ig_b_override = ig_b;
  rs.sampler.algorithm = prior_kind == PriorSpec::Kind::SpikeSlab
                             ? StudySampler::Algorithm::SpikeSlabGibbs
                             : StudySampler::Algorithm::StudentGibbs;
  rs.sampler.alpha = alpha;
  rs.sampler.alpha_policy = alpha_policy == "fixed" ? StudySampler::AlphaPolicy::Fixed
                                                    : StudySampler::AlphaPolicy::OneMinusInvLogPow;
  rs.sampler.policy_t = policy_t;
  rs.sampler.iterations = iterations;
  rs.sampler.burn_in = burn_in;
  rs.sampler.thin = thin;
  rs.sampler.init = init == "truth" ? SamplerConfig::Init::Truth : SamplerConfig::Init::Zero;
  rs.replications = replications;
  rs.metrics.clear();
  for (const std::string& m : metrics) rs.metrics.push_back(parse_metric(m));
  rs.sigma0 = sigma0;
  rs.divergence_m = divergence_m;
  rs.base_seed = base_seed;
  rs.jobs = jobs;
  return rs;
}

MisspecStudyConfig ExperimentConfig::misspec_study() const {
  MisspecStudyConfig ms;
  ms.truth_kind = truth_kind == "outside_l1_ball" ? MisspecStudyConfig::TruthKind::OutsideL1Ball
                                                  : MisspecStudyConfig::TruthKind::NonlinearSin;
  ms.n_grid = n_grid;
  ms.d = design.d;
  ms.design = design;
  if (!sim_theta0.empty())
    ms.theta0 = Eigen::Map<const Eigen::VectorXd>(sim_theta0.data(), sim_theta0.size());
  else
    ms.theta0 = sparse_truth(design.d, std::min(sim_s_star > 0 ? sim_s_star : 2, design.d));
  ms.c1_small = c1_small;
  ms.sampler.alpha = alpha;
  ms.sampler.iterations = iterations;
  ms.sampler.burn_in = burn_in;
  ms.sampler.thin = thin;
  ms.ig_a = ig_a;
  ms.sigma0 = sigma0;
  ms.band_lo = band_lo;
  ms.band_hi = band_hi;
  ms.replications = replications;
  ms.divergence_m = divergence_m;
  ms.base_seed = base_seed;
  ms.jobs = jobs;
  return ms;
}

}  // namespace fracbayes
