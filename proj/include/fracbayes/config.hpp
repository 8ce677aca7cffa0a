#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracbayes/experiments.hpp"

namespace fracbayes {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parsed experiment configuration. The JSON document is schema-validated on
// load: unknown keys are rejected and violations name the offending field.
struct ExperimentConfig {
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  int jobs = 0;

  DesignSpec design;

  // prior; zero/negative values mean "derive the default from (n, d, design)"
  PriorSpec::Kind prior_kind = PriorSpec::Kind::Student;
  double tau = 0.0;   // default 1/(C_x sqrt(n d))
  double c1 = 1e6;
  double ss_p = -1.0;  // default 1 - exp(-1/d)
  double ss_v0 = 0.0;  // default 1/(2 n d log 2)
  double ss_v1 = 1.0;

  double ig_a = 2.0;
  double ig_b = 0.0;  // default n^{-1/2}
  std::optional<InvGammaPrior::NDependent> ig_n_dependent;

  std::string algorithm = "student_gibbs";  // student_gibbs | spike_slab_gibbs | mala
  double alpha = 0.9;
  int iterations = 10000;
  int burn_in = 2500;
  int thin = 1;
  std::string init = "zero";  // zero | truth
  double step_size = 0.0;
  std::string alpha_policy = "fixed";  // fixed | one_minus_inv_log_pow
  double policy_t = 2.0;

  std::string study_type = "none";  // none | rate | misspec
  std::vector<int> n_grid, d_grid, s_grid;
  int replications = 10;
  std::vector<std::string> metrics{"sq_l2_error"};
  int divergence_m = 4000;
  std::string truth_kind = "nonlinear_sin";  // nonlinear_sin | outside_l1_ball
  double c1_small = 0.0;
  double band_lo = 0.5;
  double band_hi = 2.0;
  double sigma0 = 1.0;

  int sim_n = 0;
  int sim_s_star = 1;
  std::vector<double> sim_theta0;  // optional explicit truth
  bool emit_chain_csv = false;

  std::uint64_t lemma_seed = 20240901;
  std::vector<double> a4_eta_grid{0.1, 0.01, 0.001};

  // Derived objects.
  ScaledStudentPrior resolved_student(int n, int d) const;
  SpikeSlabPrior resolved_spike_slab(int n, int d) const;
  InvGammaPrior resolved_ig(int n) const;
  RateStudyConfig rate_study() const;
  MisspecStudyConfig misspec_study() const;
  Functional parse_metric(const std::string& name) const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& json_text);

}  // namespace fracbayes
