#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fracbayes/divergences.hpp"
#include "fracbayes/model.hpp"
#include "fracbayes/priors.hpp"

namespace fracbayes {

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerConfig {
  enum class Init { Zero, Truth, Custom };

  double alpha = 1.0;  // fractional exponent, (0,1]
  int iterations = 10000;
  int burn_in = 2500;
  int thin = 1;
  Init init = Init::Zero;
  ParameterPoint custom_init;
  std::uint64_t seed = 0;
  double step_size = 0.0;  // MALA only

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw std::invalid_argument("SamplerConfig: alpha must be in (0,1]");
    if (!(burn_in >= 0 && burn_in < iterations))
      throw std::invalid_argument("SamplerConfig: need 0 <= burn_in < iterations");
    if (thin < 1) throw std::invalid_argument("SamplerConfig: thin must be >= 1");
  }
};

// Ordered posterior draws after burn-in and thinning. aux carries the
// per-draw scale-mixture variances (student Gibbs) or slab indicators
// (spike-and-slab Gibbs), one row per kept draw.
struct Chain {
  std::vector<ParameterPoint> draws;
  Eigen::MatrixXd aux;
  double accept_rate = 1.0;      // MALA; Gibbs chains report 1
  long theta_rejections = 0;     // l1-ball redraws inside the theta update
  bool accept_rate_flagged = false;
  SamplerConfig config;

  int size() const { return static_cast<int>(draws.size()); }
  Eigen::VectorXd theta_component(int j) const;
  Eigen::VectorXd sigma_series() const;
};

// Parameters of the conjugate sigma^2 full conditional
// IG(a + n alpha/2, b + alpha RSS/2) under the tempered likelihood.
struct SigmaSqConditional {
  double shape;
  double rate;
};
SigmaSqConditional sigma_sq_conditional(const Dataset& data, const Eigen::VectorXd& theta,
                                        double alpha, const InvGammaPrior& ig);

// Systematic-scan Gibbs on (theta, lambda_1..lambda_d, sigma^2) targeting the
// fractional posterior with the scaled-Student prior. theta draws falling
// outside the l1 ball are redrawn and counted.
Chain run_student_gibbs(const Dataset& data, const ScaledStudentPrior& prior,
                        const InvGammaPrior& ig, const SamplerConfig& cfg);

// Gibbs on (theta, z_1..z_d, sigma^2) with slab indicators z.
Chain run_spike_slab_gibbs(const Dataset& data, const SpikeSlabPrior& prior,
                           const InvGammaPrior& ig, const SamplerConfig& cfg);

// Differentiable prior plugged into MALA; log densities may be unnormalized.
struct PriorHandle {
  std::function<double(const Eigen::VectorXd&)> log_density;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};
PriorHandle make_student_handle(const ScaledStudentPrior& prior);
PriorHandle make_spike_slab_handle(const SpikeSlabPrior& prior);

// Metropolis-adjusted Langevin on (theta, log sigma^2). Acceptance outside
// [5%, 95%] is flagged on the chain.
Chain run_mala(const Dataset& data, const PriorHandle& prior, const InvGammaPrior& ig,
               const SamplerConfig& cfg);

// Log target gradient used by MALA, exposed for finite-difference checks.
// State layout: (theta_1..theta_d, log sigma^2).
Eigen::VectorXd mala_log_target_gradient(const Dataset& data, const PriorHandle& prior,
                                         const InvGammaPrior& ig, double alpha,
                                         const Eigen::VectorXd& state);
double mala_log_target(const Dataset& data, const PriorHandle& prior, const InvGammaPrior& ig,
                       double alpha, const Eigen::VectorXd& state);

struct ChainDiagnostics {
  double ess_min = 0.0;
  Eigen::VectorXd ess_per_param;   // theta coordinates then sigma
  Eigen::VectorXd mcse_mean;
  bool degenerate = false;         // some coordinate had zero variance
};

// Effective sample size per coordinate via autocorrelation truncation
// (initial positive sequence rule); MCSE = sd/sqrt(ESS).
ChainDiagnostics chain_diagnostics(const Chain& chain);

// ESS of a scalar series, same truncation rule. Returns 0 for a constant
// series.
double series_ess(const Eigen::VectorXd& series);

struct Functional {
  enum class Tag {
    JointDivergence,
    SqPredictionError,
    SqL2Error,
    SqL1Error,
    SigmaSqError
  };
  Tag tag = Tag::SqL2Error;
  DivergenceKind divergence;  // JointDivergence only

  static Functional joint_divergence(DivergenceKind k) { return {Tag::JointDivergence, k}; }
  static Functional sq_prediction_error() { return {Tag::SqPredictionError, {}}; }
  static Functional sq_l2_error() { return {Tag::SqL2Error, {}}; }
  static Functional sq_l1_error() { return {Tag::SqL1Error, {}}; }
  static Functional sigma_sq_error() { return {Tag::SigmaSqError, {}}; }
};

struct FunctionalEstimate {
  double mean = 0.0;
  double mcse = 0.0;
};

// Chain average of a per-draw functional against the recorded truth.
// X-expectations are Monte-Carlo over m design rows shared across draws.
FunctionalEstimate posterior_functional(const Chain& chain, const Functional& functional,
                                        const ParameterPoint& truth, const DesignSpec& design,
                                        int m, std::uint64_t seed);

// Tagged union over the two theta priors, for code paths generic in the
// prior choice.
struct PriorSpec {
  enum class Kind { Student, SpikeSlab };
  Kind kind = Kind::Student;
  ScaledStudentPrior student;
  SpikeSlabPrior spike_slab;

  double log_density(const Eigen::VectorXd& theta) const {
    return kind == Kind::Student ? student_log_prior(theta, student)
                                 : spike_slab_log_prior(theta, spike_slab);
  }
  int d() const { return kind == Kind::Student ? student.d : spike_slab.d; }
};

// Unnormalized log posterior: fractional log likelihood plus both prior log
// densities (theta and sigma^2).
double log_posterior_unnormalized(const Dataset& data, const PriorSpec& prior,
                                  const InvGammaPrior& ig, const ParameterPoint& point,
                                  double alpha);

// Serializes kept draws, one row per draw: theta_1..theta_d, sigma.
void save_chain_csv(const Chain& chain, const std::string& path);

}  // namespace fracbayes
