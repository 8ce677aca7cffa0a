#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "fracbayes/rng.hpp"

namespace fracbayes {

// Product prior with coordinate density proportional to (tau^2 + t^2)^{-2},
// truncated to the l1 ball of radius c1. Equivalently each coordinate is a
// normal/inverse-gamma scale mixture: t | lam ~ N(0, lam), lam ~ IG(3/2, tau^2/2).
struct ScaledStudentPrior {
  double tau = 1.0;
  double c1 = 1e6;
  int d = 1;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("ScaledStudentPrior: tau must be > 0");
    if (!(c1 > 0.0)) throw std::invalid_argument("ScaledStudentPrior: c1 must be > 0");
    if (d < 1) throw std::invalid_argument("ScaledStudentPrior: d must be >= 1");
  }
};

// Per-coordinate two-Gaussian mixture: slab N(0,v1) with weight p, spike
// N(0,v0) with weight 1-p.
struct SpikeSlabPrior {
  double p = 0.5;
  double v0 = 1e-4;
  double v1 = 1.0;
  int d = 1;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("SpikeSlabPrior: p must be in [0,1]");
    if (!(v0 > 0.0 && v0 <= v1)) throw std::invalid_argument("SpikeSlabPrior: need 0 < v0 <= v1");
    if (d < 1) throw std::invalid_argument("SpikeSlabPrior: d must be >= 1");
  }
};

// Inverse-gamma prior for the noise variance sigma^2. The optional
// n_dependent marker switches to the transformed prior IG(n(1-alpha)/2 + a,
// alpha b) that appears when the regular posterior is rewritten as a
// fractional one.
struct InvGammaPrior {
  struct NDependent {
    int n = 0;
    double alpha = 1.0;
  };

  double a = 2.0;
  double b = 0.1;
  std::optional<NDependent> n_dependent;

  double effective_a() const {
    if (n_dependent) return n_dependent->n * (1.0 - n_dependent->alpha) / 2.0 + a;
    return a;
  }
  double effective_b() const {
    if (n_dependent) return n_dependent->alpha * b;
    return b;
  }

  void validate() const {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("InvGammaPrior: a,b must be > 0");
  }
};

// Unnormalized log density: sum_i -2 log(tau^2 + theta_i^2) inside the l1
// ball, -infinity outside.
double student_log_prior(const Eigen::VectorXd& theta, const ScaledStudentPrior& prior);

// Draws via the scale-mixture representation; the whole vector is redrawn
// until it lands inside the l1 ball. Throws when the acceptance rate is
// pathologically small.
Eigen::VectorXd sample_student_prior(const ScaledStudentPrior& prior, std::uint64_t seed);
Eigen::VectorXd sample_student_prior(const ScaledStudentPrior& prior, Rng& rng);

double spike_slab_log_prior(const Eigen::VectorXd& theta, const SpikeSlabPrior& prior);
Eigen::VectorXd sample_spike_slab_prior(const SpikeSlabPrior& prior, Rng& rng);

// Normalized log density of IG(a,b) evaluated at sigma_sq; uses the
// n-dependent pair when flagged.
double inv_gamma_log_prior(double sigma_sq, const InvGammaPrior& prior);
double sample_inv_gamma(const InvGammaPrior& prior, Rng& rng);

// Student prior re-centered at theta0 and restricted to the l1 ball of
// radius 2*d*tau (the translated prior used by the KL and second-moment
// bounds). Draws by rejection from the untruncated product law.
Eigen::VectorXd sample_translated_student(const ScaledStudentPrior& prior,
                                          const Eigen::VectorXd& theta0, Rng& rng);

struct MassEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

enum class BallNorm { L1, L2, Interval };

// Monte-Carlo prior mass of a ball (theta priors) or interval (IG prior).
MassEstimate prior_mass_ball(const ScaledStudentPrior& prior, const Eigen::VectorXd& center,
                             double radius, BallNorm norm, int mc_samples, std::uint64_t seed);
MassEstimate prior_mass_ball(const SpikeSlabPrior& prior, const Eigen::VectorXd& center,
                             double radius, BallNorm norm, int mc_samples, std::uint64_t seed);
MassEstimate prior_mass_ball(const InvGammaPrior& prior, double center, double radius,
                             int mc_samples, std::uint64_t seed);

}  // namespace fracbayes
