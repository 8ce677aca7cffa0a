#include "fracbayes/priors.hpp"

#include <cmath>
#include <limits>

namespace fracbayes {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double log_normal_pdf(double x, double var) {
  return -0.5 * (kLogTwoPi + std::log(var)) - x * x / (2.0 * var);
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double mass_from_hits(long hits, long total, MassEstimate* out) {
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  out->estimate = p;
  out->std_error = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(total));
  return p;
}

}  // namespace

double student_log_prior(const Eigen::VectorXd& theta, const ScaledStudentPrior& prior) {
  prior.validate();
  if (theta.size() != prior.d) throw std::invalid_argument("student_log_prior: dimension mismatch");
  if (theta.lpNorm<1>() > prior.c1) return -std::numeric_limits<double>::infinity();
  const double tau_sq = prior.tau * prior.tau;
  double lp = 0.0;
  for (int j = 0; j < prior.d; ++j) lp -= 2.0 * std::log(tau_sq + theta[j] * theta[j]);
  return lp;
}

Eigen::VectorXd sample_student_prior(const ScaledStudentPrior& prior, Rng& rng) {
  prior.validate();
  const double rate = prior.tau * prior.tau / 2.0;
  Eigen::VectorXd theta(prior.d);
  // Full-vector rejection keeps the truncated law exact.
  for (long attempts = 1; attempts <= 1000000; ++attempts) {
    for (int j = 0; j < prior.d; ++j) {
      const double lam = rng.inv_gamma(1.5, rate);
      theta[j] = std::sqrt(lam) * rng.normal();
    }
    if (theta.lpNorm<1>() <= prior.c1) return theta;
  }
  throw std::runtime_error(
      "sample_student_prior: l1-ball acceptance below 1e-6; tau/c1 are pathological");
}

Eigen::VectorXd sample_student_prior(const ScaledStudentPrior& prior, std::uint64_t seed) {
  Rng rng(seed, 0x57);
  return sample_student_prior(prior, rng);
}

double spike_slab_log_prior(const Eigen::VectorXd& theta, const SpikeSlabPrior& prior) {
  prior.validate();
  if (theta.size() != prior.d) throw std::invalid_argument("spike_slab_log_prior: dimension mismatch");
  const double log_p = prior.p > 0.0 ? std::log(prior.p) : -std::numeric_limits<double>::infinity();
  const double log_q = prior.p < 1.0 ? std::log1p(-prior.p) : -std::numeric_limits<double>::infinity();
  double lp = 0.0;
  for (int j = 0; j < prior.d; ++j) {
    const double t = theta[j];
    lp += log_sum_exp(log_p + log_normal_pdf(t, prior.v1),
                      log_q + log_normal_pdf(t, prior.v0));
  }
  return lp;
}

Eigen::VectorXd sample_spike_slab_prior(const SpikeSlabPrior& prior, Rng& rng) {
  prior.validate();
  Eigen::VectorXd theta(prior.d);
  for (int j = 0; j < prior.d; ++j) {
    const double v = rng.bernoulli(prior.p) ? prior.v1 : prior.v0;
    theta[j] = std::sqrt(v) * rng.normal();
  }
  return theta;
}

double inv_gamma_log_prior(double sigma_sq, const InvGammaPrior& prior) {
  prior.validate();
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("inv_gamma_log_prior: sigma_sq must be > 0");
  const double a = prior.effective_a();
  const double b = prior.effective_b();
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(sigma_sq) - b / sigma_sq;
}

double sample_inv_gamma(const InvGammaPrior& prior, Rng& rng) {
  prior.validate();
  return rng.inv_gamma(prior.effective_a(), prior.effective_b());
}

Eigen::VectorXd sample_translated_student(const ScaledStudentPrior& prior,
                                          const Eigen::VectorXd& theta0, Rng& rng) {
  prior.validate();
  if (theta0.size() != prior.d)
    throw std::invalid_argument("sample_translated_student: dimension mismatch");
  const double ball = 2.0 * prior.d * prior.tau;
  const double rate = prior.tau * prior.tau / 2.0;
  Eigen::VectorXd u(prior.d);
  for (long attempts = 1; attempts <= 1000000; ++attempts) {
    for (int j = 0; j < prior.d; ++j) {
      const double lam = rng.inv_gamma(1.5, rate);
      u[j] = std::sqrt(lam) * rng.normal();
    }
    if (u.lpNorm<1>() <= ball) return theta0 + u;
  }
  throw std::runtime_error("sample_translated_student: rejection acceptance below 1e-6");
}

MassEstimate prior_mass_ball(const ScaledStudentPrior& prior, const Eigen::VectorXd& center,
                             double radius, BallNorm norm, int mc_samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("prior_mass_ball: radius must be > 0");
  if (mc_samples < 1000) throw std::invalid_argument("prior_mass_ball: mc_samples must be >= 1000");
  Rng rng(seed, 0x6d);
  long hits = 0;
  for (int i = 0; i < mc_samples; ++i) {
    const Eigen::VectorXd theta = sample_student_prior(prior, rng);
    const double dist = norm == BallNorm::L1 ? (theta - center).lpNorm<1>()
                                             : (theta - center).norm();
    if (dist <= radius) ++hits;
  }
  MassEstimate est;
  mass_from_hits(hits, mc_samples, &est);
  return est;
}

MassEstimate prior_mass_ball(const SpikeSlabPrior& prior, const Eigen::VectorXd& center,
                             double radius, BallNorm norm, int mc_samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("prior_mass_ball: radius must be > 0");
  if (mc_samples < 1000) throw std::invalid_argument("prior_mass_ball: mc_samples must be >= 1000");
  Rng rng(seed, 0x6e);
  long hits = 0;
  for (int i = 0; i < mc_samples; ++i) {
    const Eigen::VectorXd theta = sample_spike_slab_prior(prior, rng);
    const double dist = norm == BallNorm::L1 ? (theta - center).lpNorm<1>()
                                             : (theta - center).norm();
    if (dist <= radius) ++hits;
  }
  MassEstimate est;
  mass_from_hits(hits, mc_samples, &est);
  return est;
}

MassEstimate prior_mass_ball(const InvGammaPrior& prior, double center, double radius,
                             int mc_samples, std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("prior_mass_ball: radius must be > 0");
  if (mc_samples < 1000) throw std::invalid_argument("prior_mass_ball: mc_samples must be >= 1000");
  Rng rng(seed, 0x6f);
  long hits = 0;
  for (int i = 0; i < mc_samples; ++i) {
    const double s2 = sample_inv_gamma(prior, rng);
    if (std::fabs(s2 - center) < radius) ++hits;
  }
  MassEstimate est;
  mass_from_hits(hits, mc_samples, &est);
  return est;
}

}  // namespace fracbayes
