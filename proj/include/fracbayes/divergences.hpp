#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "fracbayes/model.hpp"

namespace fracbayes {

// Divergence family between the model laws P_{theta,sigma}. Squared
// Hellinger follows the integral-of-squared-difference convention, so its
// range is [0,2].
struct DivergenceKind {
  enum class Tag { KL, Renyi, HellingerSq, TV };
  Tag tag = Tag::KL;
  double alpha = 0.5;  // Renyi order, strictly inside (0,1)

  static DivergenceKind kl() { return {Tag::KL, 0.0}; }
  static DivergenceKind renyi(double a) { return {Tag::Renyi, a}; }
  static DivergenceKind hellinger_sq() { return {Tag::HellingerSq, 0.0}; }
  static DivergenceKind tv() { return {Tag::TV, 0.0}; }
};

struct DivergenceEstimate {
  enum class Method { ClosedForm, MonteCarloOverX, Quadrature };
  double value = 0.0;
  double std_error = 0.0;  // 0 for exact results
  Method method = Method::ClosedForm;
};

// KL( N(mu1,var1) || N(mu2,var2) ).
double kl_gaussian(double mu1, double var1, double mu2, double var2);

// alpha-Renyi divergence D_alpha( N(mu1,var1) || N(mu2,var2) ) for
// alpha in (0,1). Reduces to alpha*(mu1-mu2)^2/(2 var) at equal variances
// and converges to the KL divergence as alpha -> 1.
double renyi_gaussian(double alpha, double mu1, double var1, double mu2, double var2);

// Squared Hellinger distance, in [0,2].
double hellinger_sq_gaussian(double mu1, double var1, double mu2, double var2);

// Bhattacharyya affinity integral( sqrt(p q) ), in (0,1].
double gaussian_affinity(double mu1, double var1, double mu2, double var2);

// Total variation via adaptive quadrature of (1/2) integral |p - q|.
double tv_gaussian(double mu1, double var1, double mu2, double var2);

// Divergence between the joint laws of (Y, X) sharing the X marginal,
// Monte-Carlo over m fresh design rows. KL/TV average the conditional
// divergences, Hellinger averages the conditional affinity, and Renyi uses
// the log-mean-exp lift (1/(alpha-1)) log E_X exp((alpha-1) D_alpha(cond)).
DivergenceEstimate joint_divergence(const DivergenceKind& kind, const ParameterPoint& point,
                                    const ParameterPoint& truth, const DesignSpec& design,
                                    int m, std::uint64_t seed);

// Same, reusing a precomputed matrix of design rows.
DivergenceEstimate joint_divergence_rows(const DivergenceKind& kind,
                                         const ParameterPoint& point,
                                         const ParameterPoint& truth,
                                         const Eigen::MatrixXd& rows);

// Variance of the log likelihood ratio log(p_{truth}/p_{point}) of a single
// observation under the truth, conditional on X averaged over the design:
// (sigma^2-sigma0^2)^2/(2 sigma^4) + sigma0^2 E_X[(X'(theta-theta0))^2]/sigma^4.
DivergenceEstimate variance_log_ratio(const ParameterPoint& point, const ParameterPoint& truth,
                                      const DesignSpec& design, int m, std::uint64_t seed);

// Constant relating the Renyi divergence to the squared Hellinger distance:
// 2(alpha+1)/(1-alpha) on [0.5,1), 2(alpha+1)/alpha on (0,0.5).
double kappa_alpha(double alpha);

struct CompatibilityNumbers {
  double phi1 = 0.0;  // upper-bounded estimate over random sparse directions
  double phi2 = 0.0;  // exact via support enumeration
};

// Restricted curvature constants of the Gram matrix over s-sparse
// directions. Exact enumeration limits d to 20.
CompatibilityNumbers compatibility_numbers(const Eigen::MatrixXd& gram, int s,
                                           std::uint64_t seed = 1234);

}  // namespace fracbayes
