#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "fracbayes/rng.hpp"

namespace fracbayes {

// Regression coefficients plus noise scale; the point all posteriors live over.
struct ParameterPoint {
  Eigen::VectorXd theta;
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("ParameterPoint: sigma must be > 0");
    if (!theta.allFinite()) throw std::invalid_argument("ParameterPoint: theta must be finite");
  }
};

// Law of a single covariate row X_1 together with its dimension d.
struct DesignSpec {
  enum class Kind { GaussianIso, UnitSphere, Custom };

  Kind kind = Kind::GaussianIso;
  int d = 1;
  double vartheta = 1.0;  // N(0, vartheta^2 I_d) scale, GaussianIso only
  // Custom row law: fills a length-d row from the given generator. A second
  // moment bound must be declared alongside it.
  std::function<void(Rng&, Eigen::Ref<Eigen::VectorXd>)> custom_row;
  double custom_c_x = 0.0;

  // Declared second-moment bound C_x with E||X_1||^2 <= C_x^2. Exact for the
  // two built-in laws: UnitSphere rows have norm 1, GaussianIso has
  // E||X_1||^2 = vartheta^2 d.
  double c_x() const;

  // Closed-form Gram matrix G = E[X X^T] for the built-in laws.
  Eigen::MatrixXd gram() const;

  void validate() const;
};

struct Dataset {
  Eigen::MatrixXd x;  // n rows of covariates
  Eigen::VectorXd y;
  std::optional<ParameterPoint> truth;  // (theta0, sigma0) when synthetic
  DesignSpec design;
  std::int64_t seed = 0;

  int n() const { return static_cast<int>(y.size()); }
  int d() const { return static_cast<int>(x.cols()); }
  // Number of nonzero entries of theta0; 0 when no truth is recorded.
  int s_star() const;

  void validate() const;
};

// n i.i.d. rows from the design law. Deterministic given (spec, n, seed).
Eigen::MatrixXd generate_design(const DesignSpec& spec, int n, std::uint64_t seed);

// y_i = x_i' theta0 + sigma0 eps_i with standard normal noise; truth recorded.
Dataset generate_dataset(const DesignSpec& design, int n,
                         const Eigen::VectorXd& theta0, double sigma0,
                         std::uint64_t seed);

double log_likelihood(const Dataset& data, const ParameterPoint& point);

// alpha * log_likelihood, alpha in (0,1].
double fractional_log_likelihood(const Dataset& data, const ParameterPoint& point,
                                 double alpha);

// Norm-controlled sparse truth: first s coordinates hold +-1/sqrt(s) with
// alternating signs, so ||theta0||_2 = 1; s = 0 gives the zero vector.
Eigen::VectorXd sparse_truth(int d, int s);

// The three standing assumptions as checkable config validators: a finite
// declared second-moment bound, sigma0^2 inside the declared band, and a
// strictly positive minimal eigenvalue of the Gram matrix.
struct AssumptionReport {
  bool second_moment_ok = false;
  bool sigma_band_ok = false;
  bool gram_ok = false;
  double c_x_sq = 0.0;
  double lambda_min_gram = 0.0;

  bool all_ok() const { return second_moment_ok && sigma_band_ok && gram_ok; }
};
AssumptionReport check_assumptions(const DesignSpec& design, double sigma0, double band_lo,
                                   double band_hi);

// CSV with header y,x_1..x_d plus a JSON sidecar (<path>.meta.json) carrying
// truth, seed and design metadata.
void save_dataset_csv(const Dataset& data, const std::string& csv_path);
Dataset load_dataset_csv(const std::string& csv_path);

}  // namespace fracbayes
