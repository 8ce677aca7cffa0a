#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fracbayes/model.hpp"
#include "fracbayes/quadrature.hpp"
#include "support/test_oracles.hpp"

using namespace fracbayes;

namespace {

DesignSpec sphere(int d) {
  DesignSpec s;
  s.kind = DesignSpec::Kind::UnitSphere;
  s.d = d;
  return s;
}

DesignSpec gauss(int d, double vartheta = 1.0) {
  DesignSpec s;
  s.kind = DesignSpec::Kind::GaussianIso;
  s.d = d;
  s.vartheta = vartheta;
  return s;
}

}  // namespace

TEST_CASE("unit sphere rows have norm one") {
  const Eigen::MatrixXd x = generate_design(sphere(7), 5, 99);
  for (int i = 0; i < 5; ++i) CHECK(std::fabs(x.row(i).norm() - 1.0) < 1e-12);
}

TEST_CASE("gaussian design second moment matches vartheta^2 d") {
  const int d = 50, n = 10000;
  const Eigen::MatrixXd x = generate_design(gauss(d), n, 1234);
  double mean = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = x.row(i).squaredNorm();
    mean += v;
    ss += v * v;
  }
  mean /= n;
  const double se = std::sqrt((ss / n - mean * mean) / n);
  CHECK(std::fabs(mean - 50.0) < 3.0 * se);
}

TEST_CASE("design generation is deterministic") {
  const Eigen::MatrixXd a = generate_design(gauss(9), 20, 77);
  const Eigen::MatrixXd b = generate_design(gauss(9), 20, 77);
  CHECK(a == b);
  CHECK(generate_design(gauss(9), 20, 78) != a);
}

TEST_CASE("invalid design parameters are rejected") {
  DesignSpec bad = gauss(3, -1.0);
  CHECK_THROWS_AS(generate_design(bad, 5, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_design(gauss(3), 0, 1), std::invalid_argument);
}

TEST_CASE("noiseless limit reproduces X theta0") {
  Eigen::VectorXd theta0(3);
  theta0 << 1.0, -2.0, 0.5;
  const Dataset data = generate_dataset(gauss(3), 40, theta0, 1e-15, 5);
  CHECK((data.y - data.x * theta0).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK(data.s_star() == 3);
}

TEST_CASE("pure noise variance") {
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(2);
  const Dataset data = generate_dataset(gauss(2), 10000, theta0, 1.0, 6);
  const double var = data.y.squaredNorm() / data.n();
  CHECK(std::fabs(var - 1.0) < 3.0 * std::sqrt(2.0 / data.n()));
}

TEST_CASE("dataset generation is reproducible and dimension-checked") {
  Eigen::VectorXd theta0(2);
  theta0 << 1.0, 0.0;
  const Dataset a = generate_dataset(gauss(2), 15, theta0, 0.7, 9);
  const Dataset b = generate_dataset(gauss(2), 15, theta0, 0.7, 9);
  CHECK(a.y == b.y);
  CHECK_THROWS_AS(generate_dataset(gauss(3), 15, theta0, 0.7, 9), std::invalid_argument);
  CHECK_THROWS_AS(generate_dataset(gauss(2), 15, theta0, -1.0, 9), std::invalid_argument);
}

TEST_CASE("standardized residuals pass the normality moment check") {
  Eigen::VectorXd theta0 = sparse_truth(4, 2);
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Dataset data = generate_dataset(gauss(4), 4000, theta0, 1.7, seed);
    const Eigen::VectorXd z = (data.y - data.x * data.truth->theta) / data.truth->sigma;
    const double n = data.n();
    CHECK(std::fabs(z.mean()) < 4.0 / std::sqrt(n));
    const double var = (z.array() - z.mean()).square().sum() / (n - 1);
    CHECK(std::fabs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("second moment stays within the declared C_x^2") {
  for (const DesignSpec& spec : {sphere(6), gauss(6, 0.8)}) {
    const Eigen::MatrixXd x = generate_design(spec, 100000, 21);
    double mean = 0.0, ss = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
      const double v = x.row(i).squaredNorm();
      mean += v;
      ss += v * v;
    }
    mean /= x.rows();
    const double se = std::sqrt(std::max(ss / x.rows() - mean * mean, 0.0) / x.rows());
    CHECK(mean <= spec.c_x() * spec.c_x() + 3.0 * std::max(se, 1e-12));
  }
}

TEST_CASE("log likelihood closed form") {
  Dataset data;
  data.x = Eigen::MatrixXd::Ones(1, 1);
  data.y = Eigen::VectorXd::Ones(1);
  data.design = gauss(1);
  ParameterPoint point{Eigen::VectorXd::Ones(1), 1.0};
  // zero residual, sigma = 1: -log sqrt(2 pi)
  CHECK(log_likelihood(data, point) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));

  // decreases when a residual grows
  ParameterPoint off{Eigen::VectorXd::Zero(1), 1.0};
  CHECK(log_likelihood(data, off) < log_likelihood(data, point));
}

TEST_CASE("log likelihood equals the density product on a random instance") {
  const Dataset data = generate_dataset(gauss(3), 5, sparse_truth(3, 2), 1.3, 31);
  ParameterPoint point{Eigen::VectorXd::Constant(3, 0.2), 0.9};
  double direct = 0.0;
  for (int i = 0; i < 5; ++i)
    direct += std::log(
        testsup::normal_pdf(data.y[i], data.x.row(i).dot(point.theta), point.sigma * point.sigma));
  CHECK(log_likelihood(data, point) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("fractional log likelihood is alpha-homogeneous") {
  const Dataset data = generate_dataset(gauss(2), 12, sparse_truth(2, 1), 1.0, 44);
  ParameterPoint point{Eigen::VectorXd::Constant(2, 0.1), 1.1};
  const double full = log_likelihood(data, point);
  CHECK(fractional_log_likelihood(data, point, 1.0) == full);
  CHECK(fractional_log_likelihood(data, point, 0.5) == doctest::Approx(0.5 * full));
  for (double alpha : {0.12, 0.37, 0.81})
    CHECK(fractional_log_likelihood(data, point, alpha) == doctest::Approx(alpha * full));
  CHECK_THROWS_AS(fractional_log_likelihood(data, point, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(fractional_log_likelihood(data, point, 1.5), std::invalid_argument);
}

TEST_CASE("tempered single-observation density integrates to the alpha normalizer") {
  // One observation with zero mean: integral over y of N(y;0,s^2)^alpha
  // equals (2 pi s^2)^{(1-alpha)/2} / sqrt(alpha).
  const double alpha = 0.6, s2 = 1.7;
  const double integral = integrate(
      [&](double y) { return std::pow(testsup::normal_pdf(y, 0.0, s2), alpha); }, -60.0, 60.0,
      1e-12);
  const double expected = std::pow(2.0 * M_PI * s2, (1.0 - alpha) / 2.0) / std::sqrt(alpha);
  CHECK(integral == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("dataset CSV round trip with sidecar") {
  namespace fs = std::filesystem;
  const Dataset data = generate_dataset(sphere(3), 8, sparse_truth(3, 1), 0.5, 77);
  const std::string path = (fs::temp_directory_path() / "fracbayes_ds_test.csv").string();
  save_dataset_csv(data, path);
  const Dataset back = load_dataset_csv(path);
  CHECK(back.n() == data.n());
  CHECK(back.d() == data.d());
  CHECK((back.y - data.y).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.x - data.x).lpNorm<Eigen::Infinity>() == 0.0);
  REQUIRE(back.truth.has_value());
  CHECK(back.truth->sigma == data.truth->sigma);
  CHECK(back.truth->theta == data.truth->theta);
  CHECK(back.design.kind == DesignSpec::Kind::UnitSphere);
  fs::remove(path);
  fs::remove(path + ".meta.json");
}

TEST_CASE("custom design hook") {
  DesignSpec spec;
  spec.kind = DesignSpec::Kind::Custom;
  spec.d = 3;
  spec.custom_c_x = std::sqrt(3.0);  // Rademacher rows have norm sqrt(d)
  spec.custom_row = [](Rng& rng, Eigen::Ref<Eigen::VectorXd> row) {
    for (int j = 0; j < row.size(); ++j) row[j] = rng.bernoulli(0.5) ? 1.0 : -1.0;
  };
  const Eigen::MatrixXd x = generate_design(spec, 50, 5);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::fabs(x(i, j)) == 1.0);

  DesignSpec bad = spec;
  bad.custom_c_x = 0.0;
  CHECK_THROWS_AS(generate_design(bad, 5, 1), std::invalid_argument);
}

TEST_CASE("assumption validators") {
  DesignSpec gauss_spec = gauss(6, 1.5);
  const AssumptionReport ok = check_assumptions(gauss_spec, 1.0, 0.5, 2.0);
  CHECK(ok.all_ok());
  CHECK(ok.c_x_sq == doctest::Approx(1.5 * 1.5 * 6));
  CHECK(ok.lambda_min_gram == doctest::Approx(2.25));

  // sigma0^2 outside the declared band
  const AssumptionReport band = check_assumptions(gauss_spec, 2.0, 0.5, 2.0);
  CHECK(!band.sigma_band_ok);
  CHECK(!band.all_ok());

  const AssumptionReport sph = check_assumptions(sphere(4), 1.0, 0.5, 2.0);
  CHECK(sph.gram_ok);
  CHECK(sph.lambda_min_gram == doctest::Approx(0.25));
}

TEST_CASE("sparse truth pattern") {
  const Eigen::VectorXd t = sparse_truth(6, 4);
  CHECK(t.norm() == doctest::Approx(1.0));
  CHECK(t[0] == 0.5);
  CHECK(t[1] == -0.5);
  CHECK(t[4] == 0.0);
}
