#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fracbayes/samplers.hpp"
#include "fracbayes/special_functions.hpp"

using namespace fracbayes;

namespace {

DesignSpec gauss(int d) {
  DesignSpec s;
  s.kind = DesignSpec::Kind::GaussianIso;
  s.d = d;
  return s;
}

Dataset empty_dataset(int d) {
  Dataset data;
  data.x = Eigen::MatrixXd::Zero(0, d);
  data.y = Eigen::VectorXd::Zero(0);
  data.design = gauss(d);
  return data;
}

double ks_statistic(std::vector<double> draws, const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double f = cdf(draws[i]);
    ks = std::max(ks, std::fabs(f - (i + 1) / n));
    ks = std::max(ks, std::fabs(f - i / n));
  }
  return ks;
}

}  // namespace

TEST_CASE("sigma^2 full conditional has the conjugate shape and rate") {
  const Dataset data = generate_dataset(gauss(3), 17, sparse_truth(3, 2), 1.0, 5);
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.3;
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(3, 0.2);
  const double alpha = 0.8;
  const SigmaSqConditional cond = sigma_sq_conditional(data, theta, alpha, ig);
  CHECK(cond.shape == doctest::Approx(2.0 + 17 * 0.8 / 2.0).epsilon(1e-15));
  const double rss = (data.y - data.x * theta).squaredNorm();
  CHECK(cond.rate == doctest::Approx(0.3 + 0.8 * rss / 2.0).epsilon(1e-15));

  // conditional density at 3 test points matches the IG density
  InvGammaPrior conj;
  conj.a = cond.shape;
  conj.b = cond.rate;
  for (double s2 : {0.5, 1.0, 2.0}) {
    const double direct = cond.shape * std::log(cond.rate) - std::lgamma(cond.shape) -
                          (cond.shape + 1.0) * std::log(s2) - cond.rate / s2;
    CHECK(inv_gamma_log_prior(s2, conj) == doctest::Approx(direct).epsilon(1e-10));
  }
}

TEST_CASE("zero-data student gibbs reproduces the prior law") {
  const int d = 3;
  const double tau = 0.7;
  ScaledStudentPrior prior{tau, 1e6, d};
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 1.0;
  SamplerConfig cfg;
  cfg.alpha = 1.0;
  cfg.iterations = 51000;
  cfg.burn_in = 1000;
  cfg.thin = 5;
  cfg.seed = 71;
  const Chain chain = run_student_gibbs(empty_dataset(d), prior, ig, cfg);
  REQUIRE(chain.size() == 10000);

  // moments: E theta = 0, E|theta| = 2 tau / pi per coordinate
  for (int j = 0; j < d; ++j) {
    const Eigen::VectorXd s = chain.theta_component(j);
    const double mean_abs = s.cwiseAbs().mean();
    const double se = std::sqrt((s.cwiseAbs().array() - mean_abs).square().sum() /
                                (s.size() - 1.0) / s.size());
    CHECK(std::fabs(mean_abs - 2.0 * tau / M_PI) < 3.5 * se);
  }

  // Kolmogorov-Smirnov against the exact marginals, 1% critical value
  const double crit = 1.63 / std::sqrt(10000.0);
  std::vector<double> theta_draws(chain.size());
  for (int t = 0; t < chain.size(); ++t) theta_draws[t] = chain.draws[t].theta[0];
  const double scale = tau / std::sqrt(3.0);  // t3 scale of the marginal
  CHECK(ks_statistic(theta_draws, [&](double x) { return student_t3_cdf(x / scale); }) < crit);

  std::vector<double> s2_draws(chain.size());
  for (int t = 0; t < chain.size(); ++t)
    s2_draws[t] = chain.draws[t].sigma * chain.draws[t].sigma;
  CHECK(ks_statistic(s2_draws, [&](double x) { return inv_gamma_cdf(2.0, 1.0, x); }) < crit);
}

TEST_CASE("spike slab with p = 1 matches the conjugate ridge posterior mean") {
  // A tight variance prior pins sigma^2 so the Gaussian posterior of theta
  // is available in closed form for both solver routes.
  const double sigma0 = 0.8, alpha = 0.85, v1 = 2.0;
  InvGammaPrior ig;
  ig.a = 1e6;
  ig.b = (ig.a + 1.0) * sigma0 * sigma0;

  for (const int d : {3, 8}) {  // n=12: d=3 direct route, d=8 would still be direct; use n=5 for dual
    const int n = d == 3 ? 12 : 5;
    const Dataset data = generate_dataset(gauss(d), n, sparse_truth(d, 2), sigma0, 13);
    SpikeSlabPrior prior{1.0, 0.1, v1, d};
    SamplerConfig cfg;
    cfg.alpha = alpha;
    cfg.iterations = 30000;
    cfg.burn_in = 2000;
    cfg.seed = 29;
    const Chain chain = run_spike_slab_gibbs(data, prior, ig, cfg);

    const double c = alpha / (sigma0 * sigma0);
    Eigen::MatrixXd q = c * data.x.transpose() * data.x;
    q.diagonal().array() += 1.0 / v1;
    const Eigen::VectorXd ridge = q.llt().solve(c * data.x.transpose() * data.y);

    const ChainDiagnostics diag = chain_diagnostics(chain);
    for (int j = 0; j < d; ++j) {
      const double mean = chain.theta_component(j).mean();
      const double tol = std::max(3.0 * diag.mcse_mean[j], 0.01);
      CHECK(std::fabs(mean - ridge[j]) < tol);
    }
  }
}

TEST_CASE("zero-data spike slab indicator frequency matches p") {
  SpikeSlabPrior prior{0.3, 1e-4, 1.0, 4};
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 1.0;
  SamplerConfig cfg;
  cfg.iterations = 21000;
  cfg.burn_in = 1000;
  cfg.seed = 31;
  const Chain chain = run_spike_slab_gibbs(empty_dataset(4), prior, ig, cfg);
  const double freq = chain.aux.mean();
  const double se = std::sqrt(0.3 * 0.7 / (chain.size() * 4.0)) * 3.0;  // generous: draws correlate weakly
  CHECK(std::fabs(freq - 0.3) < std::max(3.0 * se, 0.02));
}

TEST_CASE("student gibbs truncation rejection above 50% is a configuration error") {
  // Data pull the posterior far outside a tiny l1 ball.
  Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(2, 2.0);
  const Dataset data = generate_dataset(gauss(2), 60, theta0, 0.3, 17);
  ScaledStudentPrior prior{0.5, 0.05, 2};
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.1;
  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.seed = 3;
  CHECK_THROWS_AS(run_student_gibbs(data, prior, ig, cfg), SamplerError);
}

TEST_CASE("chains are bit-identical under identical configs") {
  const Dataset data = generate_dataset(gauss(3), 20, sparse_truth(3, 1), 1.0, 23);
  ScaledStudentPrior sprior{0.1, 1e6, 3};
  SpikeSlabPrior ssprior{0.2, 1e-3, 1.0, 3};
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.2;
  SamplerConfig cfg;
  cfg.alpha = 0.9;
  cfg.iterations = 500;
  cfg.burn_in = 100;
  cfg.seed = 77;

  const Chain a = run_student_gibbs(data, sprior, ig, cfg);
  const Chain b = run_student_gibbs(data, sprior, ig, cfg);
  REQUIRE(a.size() == b.size());
  for (int t = 0; t < a.size(); ++t) {
    CHECK(a.draws[t].theta == b.draws[t].theta);
    CHECK(a.draws[t].sigma == b.draws[t].sigma);
  }

  const Chain c = run_spike_slab_gibbs(data, ssprior, ig, cfg);
  const Chain e = run_spike_slab_gibbs(data, ssprior, ig, cfg);
  for (int t = 0; t < c.size(); ++t) CHECK(c.draws[t].theta == e.draws[t].theta);

  cfg.step_size = 0.01;
  const Chain f = run_mala(data, make_student_handle(sprior), ig, cfg);
  const Chain g = run_mala(data, make_student_handle(sprior), ig, cfg);
  for (int t = 0; t < f.size(); ++t) CHECK(f.draws[t].theta == g.draws[t].theta);
}

TEST_CASE("mala gradient matches central finite differences") {
  const Dataset data = generate_dataset(gauss(3), 15, sparse_truth(3, 2), 1.1, 41);
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.25;
  Rng rng(55);
  for (const bool student : {true, false}) {
    const PriorHandle handle = student
                                   ? make_student_handle(ScaledStudentPrior{0.3, 1e6, 3})
                                   : make_spike_slab_handle(SpikeSlabPrior{0.3, 0.01, 1.0, 3});
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd state(4);
      for (int j = 0; j < 3; ++j) state[j] = 0.5 * rng.normal();
      state[3] = rng.uniform(-0.5, 0.5);  // log sigma^2
      const Eigen::VectorXd grad = mala_log_target_gradient(data, handle, ig, 0.8, state);
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-6;
        Eigen::VectorXd hi = state, lo = state;
        hi[j] += h;
        lo[j] -= h;
        const double fd = (mala_log_target(data, handle, ig, 0.8, hi) -
                           mala_log_target(data, handle, ig, 0.8, lo)) /
                          (2.0 * h);
        CHECK(std::fabs(grad[j] - fd) / std::max(1.0, std::fabs(fd)) < 1e-5);
      }
    }
  }
}

TEST_CASE("mala with a vanishing step accepts everything") {
  const Dataset data = generate_dataset(gauss(2), 10, sparse_truth(2, 1), 1.0, 47);
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.3;
  SamplerConfig cfg;
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.seed = 15;
  cfg.step_size = 1e-12;
  const Chain chain = run_mala(data, make_student_handle(ScaledStudentPrior{0.3, 1e6, 2}), ig, cfg);
  CHECK(chain.accept_rate > 0.999);
  CHECK(chain.accept_rate_flagged);  // > 95% is flagged by contract

  SamplerConfig bad = cfg;
  bad.step_size = 0.0;
  CHECK_THROWS_AS(run_mala(data, make_student_handle(ScaledStudentPrior{0.3, 1e6, 2}), ig, bad),
                  std::invalid_argument);
}

TEST_CASE("ess of an iid series is close to its length") {
  Rng rng(91);
  const int n = 4000;
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.normal();
  CHECK(series_ess(s) == doctest::Approx(n).epsilon(0.10));
}

TEST_CASE("ess of an AR(1) series matches the analytic factor") {
  Rng rng(93);
  const double rho = 0.5;
  const int n = 200000;
  Eigen::VectorXd s(n);
  s[0] = rng.normal();
  for (int i = 1; i < n; ++i)
    s[i] = rho * s[i - 1] + std::sqrt(1.0 - rho * rho) * rng.normal();
  // ESS/N = (1-rho)/(1+rho) = 1/3
  CHECK(series_ess(s) / n == doctest::Approx(1.0 / 3.0).epsilon(0.15));
}

TEST_CASE("constant chain is reported degenerate") {
  Chain chain;
  chain.draws.assign(200, ParameterPoint{Eigen::VectorXd::Ones(2), 1.0});
  const ChainDiagnostics diag = chain_diagnostics(chain);
  CHECK(diag.degenerate);
  CHECK(diag.ess_min == 0.0);

  Chain tiny;
  tiny.draws.assign(50, ParameterPoint{Eigen::VectorXd::Ones(1), 1.0});
  CHECK_THROWS_AS(chain_diagnostics(tiny), std::invalid_argument);
}

TEST_CASE("posterior functionals on handcrafted chains") {
  const ParameterPoint truth{sparse_truth(3, 2), 1.0};
  DesignSpec design = gauss(3);

  Chain single;
  single.draws.push_back(truth);
  for (auto f : {Functional::sq_l2_error(), Functional::sq_l1_error(),
                 Functional::sigma_sq_error(), Functional::sq_prediction_error(),
                 Functional::joint_divergence(DivergenceKind::kl()),
                 Functional::joint_divergence(DivergenceKind::renyi(0.5))}) {
    const FunctionalEstimate est = posterior_functional(single, f, truth, design, 2000, 3);
    CHECK(est.mean == 0.0);
    CHECK(est.mcse == 0.0);
  }

  Chain two;
  Eigen::VectorXd up = truth.theta, down = truth.theta;
  up[0] += 1.0;
  down[0] -= 1.0;
  two.draws.push_back(ParameterPoint{up, 1.0});
  two.draws.push_back(ParameterPoint{down, 1.0});
  CHECK(posterior_functional(two, Functional::sq_l2_error(), truth, design, 2000, 3).mean ==
        doctest::Approx(1.0));
}

TEST_CASE("unnormalized posterior differences and the regular/fractional identity") {
  const Dataset data = generate_dataset(gauss(3), 18, sparse_truth(3, 1), 1.0, 61);
  PriorSpec prior;
  prior.kind = PriorSpec::Kind::Student;
  prior.student = ScaledStudentPrior{0.2, 1e6, 3};
  InvGammaPrior ig;
  ig.a = 2.0;
  ig.b = 0.4;

  ParameterPoint p1{Eigen::VectorXd::Constant(3, 0.1), 0.9};
  ParameterPoint p2{Eigen::VectorXd::Constant(3, -0.3), 1.4};

  // alpha = 1 is the regular log posterior
  const double reg = log_posterior_unnormalized(data, prior, ig, p1, 1.0);
  CHECK(reg == doctest::Approx(log_likelihood(data, p1) +
                               student_log_prior(p1.theta, prior.student) +
                               inv_gamma_log_prior(p1.sigma * p1.sigma, ig)));

  // differences are invariant to constants added to the prior log density
  const double d12 = log_posterior_unnormalized(data, prior, ig, p1, 0.7) -
                     log_posterior_unnormalized(data, prior, ig, p2, 0.7);
  CHECK(std::isfinite(d12));

  // Eq.-(6)-style identity: regular posterior of (theta, sigma) equals the
  // fractional posterior of (theta, sqrt(alpha) sigma) with the n-dependent
  // variance prior, up to a constant.
  for (double alpha : {0.3, 0.7, 0.95}) {
    InvGammaPrior ndep = ig;
    ndep.n_dependent = InvGammaPrior::NDependent{data.n(), alpha};
    ParameterPoint q1 = p1, q2 = p2;
    q1.sigma *= std::sqrt(alpha);
    q2.sigma *= std::sqrt(alpha);
    const double lhs = log_posterior_unnormalized(data, prior, ig, p1, 1.0) -
                       log_posterior_unnormalized(data, prior, ig, p2, 1.0);
    const double rhs = log_posterior_unnormalized(data, prior, ndep, q1, alpha) -
                       log_posterior_unnormalized(data, prior, ndep, q2, alpha);
    CHECK(std::fabs(lhs - rhs) < 1e-10 * std::max(1.0, std::fabs(lhs)));
  }
}
