#include "fracbayes/samplers.hpp"

#include <cmath>
#include <limits>

#include "fracbayes/csv.hpp"

namespace fracbayes {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

double sample_variance(const Eigen::VectorXd& v) {
  const long n = v.size();
  if (n < 2) return 1.0;
  const double mean = v.mean();
  return (v.array() - mean).square().sum() / static_cast<double>(n - 1);
}

// Draws theta ~ N(mean, Q^{-1}) with Q = (alpha/sigma^2) X'X + diag(1/prior_var)
// and mean = Q^{-1} (alpha/sigma^2) X'y. Two routes: a d-dimensional Cholesky
// of Q, or the n-dimensional dual of Bhattacharya et al. when d > n.
class ThetaSampler {
 public:
  ThetaSampler(const Dataset& data, double alpha)
      : x_(data.x), y_(data.y), alpha_(alpha), n_(data.n()), d_(data.d()),
        use_dual_(d_ > n_) {
    if (!use_dual_ && n_ > 0) {
      xtx_ = x_.transpose() * x_;
      xty_ = x_.transpose() * y_;
    }
  }

  Eigen::VectorXd draw(const Eigen::VectorXd& prior_var, double sigma_sq, Rng& rng) {
    Eigen::VectorXd z(d_);
    if (n_ == 0) {
      for (int j = 0; j < d_; ++j) z[j] = std::sqrt(prior_var[j]) * rng.normal();
      return z;
    }
    const double c = alpha_ / sigma_sq;
    if (!use_dual_) {
      Eigen::MatrixXd q = c * xtx_;
      q.diagonal() += prior_var.cwiseInverse();
      Eigen::LLT<Eigen::MatrixXd> llt(q);
      if (llt.info() != Eigen::Success)
        throw SamplerError("theta update: Cholesky factorization failed");
      Eigen::VectorXd mean = llt.solve(c * xty_);
      for (int j = 0; j < d_; ++j) z[j] = rng.normal();
      Eigen::VectorXd theta = mean + llt.matrixU().solve(z);
      if (!theta.allFinite()) throw SamplerError("theta update: non-finite linear solve");
      return theta;
    }
    // Dual route: u ~ N(0,D), v = Phi u + delta, solve (Phi D Phi' + I) w =
    // ytil - v, theta = u + D Phi' w, with Phi = sqrt(c) X.
    const double sc = std::sqrt(c);
    Eigen::VectorXd u(d_);
    for (int j = 0; j < d_; ++j) u[j] = std::sqrt(prior_var[j]) * rng.normal();
    Eigen::VectorXd v = sc * (x_ * u);
    for (int i = 0; i < n_; ++i) v[i] += rng.normal();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n_, n_);
    Eigen::MatrixXd xs = x_ * prior_var.cwiseSqrt().asDiagonal();
    m.selfadjointView<Eigen::Lower>().rankUpdate(xs, c);
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
      throw SamplerError("theta update: dual Cholesky factorization failed");
    Eigen::VectorXd w = llt.solve(sc * y_ - v);
    Eigen::VectorXd theta = u + prior_var.asDiagonal() * (sc * (x_.transpose() * w));
    if (!theta.allFinite()) throw SamplerError("theta update: non-finite linear solve");
    return theta;
  }

 private:
  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  double alpha_;
  int n_, d_;
  bool use_dual_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
};

double init_sigma_sq(const Dataset& data, const SamplerConfig& cfg, const InvGammaPrior& ig) {
  switch (cfg.init) {
    case SamplerConfig::Init::Truth:
      if (!data.truth) throw std::invalid_argument("sampler init Truth requires dataset truth");
      return data.truth->sigma * data.truth->sigma;
    case SamplerConfig::Init::Custom:
      return cfg.custom_init.sigma * cfg.custom_init.sigma;
    case SamplerConfig::Init::Zero:
      break;
  }
  if (data.n() >= 2) return sample_variance(data.y);
  return ig.effective_b() / (ig.effective_a() + 1.0);
}

Eigen::VectorXd init_theta(const Dataset& data, const SamplerConfig& cfg) {
  switch (cfg.init) {
    case SamplerConfig::Init::Truth:
      if (!data.truth) throw std::invalid_argument("sampler init Truth requires dataset truth");
      return data.truth->theta;
    case SamplerConfig::Init::Custom:
      return cfg.custom_init.theta;
    case SamplerConfig::Init::Zero:
      break;
  }
  return Eigen::VectorXd::Zero(data.d());
}

int kept_draws(const SamplerConfig& cfg) {
  return (cfg.iterations - cfg.burn_in + cfg.thin - 1) / cfg.thin;
}

}  // namespace

Eigen::VectorXd Chain::theta_component(int j) const {
  Eigen::VectorXd v(size());
  for (int t = 0; t < size(); ++t) v[t] = draws[t].theta[j];
  return v;
}

Eigen::VectorXd Chain::sigma_series() const {
  Eigen::VectorXd v(size());
  for (int t = 0; t < size(); ++t) v[t] = draws[t].sigma;
  return v;
}

SigmaSqConditional sigma_sq_conditional(const Dataset& data, const Eigen::VectorXd& theta,
                                        double alpha, const InvGammaPrior& ig) {
  const double rss = data.n() > 0 ? (data.y - data.x * theta).squaredNorm() : 0.0;
  return {ig.effective_a() + data.n() * alpha / 2.0,
          ig.effective_b() + alpha * rss / 2.0};
}

Chain run_student_gibbs(const Dataset& data, const ScaledStudentPrior& prior,
                        const InvGammaPrior& ig, const SamplerConfig& cfg) {
  cfg.validate();
  prior.validate();
  ig.validate();
  data.validate();
  if (data.d() != prior.d) throw std::invalid_argument("run_student_gibbs: dimension mismatch");

  const int d = prior.d;
  const double tau_sq = prior.tau * prior.tau;
  Rng rng(cfg.seed, 0x51);
  ThetaSampler theta_sampler(data, cfg.alpha);

  Eigen::VectorXd theta = init_theta(data, cfg);
  double sigma_sq = init_sigma_sq(data, cfg, ig);
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(d);
  if (cfg.init != SamplerConfig::Init::Zero)
    for (int j = 0; j < d; ++j) lambda[j] = theta[j] * theta[j] + tau_sq;

  Chain chain;
  chain.config = cfg;
  chain.draws.reserve(kept_draws(cfg));
  chain.aux.resize(kept_draws(cfg), d);

  long theta_draw_count = 0;
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // theta | lambda, sigma^2: redraw until the l1 constraint holds.
    for (int attempt = 0;; ++attempt) {
      ++theta_draw_count;
      Eigen::VectorXd cand = theta_sampler.draw(lambda, sigma_sq, rng);
      if (cand.lpNorm<1>() <= prior.c1) {
        theta = cand;
        break;
      }
      ++chain.theta_rejections;
      if (attempt >= 10000)
        throw SamplerError("run_student_gibbs: l1 truncation rejects persistently");
    }
    // lambda_j | theta_j ~ IG(2, (theta_j^2 + tau^2)/2)
    for (int j = 0; j < d; ++j)
      lambda[j] = rng.inv_gamma(2.0, (theta[j] * theta[j] + tau_sq) / 2.0);
    // sigma^2 | theta, data
    const SigmaSqConditional cond = sigma_sq_conditional(data, theta, cfg.alpha, ig);
    sigma_sq = rng.inv_gamma(cond.shape, cond.rate);

    if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      chain.draws.push_back(ParameterPoint{theta, std::sqrt(sigma_sq)});
      chain.aux.row(chain.size() - 1) = lambda;
    }
  }
  if (chain.theta_rejections * 2 > theta_draw_count)
    throw SamplerError("run_student_gibbs: l1 rejection rate above 50%; check tau/c1");
  return chain;
}

Chain run_spike_slab_gibbs(const Dataset& data, const SpikeSlabPrior& prior,
                           const InvGammaPrior& ig, const SamplerConfig& cfg) {
  cfg.validate();
  prior.validate();
  ig.validate();
  data.validate();
  if (data.d() != prior.d) throw std::invalid_argument("run_spike_slab_gibbs: dimension mismatch");

  const int d = prior.d;
  Rng rng(cfg.seed, 0x55);
  ThetaSampler theta_sampler(data, cfg.alpha);

  Eigen::VectorXd theta = init_theta(data, cfg);
  double sigma_sq = init_sigma_sq(data, cfg, ig);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(d);
  if (cfg.init != SamplerConfig::Init::Zero)
    for (int j = 0; j < d; ++j) z[j] = theta[j] != 0.0 ? 1.0 : 0.0;

  // Bernoulli odds for z_j: p phi(theta_j;0,v1) : (1-p) phi(theta_j;0,v0).
  const double log_odds_base =
      (prior.p > 0.0 && prior.p < 1.0)
          ? std::log(prior.p) - std::log1p(-prior.p) +
                0.5 * std::log(prior.v0 / prior.v1)
          : 0.0;
  const double curvature = 0.5 * (1.0 / prior.v0 - 1.0 / prior.v1);

  Eigen::VectorXd prior_var(d);
  Chain chain;
  chain.config = cfg;
  chain.draws.reserve(kept_draws(cfg));
  chain.aux.resize(kept_draws(cfg), d);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int j = 0; j < d; ++j) prior_var[j] = z[j] > 0.5 ? prior.v1 : prior.v0;
    theta = theta_sampler.draw(prior_var, sigma_sq, rng);

    if (prior.p <= 0.0) {
      z.setZero();
    } else if (prior.p >= 1.0) {
      z.setOnes();
    } else {
      for (int j = 0; j < d; ++j) {
        const double logit = log_odds_base + curvature * theta[j] * theta[j];
        const double p1 = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit))
                                       : std::exp(logit) / (1.0 + std::exp(logit));
        z[j] = rng.bernoulli(p1) ? 1.0 : 0.0;
      }
    }

    const SigmaSqConditional cond = sigma_sq_conditional(data, theta, cfg.alpha, ig);
    sigma_sq = rng.inv_gamma(cond.shape, cond.rate);

    if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0) {
      chain.draws.push_back(ParameterPoint{theta, std::sqrt(sigma_sq)});
      chain.aux.row(chain.size() - 1) = z;
    }
  }
  return chain;
}

PriorHandle make_student_handle(const ScaledStudentPrior& prior) {
  PriorHandle h;
  h.log_density = [prior](const Eigen::VectorXd& theta) {
    return student_log_prior(theta, prior);
  };
  h.gradient = [prior](const Eigen::VectorXd& theta) {
    const double tau_sq = prior.tau * prior.tau;
    Eigen::VectorXd g(theta.size());
    for (int j = 0; j < theta.size(); ++j)
      g[j] = -4.0 * theta[j] / (tau_sq + theta[j] * theta[j]);
    return g;
  };
  return h;
}

PriorHandle make_spike_slab_handle(const SpikeSlabPrior& prior) {
  PriorHandle h;
  h.log_density = [prior](const Eigen::VectorXd& theta) {
    return spike_slab_log_prior(theta, prior);
  };
  h.gradient = [prior](const Eigen::VectorXd& theta) {
    const double log_p = prior.p > 0.0 ? std::log(prior.p) : -1e300;
    const double log_q = prior.p < 1.0 ? std::log1p(-prior.p) : -1e300;
    Eigen::VectorXd g(theta.size());
    for (int j = 0; j < theta.size(); ++j) {
      const double t = theta[j];
      const double l1 = log_p - 0.5 * std::log(prior.v1) - t * t / (2.0 * prior.v1);
      const double l0 = log_q - 0.5 * std::log(prior.v0) - t * t / (2.0 * prior.v0);
      const double m = std::max(l1, l0);
      const double w1 = std::exp(l1 - m) / (std::exp(l1 - m) + std::exp(l0 - m));
      g[j] = -t * (w1 / prior.v1 + (1.0 - w1) / prior.v0);
    }
    return g;
  };
  return h;
}

double mala_log_target(const Dataset& data, const PriorHandle& prior, const InvGammaPrior& ig,
                       double alpha, const Eigen::VectorXd& state) {
  const int d = data.d();
  const Eigen::VectorXd theta = state.head(d);
  const double u = state[d];
  const double sigma_sq = std::exp(u);
  const double n = static_cast<double>(data.n());
  const double rss = data.n() > 0 ? (data.y - data.x * theta).squaredNorm() : 0.0;
  const double loglik = -0.5 * n * (kLogTwoPi + u) - rss / (2.0 * sigma_sq);
  // + u is the Jacobian of sigma^2 = exp(u).
  return alpha * loglik + prior.log_density(theta) + inv_gamma_log_prior(sigma_sq, ig) + u;
}

Eigen::VectorXd mala_log_target_gradient(const Dataset& data, const PriorHandle& prior,
                                         const InvGammaPrior& ig, double alpha,
                                         const Eigen::VectorXd& state) {
  const int d = data.d();
  const Eigen::VectorXd theta = state.head(d);
  const double u = state[d];
  const double inv_sigma_sq = std::exp(-u);
  Eigen::VectorXd grad(d + 1);
  double rss = 0.0;
  if (data.n() > 0) {
    const Eigen::VectorXd resid = data.y - data.x * theta;
    rss = resid.squaredNorm();
    grad.head(d) = alpha * inv_sigma_sq * (data.x.transpose() * resid) + prior.gradient(theta);
  } else {
    grad.head(d) = prior.gradient(theta);
  }
  grad[d] = -0.5 * alpha * data.n() + 0.5 * alpha * rss * inv_sigma_sq -
            (ig.effective_a() + 1.0) + ig.effective_b() * inv_sigma_sq + 1.0;
  return grad;
}

Chain run_mala(const Dataset& data, const PriorHandle& prior, const InvGammaPrior& ig,
               const SamplerConfig& cfg) {
  cfg.validate();
  ig.validate();
  data.validate();
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("run_mala: step_size must be set");

  const int d = data.d();
  const double h = cfg.step_size;
  Rng rng(cfg.seed, 0x3A);

  Eigen::VectorXd state(d + 1);
  state.head(d) = init_theta(data, cfg);
  state[d] = std::log(init_sigma_sq(data, cfg, ig));

  double logp = mala_log_target(data, prior, ig, cfg.alpha, state);
  Eigen::VectorXd grad = mala_log_target_gradient(data, prior, ig, cfg.alpha, state);

  Chain chain;
  chain.config = cfg;
  chain.draws.reserve(kept_draws(cfg));
  chain.aux.resize(0, 0);
  long accepts = 0;

  Eigen::VectorXd noise(d + 1);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int j = 0; j <= d; ++j) noise[j] = rng.normal();
    const Eigen::VectorXd prop = state + 0.5 * h * grad + std::sqrt(h) * noise;
    const double logp_prop = mala_log_target(data, prior, ig, cfg.alpha, prop);
    double log_accept = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd grad_prop;
    if (std::isfinite(logp_prop)) {
      grad_prop = mala_log_target_gradient(data, prior, ig, cfg.alpha, prop);
      const double fwd = (prop - state - 0.5 * h * grad).squaredNorm();
      const double bwd = (state - prop - 0.5 * h * grad_prop).squaredNorm();
      log_accept = logp_prop - logp + (fwd - bwd) / (2.0 * h);
    }
    if (std::log(rng.uniform()) < log_accept) {
      state = prop;
      logp = logp_prop;
      grad = grad_prop;
      ++accepts;
    }
    if (iter >= cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0)
      chain.draws.push_back(
          ParameterPoint{state.head(d), std::sqrt(std::exp(state[d]))});
  }
  chain.accept_rate = static_cast<double>(accepts) / cfg.iterations;
  chain.accept_rate_flagged = chain.accept_rate < 0.05 || chain.accept_rate > 0.95;
  return chain;
}

double series_ess(const Eigen::VectorXd& series) {
  const long n = series.size();
  if (n < 2) return 0.0;
  const double mean = series.mean();
  const Eigen::VectorXd c = series.array() - mean;
  const double gamma0 = c.squaredNorm() / n;
  if (!(gamma0 > 0.0)) return 0.0;

  auto gamma_at = [&](long k) {
    return c.head(n - k).dot(c.tail(n - k)) / n;
  };
  // Initial positive sequence: accumulate paired autocovariances while the
  // pair sums stay positive.
  double sum = 0.0;
  const long max_pairs = (n - 2) / 2;
  for (long m = 0; m <= max_pairs; ++m) {
    const double pair = gamma_at(2 * m) + gamma_at(2 * m + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  double tact = (2.0 * sum - gamma0) / gamma0;
  if (tact < 1e-12) tact = 1e-12;
  return n / tact;
}

ChainDiagnostics chain_diagnostics(const Chain& chain) {
  if (chain.size() < 100)
    throw std::invalid_argument("chain_diagnostics: need at least 100 post-burn-in draws");
  const int d = static_cast<int>(chain.draws[0].theta.size());
  ChainDiagnostics out;
  out.ess_per_param.resize(d + 1);
  out.mcse_mean.resize(d + 1);
  out.ess_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= d; ++j) {
    const Eigen::VectorXd s = j < d ? chain.theta_component(j) : chain.sigma_series();
    const double ess = series_ess(s);
    out.ess_per_param[j] = ess;
    if (ess <= 0.0) {
      out.degenerate = true;
      out.mcse_mean[j] = 0.0;
      continue;
    }
    const double sd = std::sqrt((s.array() - s.mean()).square().sum() / (s.size() - 1));
    out.mcse_mean[j] = sd / std::sqrt(ess);
    out.ess_min = std::min(out.ess_min, ess);
  }
  if (!std::isfinite(out.ess_min)) out.ess_min = 0.0;
  return out;
}

FunctionalEstimate posterior_functional(const Chain& chain, const Functional& functional,
                                        const ParameterPoint& truth, const DesignSpec& design,
                                        int m, std::uint64_t seed) {
  truth.validate();
  const int T = chain.size();
  if (T == 0) throw std::invalid_argument("posterior_functional: empty chain");
  Eigen::VectorXd f(T);

  switch (functional.tag) {
    case Functional::Tag::SqL2Error:
      for (int t = 0; t < T; ++t) f[t] = (chain.draws[t].theta - truth.theta).squaredNorm();
      break;
    case Functional::Tag::SqL1Error:
      for (int t = 0; t < T; ++t) {
        const double l1 = (chain.draws[t].theta - truth.theta).lpNorm<1>();
        f[t] = l1 * l1;
      }
      break;
    case Functional::Tag::SigmaSqError:
      for (int t = 0; t < T; ++t) {
        const double dev = chain.draws[t].sigma - truth.sigma;
        f[t] = dev * dev;
      }
      break;
    case Functional::Tag::SqPredictionError:
    case Functional::Tag::JointDivergence: {
      const Eigen::MatrixXd rows = generate_design(design, m, seed);
      // One GEMM gives X (theta_t - theta0) for every kept draw.
      Eigen::MatrixXd deltas(truth.theta.size(), T);
      for (int t = 0; t < T; ++t) deltas.col(t) = chain.draws[t].theta - truth.theta;
      const Eigen::MatrixXd shifts = rows * deltas;  // m x T

      if (functional.tag == Functional::Tag::SqPredictionError) {
        for (int t = 0; t < T; ++t) f[t] = shifts.col(t).squaredNorm() / m;
        break;
      }
      const double var0 = truth.sigma * truth.sigma;
      const DivergenceKind kind = functional.divergence;
      for (int t = 0; t < T; ++t) {
        const double var = chain.draws[t].sigma * chain.draws[t].sigma;
        switch (kind.tag) {
          case DivergenceKind::Tag::KL:
            // E_X of the conditional KL is linear in (X'delta)^2.
            f[t] = 0.5 * std::log(var0 / var) +
                   (var + shifts.col(t).squaredNorm() / m) / (2.0 * var0) - 0.5;
            break;
          case DivergenceKind::Tag::HellingerSq: {
            const double pref = std::sqrt(2.0 * std::sqrt(var * var0) / (var + var0));
            const double aff =
                (pref * (-shifts.col(t).array().square() / (4.0 * (var + var0))).exp())
                    .mean();
            f[t] = 2.0 * (1.0 - aff);
            break;
          }
          case DivergenceKind::Tag::Renyi: {
            const double vstar = kind.alpha * var0 + (1.0 - kind.alpha) * var;
            const double logdet =
                (std::log(vstar) - (1.0 - kind.alpha) * std::log(var) -
                 kind.alpha * std::log(var0)) /
                (2.0 * (1.0 - kind.alpha));
            // exponent (alpha-1) D_i, with the constant part pulled out
            const Eigen::ArrayXd s = (kind.alpha - 1.0) * kind.alpha *
                                         shifts.col(t).array().square() / (2.0 * vstar);
            const double smax = s.maxCoeff();
            const double lme = smax + std::log((s - smax).exp().mean());
            f[t] = logdet + lme / (kind.alpha - 1.0);
            break;
          }
          case DivergenceKind::Tag::TV: {
            const DivergenceEstimate est = joint_divergence_rows(
                kind, chain.draws[t], truth, rows);
            f[t] = est.value;
            break;
          }
        }
      }
      break;
    }
  }

  FunctionalEstimate out;
  out.mean = f.mean();
  if (T >= 2) {
    const double ess = series_ess(f);
    const double sd = std::sqrt((f.array() - out.mean).square().sum() / (T - 1));
    out.mcse = ess > 0.0 ? sd / std::sqrt(ess) : 0.0;
  }
  return out;
}

double log_posterior_unnormalized(const Dataset& data, const PriorSpec& prior,
                                  const InvGammaPrior& ig, const ParameterPoint& point,
                                  double alpha) {
  return fractional_log_likelihood(data, point, alpha) + prior.log_density(point.theta) +
         inv_gamma_log_prior(point.sigma * point.sigma, ig);
}

void save_chain_csv(const Chain& chain, const std::string& path) {
  CsvWriter csv(path);
  const int d = chain.size() ? static_cast<int>(chain.draws[0].theta.size()) : 0;
  std::vector<std::string> header;
  for (int j = 1; j <= d; ++j) header.push_back("theta_" + std::to_string(j));
  header.push_back("sigma");
  csv.row(header);
  for (const auto& p : chain.draws) {
    std::vector<double> row(p.theta.data(), p.theta.data() + p.theta.size());
    row.push_back(p.sigma);
    csv.row(row);
  }
  csv.close();
}

}  // namespace fracbayes
