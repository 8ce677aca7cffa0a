// Fits the constants in fracbayes/constants.hpp on the designated
// calibration grid (seeds 9000-9007). Run after sampler changes and paste
// the printed values back into the header; every test asserts on seeds
// disjoint from these.

#include <cmath>
#include <iostream>

#include "fracbayes/experiments.hpp"
#include "fracbayes/priors.hpp"

using namespace fracbayes;

namespace {

double fit_rate_c(DesignSpec::Kind kind, PriorSpec::Kind prior_kind, std::uint64_t seed) {
  RateStudyConfig cfg;
  cfg.design.kind = kind;
  cfg.design.vartheta = 1.0;
  cfg.prior_kind = prior_kind;
  cfg.n_grid = {100, 200, 400};
  cfg.d_grid = {250};
  cfg.s_grid = {2, 5};
  cfg.replications = 4;
  cfg.sampler.alpha = 0.9;
  cfg.sampler.iterations = 2000;
  cfg.sampler.burn_in = 500;
  cfg.metrics = {Functional::joint_divergence(DivergenceKind::renyi(0.9))};
  cfg.divergence_m = 2000;
  cfg.base_seed = seed;

  const RateReport report = run_rate_study(cfg);
  const double alpha = 0.9;
  double c_hat = 0.0;
  for (const RateCell& cell : report.cells) {
    DesignSpec design = cfg.design;
    design.d = cell.d;
    const double c1 = prior_kind == PriorSpec::Kind::SpikeSlab ? 1.0 : cfg.c1;
    const double unit = predicted_rate(cell.n, cell.d, cell.s_star, design.c_x(), c1, 1.0);
    const double cand = cell.mean_over_reps * (1.0 - alpha) / ((1.0 + alpha) * unit);
    c_hat = std::max(c_hat, cand);
    std::cout << "  cell n=" << cell.n << " d=" << cell.d << " s=" << cell.s_star
              << " mean=" << cell.mean_over_reps << " c_hat=" << cand << "\n";
  }
  return 1.5 * c_hat;
}

double fit_misspec_kalpha(std::uint64_t seed) {
  MisspecStudyConfig cfg;
  cfg.truth_kind = MisspecStudyConfig::TruthKind::NonlinearSin;
  cfg.d = 50;
  cfg.design.kind = DesignSpec::Kind::GaussianIso;
  cfg.design.d = 50;
  cfg.theta0 = sparse_truth(50, 3);
  cfg.n_grid = {100, 200};
  cfg.replications = 4;
  cfg.sampler.alpha = 0.9;
  cfg.sampler.iterations = 2000;
  cfg.sampler.burn_in = 500;
  cfg.base_seed = seed;

  const RateReport report = run_misspec_study(cfg);
  double oracle = 0.0;
  for (const RateCell& cell : report.cells)
    if (cell.metric == "oracle_term") oracle = cell.mean_over_reps;
  double k_hat = 0.0;
  for (const RateCell& cell : report.cells) {
    if (cell.metric != "sq_prediction_error_vs_truth") continue;
    const double cand = cell.mean_over_reps / (oracle + cell.predicted_rate);
    k_hat = std::max(k_hat, cand);
    std::cout << "  cell n=" << cell.n << " risk=" << cell.mean_over_reps
              << " oracle=" << oracle << " eps_n=" << cell.predicted_rate
              << " K_hat=" << cand << "\n";
  }
  return 1.5 * k_hat;
}

double fit_spike_slab_mass_k(std::uint64_t seed) {
  double k_hat = 0.0;
  struct Cfg {
    int d, s, n;
    double delta;
  };
  for (const Cfg& c : {Cfg{30, 2, 100, 0.2}, Cfg{20, 2, 100, 0.3}, Cfg{30, 1, 200, 0.25}}) {
    const Eigen::VectorXd theta0 = sparse_truth(c.d, c.s);
    const double p = 1.0 - std::exp(-1.0 / c.d);
    const double v0 = 1.0 / (2.0 * c.n * c.d * std::log(2.0));
    SpikeSlabPrior prior{p, v0, 1.0, c.d};
    const MassEstimate mass = prior_mass_ball(prior, theta0, c.delta, BallNorm::L2, 2000000, seed);
    const double denom = std::max(c.s, 1) * std::log(std::sqrt(c.d) / (p * c.delta));
    const double cand = -std::log(std::max(mass.estimate, 1e-300)) / denom;
    k_hat = std::max(k_hat, cand);
    std::cout << "  d=" << c.d << " s=" << c.s << " delta=" << c.delta
              << " mass=" << mass.estimate << " K_hat=" << cand << "\n";
  }
  return 1.15 * k_hat;
}

double fit_ig_ndep_k() {
  // Deterministic quadrature; the factor only absorbs rounding.
  const LemmaCheckResult base = verify_ig_mass_ndep(2.0, 1.0, 1.0, 0.1, 100);
  const double k_hat = -std::log(base.lhs) / (100 * 0.1);
  std::cout << "  mass=" << base.lhs << " K_hat=" << k_hat << "\n";
  return 1.2 * k_hat;
}

}  // namespace

int main() {
  std::cout << "rate c, gaussian_iso:\n";
  const double c_gauss = fit_rate_c(DesignSpec::Kind::GaussianIso, PriorSpec::Kind::Student, 9000);
  std::cout << "rate c, unit_sphere:\n";
  const double c_sphere = fit_rate_c(DesignSpec::Kind::UnitSphere, PriorSpec::Kind::Student, 9001);
  std::cout << "rate c, spike_slab:\n";
  const double c_ss = fit_rate_c(DesignSpec::Kind::GaussianIso, PriorSpec::Kind::SpikeSlab, 9002);
  std::cout << "misspec K_alpha:\n";
  const double k_alpha = fit_misspec_kalpha(9003);
  std::cout << "spike-slab mass K_v1:\n";
  const double k_v1 = fit_spike_slab_mass_k(9004);
  std::cout << "ig n-dep K:\n";
  const double k_ig = fit_ig_ndep_k();

  std::cout << "\n// paste into include/fracbayes/constants.hpp\n";
  std::cout << "kRateCGaussianIso = " << c_gauss << "\n";
  std::cout << "kRateCUnitSphere = " << c_sphere << "\n";
  std::cout << "kRateCSpikeSlab = " << c_ss << "\n";
  std::cout << "kMisspecKAlpha = " << k_alpha << "\n";
  std::cout << "kSpikeSlabMassK = " << k_v1 << "\n";
  std::cout << "kIgNdepK = " << k_ig << "\n";
  return 0;
}
