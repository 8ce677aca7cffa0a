#include "fracbayes/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "fracbayes/quadrature.hpp"

namespace fracbayes {

namespace {

void check_vars(double var1, double var2) {
  if (!(var1 > 0.0) || !(var2 > 0.0))
    throw std::invalid_argument("divergence: variances must be positive");
}

double normal_pdf(double x, double mu, double var) {
  const double z = x - mu;
  return std::exp(-z * z / (2.0 * var)) / std::sqrt(6.283185307179586 * var);
}

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_and_se(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / std::max(n - 1.0, 1.0));
  return {mean, sd / std::sqrt(n)};
}

}  // namespace

double kl_gaussian(double mu1, double var1, double mu2, double var2) {
  check_vars(var1, var2);
  const double dmu = mu1 - mu2;
  const double v = 0.5 * std::log(var2 / var1) + (var1 + dmu * dmu) / (2.0 * var2) - 0.5;
  return v < 0.0 && v > -1e-13 ? 0.0 : v;
}

double renyi_gaussian(double alpha, double mu1, double var1, double mu2, double var2) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("renyi_gaussian: alpha must be in (0,1)");
  check_vars(var1, var2);
  const double vstar = alpha * var2 + (1.0 - alpha) * var1;
  const double dmu = mu1 - mu2;
  const double v = alpha * dmu * dmu / (2.0 * vstar) +
                   (std::log(vstar) - (1.0 - alpha) * std::log(var1) - alpha * std::log(var2)) /
                       (2.0 * (1.0 - alpha));
  return v < 0.0 && v > -1e-13 ? 0.0 : v;
}

double gaussian_affinity(double mu1, double var1, double mu2, double var2) {
  check_vars(var1, var2);
  const double dmu = mu1 - mu2;
  const double vsum = var1 + var2;
  return std::sqrt(2.0 * std::sqrt(var1 * var2) / vsum) * std::exp(-dmu * dmu / (4.0 * vsum));
}

double hellinger_sq_gaussian(double mu1, double var1, double mu2, double var2) {
  return 2.0 * (1.0 - gaussian_affinity(mu1, var1, mu2, var2));
}

double tv_gaussian(double mu1, double var1, double mu2, double var2) {
  check_vars(var1, var2);
  if (mu1 == mu2 && var1 == var2) return 0.0;
  const double s1 = std::sqrt(var1);
  const double s2 = std::sqrt(var2);
  const double lo = std::min(mu1 - 10.0 * s1, mu2 - 10.0 * s2);
  const double hi = std::max(mu1 + 10.0 * s1, mu2 + 10.0 * s2);
  auto f = [&](double x) {
    return std::fabs(normal_pdf(x, mu1, var1) - normal_pdf(x, mu2, var2));
  };
  // |p - q| has kinks at the density crossings; integrating on thirds keeps
  // the adaptive rule away from subtracting across them.
  const double third = (hi - lo) / 3.0;
  double total = 0.0;
  for (int k = 0; k < 3; ++k)
    total += integrate(f, lo + k * third, lo + (k + 1) * third, 1e-11 / 3.0);
  return std::clamp(0.5 * total, 0.0, 1.0);
}

DivergenceEstimate joint_divergence_rows(const DivergenceKind& kind,
                                         const ParameterPoint& point,
                                         const ParameterPoint& truth,
                                         const Eigen::MatrixXd& rows) {
  point.validate();
  truth.validate();
  const long m = rows.rows();
  const double var = point.sigma * point.sigma;
  const double var0 = truth.sigma * truth.sigma;

  DivergenceEstimate out;
  out.method = DivergenceEstimate::Method::MonteCarloOverX;

  if (point.theta == truth.theta && point.sigma == truth.sigma) {
    out.value = 0.0;
    out.std_error = 0.0;
    return out;
  }

  const Eigen::VectorXd shift = rows * (point.theta - truth.theta);

  switch (kind.tag) {
    case DivergenceKind::Tag::KL: {
      std::vector<double> vals(m);
      for (long i = 0; i < m; ++i) vals[i] = kl_gaussian(shift[i], var, 0.0, var0);
      const auto ms = mean_and_se(vals);
      out.value = ms.mean;
      out.std_error = ms.se;
      break;
    }
    case DivergenceKind::Tag::HellingerSq: {
      std::vector<double> vals(m);
      for (long i = 0; i < m; ++i) vals[i] = gaussian_affinity(shift[i], var, 0.0, var0);
      const auto ms = mean_and_se(vals);
      out.value = 2.0 * (1.0 - ms.mean);
      out.std_error = 2.0 * ms.se;
      break;
    }
    case DivergenceKind::Tag::TV: {
      std::vector<double> vals(m);
      for (long i = 0; i < m; ++i) vals[i] = tv_gaussian(shift[i], var, 0.0, var0);
      const auto ms = mean_and_se(vals);
      out.value = ms.mean;
      out.std_error = ms.se;
      break;
    }
    case DivergenceKind::Tag::Renyi: {
      if (!(kind.alpha > 0.0 && kind.alpha < 1.0))
        throw std::invalid_argument("joint_divergence: Renyi alpha must be in (0,1)");
      // (alpha-1) < 0, so average exp((alpha-1) D_i) with max subtraction.
      std::vector<double> s(m);
      double smax = -std::numeric_limits<double>::infinity();
      for (long i = 0; i < m; ++i) {
        s[i] = (kind.alpha - 1.0) * renyi_gaussian(kind.alpha, shift[i], var, 0.0, var0);
        smax = std::max(smax, s[i]);
      }
      std::vector<double> e(m);
      for (long i = 0; i < m; ++i) e[i] = std::exp(s[i] - smax);
      const auto ms = mean_and_se(e);
      if (!(ms.mean > 0.0))
        throw std::runtime_error("joint_divergence: Renyi log-mean-exp underflow");
      out.value = (smax + std::log(ms.mean)) / (kind.alpha - 1.0);
      out.std_error = ms.se / (ms.mean * (1.0 - kind.alpha));
      break;
    }
  }
  if (out.value < 0.0 && out.value > -1e-14) out.value = 0.0;
  return out;
}

DivergenceEstimate joint_divergence(const DivergenceKind& kind, const ParameterPoint& point,
                                    const ParameterPoint& truth, const DesignSpec& design,
                                    int m, std::uint64_t seed) {
  if (m < 1000) throw std::invalid_argument("joint_divergence: m must be >= 1000");
  const Eigen::MatrixXd rows = generate_design(design, m, seed);
  return joint_divergence_rows(kind, point, truth, rows);
}

DivergenceEstimate variance_log_ratio(const ParameterPoint& point, const ParameterPoint& truth,
                                      const DesignSpec& design, int m, std::uint64_t seed) {
  if (m < 1000) throw std::invalid_argument("variance_log_ratio: m must be >= 1000");
  point.validate();
  truth.validate();
  const double var = point.sigma * point.sigma;
  const double var0 = truth.sigma * truth.sigma;
  const double var_term = (var - var0) * (var - var0) / (2.0 * var * var);

  const Eigen::MatrixXd rows = generate_design(design, m, seed);
  const Eigen::VectorXd shift = rows * (point.theta - truth.theta);
  std::vector<double> sq(m);
  for (int i = 0; i < m; ++i) sq[i] = shift[i] * shift[i];
  const auto ms = mean_and_se(sq);

  DivergenceEstimate out;
  out.method = DivergenceEstimate::Method::MonteCarloOverX;
  out.value = var_term + var0 * ms.mean / (var * var);
  out.std_error = var0 * ms.se / (var * var);
  return out;
}

double kappa_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("kappa_alpha: alpha must be in (0,1)");
  if (alpha >= 0.5) return 2.0 * (alpha + 1.0) / (1.0 - alpha);
  return 2.0 * (alpha + 1.0) / alpha;
}

namespace {

void enumerate_supports(int d, int s, int start, std::vector<int>& cur,
                        const std::function<void(const std::vector<int>&)>& visit) {
  if (static_cast<int>(cur.size()) == s) {
    visit(cur);
    return;
  }
  for (int j = start; j < d; ++j) {
    cur.push_back(j);
    enumerate_supports(d, s, j + 1, cur, visit);
    cur.pop_back();
  }
}

}  // namespace

CompatibilityNumbers compatibility_numbers(const Eigen::MatrixXd& gram, int s,
                                           std::uint64_t seed) {
  const int d = static_cast<int>(gram.rows());
  if (gram.cols() != d) throw std::invalid_argument("compatibility_numbers: gram must be square");
  if (s < 1 || s > d) throw std::invalid_argument("compatibility_numbers: need 1 <= s <= d");
  if (d > 20) throw std::invalid_argument("compatibility_numbers: d must be <= 20 for enumeration");

  CompatibilityNumbers out;
  out.phi2 = std::numeric_limits<double>::infinity();
  out.phi1 = std::numeric_limits<double>::infinity();
  Rng rng(seed, 0xC0);
  constexpr int kDirections = 10000;

  // Interlacing makes size-s supports the worst case for phi2, but phi1's
  // objective scales with ||theta||_0, so every support size up to s is
  // searched for it.
  for (int k = 1; k <= s; ++k) {
    std::vector<int> cur;
    enumerate_supports(d, k, 0, cur, [&](const std::vector<int>& supp) {
      Eigen::MatrixXd sub(k, k);
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) sub(r, c) = gram(supp[r], supp[c]);
      if (k == s) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
        out.phi2 = std::min(out.phi2, eig.eigenvalues().minCoeff());
      }
      Eigen::VectorXd v(k);
      for (int t = 0; t < kDirections; ++t) {
        for (int r = 0; r < k; ++r) v[r] = rng.normal();
        const double quad = v.dot(sub * v);
        const double l1 = v.lpNorm<1>();
        out.phi1 = std::min(out.phi1, quad * k / (l1 * l1));
      }
    });
  }
  return out;
}

}  // namespace fracbayes
