#include "fracbayes/model.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fracbayes/csv.hpp"

namespace fracbayes {

namespace sub {
// Stream tags for forked generators, so design rows and noise never share
// a stream.
constexpr std::uint64_t kDesign = 0x11;
constexpr std::uint64_t kNoise = 0x22;
}  // namespace sub

double DesignSpec::c_x() const {
  switch (kind) {
    case Kind::UnitSphere:
      return 1.0;
    case Kind::GaussianIso:
      return vartheta * std::sqrt(static_cast<double>(d));
    case Kind::Custom:
      return custom_c_x;
  }
  return 0.0;
}

Eigen::MatrixXd DesignSpec::gram() const {
  switch (kind) {
    case Kind::GaussianIso:
      return vartheta * vartheta * Eigen::MatrixXd::Identity(d, d);
    case Kind::UnitSphere:
      return Eigen::MatrixXd::Identity(d, d) / static_cast<double>(d);
    case Kind::Custom:
      throw std::invalid_argument("DesignSpec: no closed-form Gram for Custom designs");
  }
  return {};
}

void DesignSpec::validate() const {
  if (d < 1) throw std::invalid_argument("DesignSpec: d must be >= 1");
  if (kind == Kind::GaussianIso && !(vartheta > 0.0))
    throw std::invalid_argument("DesignSpec: vartheta must be > 0");
  if (kind == Kind::Custom && (!custom_row || !(custom_c_x > 0.0)))
    throw std::invalid_argument("DesignSpec: Custom requires a row sampler and C_x");
}

int Dataset::s_star() const {
  if (!truth) return 0;
  int s = 0;
  for (int j = 0; j < truth->theta.size(); ++j)
    if (truth->theta[j] != 0.0) ++s;
  return s;
}

void Dataset::validate() const {
  if (x.rows() != y.size()) throw std::invalid_argument("Dataset: row count of x must equal length of y");
  if (truth) {
    truth->validate();
    if (truth->theta.size() != x.cols())
      throw std::invalid_argument("Dataset: truth dimension mismatch");
  }
}

Eigen::MatrixXd generate_design(const DesignSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("generate_design: n must be >= 1");
  Eigen::MatrixXd x(n, spec.d);
  Rng base(seed, sub::kDesign);
  for (int i = 0; i < n; ++i) {
    Rng row_rng = base.fork(static_cast<std::uint64_t>(i));
    auto row = x.row(i);
    switch (spec.kind) {
      case DesignSpec::Kind::GaussianIso:
        for (int j = 0; j < spec.d; ++j) row[j] = spec.vartheta * row_rng.normal();
        break;
      case DesignSpec::Kind::UnitSphere: {
        double nrm2 = 0.0;
        for (int j = 0; j < spec.d; ++j) {
          row[j] = row_rng.normal();
          nrm2 += row[j] * row[j];
        }
        row /= std::sqrt(nrm2);
        break;
      }
      case DesignSpec::Kind::Custom: {
        Eigen::VectorXd tmp(spec.d);
        spec.custom_row(row_rng, tmp);
        row = tmp;
        break;
      }
    }
  }
  return x;
}

Dataset generate_dataset(const DesignSpec& design, int n,
                         const Eigen::VectorXd& theta0, double sigma0,
                         std::uint64_t seed) {
  if (theta0.size() != design.d)
    throw std::invalid_argument("generate_dataset: theta0 length must equal design.d");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("generate_dataset: sigma0 must be > 0");

  Dataset data;
  data.design = design;
  data.seed = static_cast<std::int64_t>(seed);
  data.x = generate_design(design, n, seed);
  data.y = data.x * theta0;
  Rng noise(seed, sub::kNoise);
  for (int i = 0; i < n; ++i) data.y[i] += sigma0 * noise.normal();
  data.truth = ParameterPoint{theta0, sigma0};
  data.validate();
  return data;
}

double log_likelihood(const Dataset& data, const ParameterPoint& point) {
  point.validate();
  if (point.theta.size() != data.d())
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  const double n = static_cast<double>(data.n());
  const double rss = (data.y - data.x * point.theta).squaredNorm();
  constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
  return -0.5 * n * kLogTwoPi - n * std::log(point.sigma) -
         rss / (2.0 * point.sigma * point.sigma);
}

double fractional_log_likelihood(const Dataset& data, const ParameterPoint& point,
                                 double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("fractional_log_likelihood: alpha must be in (0,1]");
  return alpha * log_likelihood(data, point);
}

Eigen::VectorXd sparse_truth(int d, int s) {
  if (s < 0 || s > d) throw std::invalid_argument("sparse_truth: need 0 <= s <= d");
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(d);
  const double mag = s > 0 ? 1.0 / std::sqrt(static_cast<double>(s)) : 0.0;
  for (int j = 0; j < s; ++j) theta0[j] = (j % 2 == 0 ? mag : -mag);
  return theta0;
}

AssumptionReport check_assumptions(const DesignSpec& design, double sigma0, double band_lo,
                                   double band_hi) {
  design.validate();
  AssumptionReport rep;
  rep.c_x_sq = design.c_x() * design.c_x();
  rep.second_moment_ok = std::isfinite(rep.c_x_sq) && rep.c_x_sq > 0.0;
  const double s02 = sigma0 * sigma0;
  rep.sigma_band_ok = band_lo < s02 && s02 < band_hi;
  if (design.kind == DesignSpec::Kind::Custom) {
    rep.lambda_min_gram = 0.0;  // no closed-form Gram; caller must vouch
    rep.gram_ok = false;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(design.gram());
    rep.lambda_min_gram = eig.eigenvalues().minCoeff();
    rep.gram_ok = rep.lambda_min_gram > 0.0;
  }
  return rep;
}

namespace {

nlohmann::json design_to_json(const DesignSpec& spec) {
  nlohmann::json j;
  switch (spec.kind) {
    case DesignSpec::Kind::GaussianIso:
      j["kind"] = "gaussian_iso";
      j["vartheta"] = spec.vartheta;
      break;
    case DesignSpec::Kind::UnitSphere:
      j["kind"] = "unit_sphere";
      break;
    case DesignSpec::Kind::Custom:
      j["kind"] = "custom";
      break;
  }
  j["d"] = spec.d;
  return j;
}

}  // namespace

void save_dataset_csv(const Dataset& data, const std::string& csv_path) {
  CsvWriter csv(csv_path);
  std::vector<std::string> header{"y"};
  for (int j = 1; j <= data.d(); ++j) header.push_back("x_" + std::to_string(j));
  csv.row(header);
  for (int i = 0; i < data.n(); ++i) {
    std::vector<double> row{data.y[i]};
    for (int j = 0; j < data.d(); ++j) row.push_back(data.x(i, j));
    csv.row(row);
  }
  csv.close();

  nlohmann::json meta;
  meta["seed"] = data.seed;
  meta["design"] = design_to_json(data.design);
  if (data.truth) {
    meta["truth"]["sigma0"] = data.truth->sigma;
    meta["truth"]["theta0"] = std::vector<double>(
        data.truth->theta.data(), data.truth->theta.data() + data.truth->theta.size());
    meta["truth"]["s_star"] = data.s_star();
  }
  std::ofstream out(csv_path + ".meta.json");
  out << meta.dump(2) << "\n";
}

Dataset load_dataset_csv(const std::string& csv_path) {
  auto table = read_csv(csv_path);
  if (table.empty()) throw std::runtime_error("load_dataset_csv: empty file");
  const int n = static_cast<int>(table.size()) - 1;
  const int d = static_cast<int>(table[0].size()) - 1;
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.y[i] = std::stod(table[i + 1][0]);
    for (int j = 0; j < d; ++j) data.x(i, j) = std::stod(table[i + 1][j + 1]);
  }

  std::ifstream in(csv_path + ".meta.json");
  if (in) {
    nlohmann::json meta = nlohmann::json::parse(in);
    data.seed = meta.value("seed", std::int64_t{0});
    if (meta.contains("design")) {
      const auto& dj = meta["design"];
      const std::string kind = dj.value("kind", "gaussian_iso");
      data.design.kind = kind == "unit_sphere" ? DesignSpec::Kind::UnitSphere
                                               : DesignSpec::Kind::GaussianIso;
      data.design.d = dj.value("d", d);
      data.design.vartheta = dj.value("vartheta", 1.0);
    } else {
      data.design.d = d;
    }
    if (meta.contains("truth")) {
      ParameterPoint truth;
      truth.sigma = meta["truth"]["sigma0"].get<double>();
      const auto t0 = meta["truth"]["theta0"].get<std::vector<double>>();
      truth.theta = Eigen::Map<const Eigen::VectorXd>(t0.data(), t0.size());
      data.truth = truth;
    }
  } else {
    data.design.d = d;
  }
  data.validate();
  return data;
}

}  // namespace fracbayes
