#include "empo/continuous.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "empo/rng.hpp"
#include "json.hpp"

namespace empo {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double log_gaussian_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& variance) {
  double log_det = 0.0;
  double quad = 0.0;
  for (int q = 0; q < x.size(); ++q) {
    log_det += std::log(variance[q]);
    const double d = x[q] - mean[q];
    quad += d * d / variance[q];
  }
  const double k = static_cast<double>(x.size());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det + quad);
}

}  // namespace

void GaussianActionModel::validate() const {
  if (means.empty()) throw std::invalid_argument("GaussianActionModel: no actions");
  if (means.size() != variances.size()) {
    throw std::invalid_argument("GaussianActionModel: means/variances count mismatch");
  }
  const auto d = means.front().size();
  if (d < 1) throw std::invalid_argument("GaussianActionModel: zero-dimensional outcome");
  for (std::size_t v = 0; v < means.size(); ++v) {
    if (means[v].size() != d || variances[v].size() != d) {
      throw std::invalid_argument("GaussianActionModel: inconsistent dimensions at action " +
                                  std::to_string(v));
    }
    for (int q = 0; q < d; ++q) {
      if (!(variances[v][q] > 0.0)) {
        throw std::invalid_argument("GaussianActionModel: non-positive variance at action " +
                                    std::to_string(v));
      }
    }
  }
}

McResult mc_empowerment(const GaussianActionModel& model, const McParams& params) {
  model.validate();
  if (params.n_mc < 1) throw std::invalid_argument("mc_empowerment: n_mc must be >= 1");
  if (!(params.epsilon_bits > 0.0)) throw std::invalid_argument("mc_empowerment: epsilon must be > 0");
  if (params.max_iter < 1) throw std::invalid_argument("mc_empowerment: max_iter must be >= 1");

  const int n = model.n_actions();
  const int d = model.dim();
  const int n_mc = params.n_mc;

  // Samples drawn once, one generator per action so parallel sampling cannot
  // change the stream assignment.
  std::vector<Eigen::MatrixXd> samples(n);  // d x n_mc per action
  for (int v = 0; v < n; ++v) {
    std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(v)));
    std::normal_distribution<double> normal(0.0, 1.0);
    samples[v].resize(d, n_mc);
    for (int j = 0; j < n_mc; ++j) {
      for (int q = 0; q < d; ++q) {
        samples[v](q, j) = model.means[v][q] + std::sqrt(model.variances[v][q]) * normal(rng);
      }
    }
  }

  // Cross densities p(s_{v,j} | a_i), floored so the logs stay finite.
  std::vector<Eigen::MatrixXd> density(n);  // [v](i, j)
  for (int v = 0; v < n; ++v) {
    density[v].resize(n, n_mc);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n_mc; ++j) {
        const double p = std::exp(
            log_gaussian_density(samples[v].col(j), model.means[i], model.variances[i]));
        density[v](i, j) = std::max(p, kDensityFloor);
      }
    }
  }

  McResult result;
  std::vector<double> p(n, 1.0 / n);
  std::vector<double> dvk(n, 0.0);
  std::vector<double> log_weight(n, 0.0);

  double prev_bits = 0.0;
  for (int k = 1; k <= params.max_iter; ++k) {
    double estimate_nats = 0.0;
    for (int v = 0; v < n; ++v) {
      double acc = 0.0;
      for (int j = 0; j < n_mc; ++j) {
        double mix = 0.0;
        for (int i = 0; i < n; ++i) mix += p[i] * density[v](i, j);
        mix = std::max(mix, kDensityFloor);
        acc += std::log(density[v](v, j) / mix);
      }
      dvk[v] = acc / n_mc;
      estimate_nats += p[v] * dvk[v];
    }
    const double estimate_bits = estimate_nats / kLn2;
    result.iterations = k;

    double max_w = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) {
      log_weight[v] = std::log(p[v]) + dvk[v];
      max_w = std::max(max_w, log_weight[v]);
    }
    double z = 0.0;
    for (int v = 0; v < n; ++v) {
      p[v] = std::exp(log_weight[v] - max_w);
      z += p[v];
    }
    for (int v = 0; v < n; ++v) {
      p[v] /= z;
      if (p[v] < kDensityFloor) p[v] = kDensityFloor;
    }
    double renorm = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& x : p) x /= renorm;

    result.capacity_bits = estimate_bits;
    if (k > 1 && std::abs(estimate_bits - prev_bits) < params.epsilon_bits) {
      result.converged = true;
      break;
    }
    prev_bits = estimate_bits;
  }

  result.optimal_input = std::move(p);
  if (result.capacity_bits < 0.0) result.capacity_bits = 0.0;
  return result;
}

Eigen::MatrixXd whiten(const Eigen::MatrixXd& t_raw, const Eigen::MatrixXd& noise_cov) {
  if (noise_cov.rows() != noise_cov.cols()) {
    throw std::invalid_argument("whiten: noise covariance must be square");
  }
  if (noise_cov.rows() != t_raw.rows()) {
    throw std::invalid_argument("whiten: noise covariance does not match sensor dimension");
  }
  if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("whiten: noise covariance must be symmetric");
  }

  const Eigen::MatrixXd sym = 0.5 * (noise_cov + noise_cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("whiten: eigendecomposition failed");

  Eigen::VectorXd eigenvalues = es.eigenvalues();
  Eigen::MatrixXd u = es.eigenvectors();
  for (int i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] < kNoiseEigenvalueFloor) {
      throw std::invalid_argument(
          "whiten: noiseless subchannel, capacity would be infinite (noise eigenvalue " +
          std::to_string(eigenvalues[i]) + ")");
    }
    // Sign convention: dominant component positive, keeps results reproducible.
    int arg_max = 0;
    for (int r = 1; r < u.rows(); ++r) {
      if (std::abs(u(r, i)) > std::abs(u(arg_max, i))) arg_max = r;
    }
    if (u(arg_max, i) < 0.0) u.col(i) = -u.col(i);
  }

  return eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * u.transpose() * t_raw;
}

WaterFillingResult water_filling(std::span<const double> sigmas, double power) {
  if (!(power > 0.0)) throw std::invalid_argument("water_filling: power must be > 0");
  for (double s : sigmas) {
    if (!(s >= 0.0)) throw std::invalid_argument("water_filling: gains must be >= 0");
  }

  WaterFillingResult result;
  result.allocations.assign(sigmas.size(), 0.0);

  std::vector<int> active;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (sigmas[i] > 0.0) active.push_back(static_cast<int>(i));
  }
  if (active.empty()) {
    result.degenerate = true;
    if (!result.allocations.empty()) result.allocations[0] = power;
    return result;
  }

  std::sort(active.begin(), active.end(),
            [&](int a, int b) { return sigmas[a] > sigmas[b]; });  // lowest 1/sigma first

  // Raise the level over the k best channels until the next channel's noise
  // floor exceeds it.
  const int n_active = static_cast<int>(active.size());
  double inv_sum = 0.0;
  double level = 0.0;
  int used = 0;
  for (int k = 1; k <= n_active; ++k) {
    inv_sum += 1.0 / sigmas[active[k - 1]];
    const double candidate = (power + inv_sum) / k;
    if (k < n_active && candidate > 1.0 / sigmas[active[k]]) continue;
    level = candidate;
    used = k;
    break;
  }

  result.water_level = level;
  for (int k = 0; k < used; ++k) {
    const int i = active[k];
    const double alloc = level - 1.0 / sigmas[i];
    result.allocations[i] = std::max(alloc, 0.0);
    result.capacity_bits += 0.5 * std::log2(1.0 + sigmas[i] * result.allocations[i]);
  }
  return result;
}

void LinearGaussianChannel::validate() const {
  if (T.rows() < 1 || T.cols() < 1) {
    throw std::invalid_argument("LinearGaussianChannel: empty transformation");
  }
  if (noise_cov.rows() != T.rows() || noise_cov.cols() != T.rows()) {
    throw std::invalid_argument("LinearGaussianChannel: noise covariance shape mismatch");
  }
  if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("LinearGaussianChannel: noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (noise_cov + noise_cov.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("LinearGaussianChannel: noise covariance must be positive-definite");
  }
  if (!(power > 0.0)) throw std::invalid_argument("LinearGaussianChannel: power must be > 0");
}

QlgResult qlg_empowerment(const LinearGaussianChannel& channel) {
  channel.validate();
  const Eigen::MatrixXd whitened = whiten(channel.T, channel.noise_cov);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened);

  QlgResult result;
  result.singular_values.assign(svd.singularValues().data(),
                                svd.singularValues().data() + svd.singularValues().size());
  for (double& s : result.singular_values) {
    if (s < kSingularValueCutoff) s = 0.0;  // useless action direction, not an error
  }
  result.water = water_filling(result.singular_values, channel.power);
  result.capacity_bits = result.water.capacity_bits;
  return result;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw std::invalid_argument(context + ": unknown key '" + it.key() + "'");
  }
}

Eigen::MatrixXd matrix_from_json(const json& v, const std::string& context) {
  if (!v.is_array() || v.empty()) throw std::invalid_argument(context + ": expected a matrix");
  const int rows = static_cast<int>(v.size());
  const int cols = static_cast<int>(v.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = v.at(r);
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument(context + ": ragged matrix");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string read_file(const std::filesystem::path& file, const char* what) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + file.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

GaussianActionModel GaussianActionModel::parse_json(std::string_view text) {
  json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("gaussian model: expected a JSON object");
  reject_unknown_keys(doc, {"means", "variances"}, "gaussian model");
  GaussianActionModel model;
  for (const json& row : doc.at("means")) {
    auto values = row.get<std::vector<double>>();
    model.means.push_back(Eigen::Map<Eigen::VectorXd>(values.data(), values.size()));
  }
  for (const json& row : doc.at("variances")) {
    auto values = row.get<std::vector<double>>();
    model.variances.push_back(Eigen::Map<Eigen::VectorXd>(values.data(), values.size()));
  }
  model.validate();
  return model;
}

GaussianActionModel GaussianActionModel::load_json(const std::filesystem::path& file) {
  return parse_json(read_file(file, "gaussian model"));
}

std::string GaussianActionModel::to_json_string(int indent) const {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json means_j = nlohmann::ordered_json::array();
  nlohmann::ordered_json vars_j = nlohmann::ordered_json::array();
  for (const auto& m : means) means_j.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  for (const auto& v : variances) {
    vars_j.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  }
  doc["means"] = std::move(means_j);
  doc["variances"] = std::move(vars_j);
  return doc.dump(indent);
}

LinearGaussianChannel LinearGaussianChannel::parse_json(std::string_view text) {
  json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("channel: expected a JSON object");
  reject_unknown_keys(doc, {"T", "noise_cov", "power"}, "channel");
  LinearGaussianChannel ch;
  ch.T = matrix_from_json(doc.at("T"), "channel T");
  ch.noise_cov = matrix_from_json(doc.at("noise_cov"), "channel noise_cov");
  ch.power = doc.at("power").get<double>();
  ch.validate();
  return ch;
}

LinearGaussianChannel LinearGaussianChannel::load_json(const std::filesystem::path& file) {
  return parse_json(read_file(file, "channel"));
}

std::string LinearGaussianChannel::to_json_string(int indent) const {
  nlohmann::ordered_json doc;
  doc["T"] = matrix_to_json(T);
  doc["noise_cov"] = matrix_to_json(noise_cov);
  doc["power"] = power;
  return doc.dump(indent);
}

}  // namespace empo
