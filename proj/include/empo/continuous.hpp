#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace empo {

/// Per-action Gaussian outcome model: s | a_v ~ N(mu_v, diag(var_v)).
struct GaussianActionModel {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::VectorXd> variances;  // diagonal covariances, all entries > 0

  int n_actions() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  void validate() const;

  static GaussianActionModel parse_json(std::string_view text);
  static GaussianActionModel load_json(const std::filesystem::path& file);
  std::string to_json_string(int indent = 2) const;
};

struct McParams {
  int n_mc = 1000;             // samples per action
  double epsilon_bits = 1e-8;  // convergence threshold on the capacity estimate
  int max_iter = 500;
  std::uint64_t seed = 0;
};

struct McResult {
  double capacity_bits = 0.0;
  std::vector<double> optimal_input;
  int iterations = 0;
  bool converged = false;
};

// Monte Carlo capacity estimate: samples are drawn once per action from a
// per-action generator derived from the seed, cross densities are
// precomputed, then the alternating-maximization update runs on the sampled
// divergence estimates. Bit-reproducible for a fixed seed.
McResult mc_empowerment(const GaussianActionModel& model, const McParams& params);

// Equivalent transformation with isotropic unit noise. Throws when the noise
// covariance has an eigenvalue below 1e-12: a noiseless subchannel makes the
// capacity infinite.
Eigen::MatrixXd whiten(const Eigen::MatrixXd& t_raw, const Eigen::MatrixXd& noise_cov);

struct WaterFillingResult {
  double capacity_bits = 0.0;
  std::vector<double> allocations;  // per subchannel, sums to the power budget
  double water_level = 0.0;
  bool degenerate = false;  // every gain was zero; budget parked on channel 0
};

// Maximize sum of 0.5 log2(1 + sigma_i P_i) subject to sum P_i = P, P_i >= 0.
// Active channels satisfy 1/sigma_i + P_i = water_level.
WaterFillingResult water_filling(std::span<const double> sigmas, double power);

/// S = T A + Z with Z ~ N(0, noise_cov) and input power budget E(A^2) <= power.
struct LinearGaussianChannel {
  Eigen::MatrixXd T;          // sensor_dim x action_dim
  Eigen::MatrixXd noise_cov;  // sensor_dim x sensor_dim, symmetric positive-definite
  double power = 1.0;

  void validate() const;

  static LinearGaussianChannel parse_json(std::string_view text);
  static LinearGaussianChannel load_json(const std::filesystem::path& file);
  std::string to_json_string(int indent = 2) const;
};

struct QlgResult {
  double capacity_bits = 0.0;
  WaterFillingResult water;
  std::vector<double> singular_values;  // of the whitened transformation
};

// Whiten, decompose, water-fill. Singular values below 1e-10 count as
// zero-gain directions and receive no power.
QlgResult qlg_empowerment(const LinearGaussianChannel& channel);

inline constexpr double kSingularValueCutoff = 1e-10;
inline constexpr double kNoiseEigenvalueFloor = 1e-12;
inline constexpr double kDensityFloor = 1e-300;

}  // namespace empo
