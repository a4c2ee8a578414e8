#include "empo/pendulum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "empo/rng.hpp"

namespace empo {

namespace {

constexpr double kPi = std::numbers::pi;

struct Derivative {
  double d_phi;
  double d_phi_dot;
};

Derivative dynamics(const PendulumParams& p, double phi, double phi_dot, double accel) {
  return {phi_dot, -(p.gravity / p.length) * std::sin(phi) + accel};
}

}  // namespace

void PendulumParams::validate() const {
  if (!(gravity > 0.0)) throw std::invalid_argument("pendulum: gravity must be > 0");
  if (!(length > 0.0)) throw std::invalid_argument("pendulum: length must be > 0");
  if (!(delta_t > 0.0)) throw std::invalid_argument("pendulum: delta_t must be > 0");
  if (horizon < 1) throw std::invalid_argument("pendulum: horizon must be >= 1");
  if (!(power > 0.0)) throw std::invalid_argument("pendulum: power must be > 0");
  if (!(noise_std > 0.0)) throw std::invalid_argument("pendulum: noise_std must be > 0");
  if (a_grid < 2) throw std::invalid_argument("pendulum: a_grid must be >= 2");
  if (substep > 0.0 && substep > delta_t) {
    throw std::invalid_argument("pendulum: substep must not exceed delta_t");
  }
}

double wrap_angle(double phi) {
  phi = std::fmod(phi + kPi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  return phi - kPi;
}

double angle_difference(double a, double b) { return wrap_angle(a - b); }

PendulumState pendulum_step(const PendulumParams& params, const PendulumState& state,
                            double accel) {
  const double h_target = params.resolved_substep();
  const int n_sub = std::max(1, static_cast<int>(std::ceil(params.delta_t / h_target - 1e-12)));
  const double h = params.delta_t / n_sub;

  double phi = state.phi;
  double phi_dot = state.phi_dot;
  for (int i = 0; i < n_sub; ++i) {
    const Derivative k1 = dynamics(params, phi, phi_dot, accel);
    const Derivative k2 = dynamics(params, phi + 0.5 * h * k1.d_phi,
                                   phi_dot + 0.5 * h * k1.d_phi_dot, accel);
    const Derivative k3 = dynamics(params, phi + 0.5 * h * k2.d_phi,
                                   phi_dot + 0.5 * h * k2.d_phi_dot, accel);
    const Derivative k4 = dynamics(params, phi + h * k3.d_phi, phi_dot + h * k3.d_phi_dot, accel);
    phi += h / 6.0 * (k1.d_phi + 2.0 * k2.d_phi + 2.0 * k3.d_phi + k4.d_phi);
    phi_dot +=
        h / 6.0 * (k1.d_phi_dot + 2.0 * k2.d_phi_dot + 2.0 * k3.d_phi_dot + k4.d_phi_dot);
  }
  return {wrap_angle(phi), phi_dot};
}

PendulumState pendulum_rollout(const PendulumParams& params, const PendulumState& state,
                               std::span<const double> actions) {
  PendulumState s = state;
  for (double a : actions) s = pendulum_step(params, s, a);
  return s;
}

Eigen::MatrixXd pendulum_linearization(const PendulumParams& params, const PendulumState& state,
                                       double fd_step) {
  params.validate();
  Eigen::MatrixXd t(2, params.horizon);
  std::vector<double> actions(params.horizon, 0.0);
  for (int j = 0; j < params.horizon; ++j) {
    actions[j] = fd_step;
    const PendulumState plus = pendulum_rollout(params, state, actions);
    actions[j] = -fd_step;
    const PendulumState minus = pendulum_rollout(params, state, actions);
    actions[j] = 0.0;
    t(0, j) = angle_difference(plus.phi, minus.phi) / (2.0 * fd_step);
    t(1, j) = (plus.phi_dot - minus.phi_dot) / (2.0 * fd_step);
  }
  return t;
}

double pendulum_state_empowerment(const PendulumParams& params, const PendulumState& state) {
  LinearGaussianChannel channel;
  channel.T = pendulum_linearization(params, state);
  channel.noise_cov =
      params.noise_std * params.noise_std * Eigen::MatrixXd::Identity(2, 2);
  channel.power = params.power;
  return qlg_empowerment(channel).capacity_bits;
}

double PendulumMap::phi_center(int i) const {
  const double width = 2.0 * kPi / grid.phi_cells;
  return -kPi + (i + 0.5) * width;
}

double PendulumMap::phidot_center(int j) const {
  const double width = 2.0 * grid.phidot_range / grid.phidot_cells;
  return -grid.phidot_range + (j + 0.5) * width;
}

namespace {

PendulumMap make_map_shell(const PendulumParams& params, const PendulumGrid& grid) {
  params.validate();
  if (grid.phi_cells < 1 || grid.phidot_cells < 1 || !(grid.phidot_range > 0.0)) {
    throw std::invalid_argument("pendulum map: grid parameters must be positive");
  }
  PendulumMap map;
  map.grid = grid;
  map.params = params;
  map.values.assign(static_cast<std::size_t>(grid.phi_cells) * grid.phidot_cells, 0.0);
  return map;
}

}  // namespace

PendulumMap pendulum_empowerment_map(const PendulumParams& params, const PendulumGrid& grid,
                                     int workers) {
  PendulumMap map = make_map_shell(params, grid);
  const int total = static_cast<int>(map.values.size());
#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (int idx = 0; idx < total; ++idx) {
    const int i = idx % grid.phi_cells;
    const int j = idx / grid.phi_cells;
    map.values[idx] =
        pendulum_state_empowerment(params, {map.phi_center(i), map.phidot_center(j)});
  }
  return map;
}

PendulumMap pendulum_empowerment_map_serial(const PendulumParams& params,
                                            const PendulumGrid& grid) {
  PendulumMap map = make_map_shell(params, grid);
  const int total = static_cast<int>(map.values.size());
  for (int idx = 0; idx < total; ++idx) {
    const int i = idx % grid.phi_cells;
    const int j = idx / grid.phi_cells;
    map.values[idx] =
        pendulum_state_empowerment(params, {map.phi_center(i), map.phidot_center(j)});
  }
  return map;
}

std::vector<ControlStep> pendulum_greedy_control(const PendulumParams& params,
                                                 const PendulumState& start, int steps,
                                                 int mc_rollouts, std::uint64_t seed) {
  params.validate();
  if (steps < 1) throw std::invalid_argument("greedy control: steps must be >= 1");
  if (mc_rollouts < 1) throw std::invalid_argument("greedy control: mc_rollouts must be >= 1");

  const double a_max = std::sqrt(params.power);
  std::vector<double> candidates(params.a_grid);
  for (int i = 0; i < params.a_grid; ++i) {
    candidates[i] = -a_max + 2.0 * a_max * i / (params.a_grid - 1);
  }
  // Preference order for ties: smallest magnitude first, negative before
  // positive at equal magnitude.
  std::vector<int> preference(params.a_grid);
  for (int i = 0; i < params.a_grid; ++i) preference[i] = i;
  std::sort(preference.begin(), preference.end(), [&](int a, int b) {
    const double ma = std::abs(candidates[a]);
    const double mb = std::abs(candidates[b]);
    if (ma != mb) return ma < mb;
    return candidates[a] < candidates[b];
  });

  std::vector<ControlStep> trajectory;
  trajectory.reserve(steps + 1);
  PendulumState state = start;
  for (int t = 0; t < steps; ++t) {
    double best_score = -1.0;
    int best_candidate = preference[0];
    for (int rank = 0; rank < params.a_grid; ++rank) {
      const int c = preference[rank];
      const PendulumState successor = pendulum_step(params, state, candidates[c]);
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(t),
                                   static_cast<std::uint64_t>(c)));
      std::normal_distribution<double> normal(0.0, params.noise_std);
      double acc = 0.0;
      for (int r = 0; r < mc_rollouts; ++r) {
        PendulumState noisy{wrap_angle(successor.phi + normal(rng)),
                            successor.phi_dot + normal(rng)};
        acc += pendulum_state_empowerment(params, noisy);
      }
      const double score = acc / mc_rollouts;
      if (score > best_score) {
        best_score = score;
        best_candidate = c;
      }
    }
    trajectory.push_back(
        {state, candidates[best_candidate], pendulum_state_empowerment(params, state)});
    state = pendulum_step(params, state, candidates[best_candidate]);
  }
  trajectory.push_back({state, std::nullopt, pendulum_state_empowerment(params, state)});
  return trajectory;
}

PendulumScan pendulum_parameter_scan(const PendulumParams& base, const PendulumGrid& grid,
                                     std::span<const double> delta_t_values,
                                     std::span<const double> power_values, int workers) {
  base.validate();
  if (delta_t_values.empty() || power_values.empty()) {
    throw std::invalid_argument("pendulum scan: need at least one delta_t and one power");
  }

  PendulumScan scan;
  scan.delta_t_values.assign(delta_t_values.begin(), delta_t_values.end());
  scan.power_values.assign(power_values.begin(), power_values.end());

  const int n_cells = grid.phi_cells * grid.phidot_cells;
  for (double dt : delta_t_values) {
    PendulumParams params = base;
    params.delta_t = dt;
    params.substep = 0.0;  // track delta_t / 10

    // The linearization is power-independent; compute singular values once
    // per cell and water-fill per power level.
    std::vector<std::array<double, 2>> sigmas(n_cells);
    PendulumMap shell = make_map_shell(params, grid);
#ifdef _OPENMP
    const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int idx = 0; idx < n_cells; ++idx) {
      const int i = idx % grid.phi_cells;
      const int j = idx / grid.phi_cells;
      const Eigen::MatrixXd t =
          pendulum_linearization(params, {shell.phi_center(i), shell.phidot_center(j)});
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(t / params.noise_std);
      sigmas[idx] = {0.0, 0.0};
      for (int s = 0; s < svd.singularValues().size() && s < 2; ++s) {
        const double value = svd.singularValues()[s];
        sigmas[idx][s] = value < kSingularValueCutoff ? 0.0 : value;
      }
    }

    for (double power : power_values) {
      PendulumMap map = make_map_shell(params, grid);
      map.params.power = power;
      for (int idx = 0; idx < n_cells; ++idx) {
        map.values[idx] = water_filling(sigmas[idx], power).capacity_bits;
      }
      scan.maps.push_back(std::move(map));
    }
  }

  // Inversion search: a state near the bottom rest position overtakes a
  // mid-swing state when the power budget grows.
  const auto near_rest = [&](double phi, double phi_dot) {
    return std::abs(phi) < 0.5 && std::abs(phi_dot) < 1.0;
  };
  const auto mid_swing = [&](double phi, double phi_dot) {
    return std::abs(phi) > 1.0 && std::abs(phi) < kPi - 0.5 && std::abs(phi_dot) < 4.0;
  };

  for (std::size_t dt_i = 0; dt_i < scan.delta_t_values.size(); ++dt_i) {
    for (std::size_t p_low = 0; p_low < scan.power_values.size(); ++p_low) {
      for (std::size_t p_high = p_low + 1; p_high < scan.power_values.size(); ++p_high) {
        const PendulumMap& low = scan.map_at(static_cast<int>(dt_i), static_cast<int>(p_low));
        const PendulumMap& high = scan.map_at(static_cast<int>(dt_i), static_cast<int>(p_high));
        for (int r = 0; r < n_cells; ++r) {
          const double r_phi = low.phi_center(r % grid.phi_cells);
          const double r_dot = low.phidot_center(r / grid.phi_cells);
          if (!near_rest(r_phi, r_dot)) continue;
          for (int s = 0; s < n_cells; ++s) {
            const double s_phi = low.phi_center(s % grid.phi_cells);
            const double s_dot = low.phidot_center(s / grid.phi_cells);
            if (!mid_swing(s_phi, s_dot)) continue;
            if (low.values[r] < low.values[s] - 1e-9 &&
                high.values[r] > high.values[s] + 1e-9) {
              ++scan.inversion_count;
              if (!scan.inversion) {
                scan.inversion = InversionWitness{{r_phi, r_dot},
                                                  {s_phi, s_dot},
                                                  scan.power_values[p_low],
                                                  scan.power_values[p_high]};
              }
            }
          }
        }
      }
    }
  }
  return scan;
}

}  // namespace empo
