#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "empo/continuous.hpp"

namespace empo {

/// Torque-limited simple pendulum, phi = 0 at the bottom rest position and
/// +-pi upright, driven by an external angular acceleration held constant
/// over each control interval.
struct PendulumParams {
  double gravity = 9.81;
  double length = 1.0;
  double delta_t = 0.1;   // control interval
  int horizon = 5;        // action-sequence length for empowerment
  double power = 1.0;     // input power budget
  double noise_std = 0.01;  // additive Gaussian state noise per dimension
  int a_grid = 5;         // candidate accelerations for greedy control
  double substep = 0.0;   // integrator step, <= 0 means delta_t / 10

  double resolved_substep() const { return substep > 0.0 ? substep : delta_t / 10.0; }
  void validate() const;
};

struct PendulumState {
  double phi = 0.0;      // wrapped to [-pi, pi)
  double phi_dot = 0.0;
};

double wrap_angle(double phi);
// Shortest signed arc from b to a.
double angle_difference(double a, double b);

// One control interval of phi'' = -(g/l) sin(phi) + a, fixed-step RK4.
PendulumState pendulum_step(const PendulumParams& params, const PendulumState& state,
                            double accel);

PendulumState pendulum_rollout(const PendulumParams& params, const PendulumState& state,
                               std::span<const double> actions);

// Sensitivity of the final (phi, phi_dot) to each action in the sequence,
// central differences around the all-zero sequence; 2 x horizon.
Eigen::MatrixXd pendulum_linearization(const PendulumParams& params, const PendulumState& state,
                                       double fd_step = 1e-4);

// Capacity of the locally linearized action channel with isotropic state
// noise of stddev noise_std and power budget P.
double pendulum_state_empowerment(const PendulumParams& params, const PendulumState& state);

struct PendulumGrid {
  int phi_cells = 64;
  int phidot_cells = 64;
  double phidot_range = 8.0;  // grid covers [-range, range]
};

struct PendulumMap {
  PendulumGrid grid;
  std::vector<double> values;  // row-major, index = j * phi_cells + i
  PendulumParams params;

  double phi_center(int i) const;
  double phidot_center(int j) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * grid.phi_cells + i]; }
};

PendulumMap pendulum_empowerment_map(const PendulumParams& params, const PendulumGrid& grid,
                                     int workers = 0);
PendulumMap pendulum_empowerment_map_serial(const PendulumParams& params,
                                            const PendulumGrid& grid);

struct ControlStep {
  PendulumState state;
  std::optional<double> action;  // empty on the trailing state
  double empowerment = 0.0;
};

// Greedy controller: candidates evenly spaced in [-sqrt(P), sqrt(P)], each
// scored by the mean empowerment of mc_rollouts noisy successors; ties prefer
// the smallest magnitude, then negative sign. The applied step is noiseless.
std::vector<ControlStep> pendulum_greedy_control(const PendulumParams& params,
                                                 const PendulumState& start, int steps,
                                                 int mc_rollouts, std::uint64_t seed);

struct InversionWitness {
  PendulumState low_state;   // near the bottom rest position
  PendulumState swing_state; // mid-swing
  double power_low = 0.0;
  double power_high = 0.0;
};

struct PendulumScan {
  std::vector<double> delta_t_values;
  std::vector<double> power_values;
  std::vector<PendulumMap> maps;  // indexed [dt * n_powers + p]
  std::optional<InversionWitness> inversion;
  long long inversion_count = 0;

  const PendulumMap& map_at(int dt_index, int power_index) const {
    return maps[static_cast<std::size_t>(dt_index) * power_values.size() + power_index];
  }
};

// One empowerment landscape per (delta_t, power) pair; the linearization is
// shared across power levels. Also searches each delta_t row for a pair of
// states whose empowerment ordering flips between two power levels, with the
// first state near the bottom rest position and the second mid-swing.
PendulumScan pendulum_parameter_scan(const PendulumParams& base, const PendulumGrid& grid,
                                     std::span<const double> delta_t_values,
                                     std::span<const double> power_values, int workers = 0);

}  // namespace empo
