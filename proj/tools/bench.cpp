// Serial reference vs OpenMP kernels on the two map workloads.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "empo/gridworld.hpp"
#include "empo/pendulum.hpp"

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) && std::isnan(b[i])) continue;
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace

int main() {
  {
    empo::GridWorld maze = empo::generate_maze(20, 20, 7);
    maze.epsilon_noise = 0.05;
    empo::GridMapParams params;
    params.horizon = 4;
    params.method = empo::EmpowermentMethod::ba;

    auto t0 = clock_type::now();
    empo::GridEmpowermentMap serial = empo::grid_empowerment_map_serial(maze, params);
    const double t_serial = seconds_since(t0);

    t0 = clock_type::now();
    empo::GridEmpowermentMap parallel = empo::grid_empowerment_map(maze, params);
    const double t_parallel = seconds_since(t0);

    std::printf("grid map 20x20 n=4 noisy : serial %.3fs  openmp %.3fs  speedup %.2fx  "
                "max|diff| %.3g\n",
                t_serial, t_parallel, t_serial / t_parallel,
                max_abs_diff(serial.values, parallel.values));
  }

  {
    empo::PendulumParams params;
    params.delta_t = 0.7;
    empo::PendulumGrid grid{128, 128, 8.0};

    auto t0 = clock_type::now();
    empo::PendulumMap serial = empo::pendulum_empowerment_map_serial(params, grid);
    const double t_serial = seconds_since(t0);

    t0 = clock_type::now();
    empo::PendulumMap parallel = empo::pendulum_empowerment_map(params, grid);
    const double t_parallel = seconds_since(t0);

    std::printf("pendulum map 128x128     : serial %.3fs  openmp %.3fs  speedup %.2fx  "
                "max|diff| %.3g\n",
                t_serial, t_parallel, t_serial / t_parallel,
                max_abs_diff(serial.values, parallel.values));
  }
  return 0;
}
