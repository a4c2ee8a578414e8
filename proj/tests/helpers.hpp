#pragma once

#include <random>
#include <vector>

#include "empo/infotheory.hpp"
#include "empo/transition_model.hpp"

namespace empo::test {

inline std::vector<double> random_distribution(std::mt19937_64& rng, int n) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) {
    x = gamma(rng) + 1e-12;
    sum += x;
  }
  for (double& x : p) x /= sum;
  return p;
}

inline DiscreteChannel random_channel(std::mt19937_64& rng, int n_inputs, int n_outputs) {
  std::vector<std::vector<double>> rows(n_inputs);
  for (auto& row : rows) row = random_distribution(rng, n_outputs);
  return DiscreteChannel::from_rows(rows);
}

inline TransitionModel random_model(std::mt19937_64& rng, int max_states = 6,
                                    int max_actions = 4, int max_sensors = 4,
                                    bool deterministic = false) {
  std::uniform_int_distribution<int> states_dist(2, max_states);
  std::uniform_int_distribution<int> actions_dist(2, max_actions);
  const int n_states = states_dist(rng);
  const int n_actions = actions_dist(rng);
  std::uniform_int_distribution<int> sensors_dist(2, std::min(max_sensors, n_states));
  const int n_sensors = sensors_dist(rng);

  TransitionModel model = TransitionModel::make(n_states, n_actions, n_sensors);
  std::uniform_int_distribution<int> state_pick(0, n_states - 1);
  std::uniform_int_distribution<int> sensor_pick(0, n_sensors - 1);
  for (int s = 0; s < n_states; ++s) {
    // Every sensor appears at least once so the sensor alphabet is honest.
    model.sensor_map[s] = s < n_sensors ? s : sensor_pick(rng);
    for (int a = 0; a < n_actions; ++a) {
      auto row = model.row(s, a);
      if (deterministic) {
        row[state_pick(rng)] = 1.0;
      } else {
        auto p = random_distribution(rng, n_states);
        std::copy(p.begin(), p.end(), row.begin());
      }
    }
  }
  model.validate();
  return model;
}

}  // namespace empo::test
