#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace empo {

/// Finite-world dynamics p(next | state, action) plus a total sensor map.
struct TransitionModel {
  int n_states = 0;
  int n_actions = 0;
  int n_sensors = 0;
  std::vector<double> transitions;  // [state][action] -> row over next states
  std::vector<int> sensor_map;      // state -> sensor symbol

  // Optional labels; empty means "use indices".
  std::vector<std::string> state_names;
  std::vector<std::string> action_names;
  std::vector<std::string> sensor_names;
  std::string id;

  std::span<const double> row(int state, int action) const {
    const std::size_t off =
        (static_cast<std::size_t>(state) * n_actions + action) * n_states;
    return {transitions.data() + off, static_cast<std::size_t>(n_states)};
  }
  std::span<double> row(int state, int action) {
    const std::size_t off =
        (static_cast<std::size_t>(state) * n_actions + action) * n_states;
    return {transitions.data() + off, static_cast<std::size_t>(n_states)};
  }

  bool is_deterministic() const;
  void validate() const;

  static TransitionModel make(int n_states, int n_actions, int n_sensors);

  static TransitionModel parse_json(std::string_view text);
  static TransitionModel load_json(const std::filesystem::path& file);
  std::string to_json_string(int indent = 2) const;
  void save_json(const std::filesystem::path& file) const;
};

}  // namespace empo
