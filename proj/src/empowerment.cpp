#include "empo/empowerment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace empo {

namespace {

std::uint64_t checked_pow(int base, int exp, std::uint64_t limit) {
  std::uint64_t result = 1;
  for (int i = 0; i < exp; ++i) {
    if (result > limit / static_cast<std::uint64_t>(base)) {
      return limit + 1;  // saturate, caller reports the overflow
    }
    result *= static_cast<std::uint64_t>(base);
  }
  return result;
}

void propagate(const TransitionModel& model, const std::vector<double>& dist, int action,
               std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (int s = 0; s < model.n_states; ++s) {
    const double mass = dist[s];
    if (mass == 0.0) continue;
    auto row = model.row(s, action);
    for (int t = 0; t < model.n_states; ++t) {
      if (row[t] != 0.0) out[t] += mass * row[t];
    }
  }
}

void fill_rows_recursive(const TransitionModel& model, int n, int depth,
                         const std::vector<double>& dist, std::uint64_t prefix_index,
                         DiscreteChannel& channel, std::vector<std::vector<double>>& scratch) {
  if (depth == n) {
    auto row = channel.row(static_cast<int>(prefix_index));
    for (int s = 0; s < model.n_states; ++s) {
      if (dist[s] != 0.0) row[model.sensor_map[s]] += dist[s];
    }
    return;
  }
  for (int a = 0; a < model.n_actions; ++a) {
    propagate(model, dist, a, scratch[depth]);
    fill_rows_recursive(model, n, depth + 1, scratch[depth],
                        prefix_index * model.n_actions + a, channel, scratch);
  }
}

}  // namespace

std::string to_string(EmpowermentMethod method) {
  switch (method) {
    case EmpowermentMethod::deterministic: return "deterministic";
    case EmpowermentMethod::ba: return "ba";
    case EmpowermentMethod::impoverished: return "impoverished";
  }
  return "unknown";
}

EmpowermentMethod empowerment_method_from_string(const std::string& name) {
  if (name == "deterministic") return EmpowermentMethod::deterministic;
  if (name == "ba") return EmpowermentMethod::ba;
  if (name == "impoverished") return EmpowermentMethod::impoverished;
  throw std::invalid_argument("unknown empowerment method '" + name + "'");
}

DiscreteChannel sequence_channel(const TransitionModel& model, int state, int n,
                                 std::uint64_t enumeration_budget) {
  model.validate();
  if (state < 0 || state >= model.n_states) {
    throw std::invalid_argument("sequence_channel: state out of range");
  }
  if (n < 1) throw std::invalid_argument("sequence_channel: horizon must be >= 1");
  const std::uint64_t n_sequences = checked_pow(model.n_actions, n, enumeration_budget);
  if (n_sequences > enumeration_budget) {
    throw std::runtime_error("horizon too large: |A|^n = " + std::to_string(model.n_actions) +
                             "^" + std::to_string(n) + " sequences exceeds enumeration budget " +
                             std::to_string(enumeration_budget));
  }

  DiscreteChannel channel(static_cast<int>(n_sequences), model.n_sensors);
  std::vector<double> start(model.n_states, 0.0);
  start[state] = 1.0;
  std::vector<std::vector<double>> scratch(n, std::vector<double>(model.n_states, 0.0));
  fill_rows_recursive(model, n, 0, start, 0, channel, scratch);
  return channel;
}

double deterministic_empowerment(const TransitionModel& model, int state, int n) {
  model.validate();
  if (state < 0 || state >= model.n_states) {
    throw std::invalid_argument("deterministic_empowerment: state out of range");
  }
  if (n < 1) throw std::invalid_argument("deterministic_empowerment: horizon must be >= 1");
  if (!model.is_deterministic()) {
    throw std::invalid_argument(
        "deterministic_empowerment: model is stochastic, use the capacity solver path");
  }

  // next[s][a], derived once; rows are one-hot.
  std::vector<int> next(static_cast<std::size_t>(model.n_states) * model.n_actions, -1);
  for (int s = 0; s < model.n_states; ++s) {
    for (int a = 0; a < model.n_actions; ++a) {
      auto row = model.row(s, a);
      for (int t = 0; t < model.n_states; ++t) {
        if (row[t] == 1.0) {
          next[static_cast<std::size_t>(s) * model.n_actions + a] = t;
          break;
        }
      }
    }
  }

  std::vector<char> reachable(model.n_states, 0);
  std::vector<char> frontier_next(model.n_states, 0);
  reachable[state] = 1;
  for (int step = 0; step < n; ++step) {
    std::fill(frontier_next.begin(), frontier_next.end(), 0);
    for (int s = 0; s < model.n_states; ++s) {
      if (!reachable[s]) continue;
      for (int a = 0; a < model.n_actions; ++a) {
        frontier_next[next[static_cast<std::size_t>(s) * model.n_actions + a]] = 1;
      }
    }
    reachable.swap(frontier_next);
  }

  std::vector<char> seen(model.n_sensors, 0);
  int count = 0;
  for (int s = 0; s < model.n_states; ++s) {
    if (reachable[s] && !seen[model.sensor_map[s]]) {
      seen[model.sensor_map[s]] = 1;
      ++count;
    }
  }
  return std::log2(static_cast<double>(count));
}

double state_empowerment(const TransitionModel& model, int state, int n,
                         const SolverOptions& solver) {
  DiscreteChannel channel = sequence_channel(model, state, n, solver.enumeration_budget);
  return blahut_arimoto(channel, solver.ba).capacity_bits;
}

double average_state_empowerment(const TransitionModel& model, std::span<const double> prior,
                                 int n, const SolverOptions& solver) {
  validate_probability_vector(prior, "state prior");
  if (static_cast<int>(prior.size()) != model.n_states) {
    throw std::invalid_argument("average_state_empowerment: prior length mismatch");
  }
  double sum = 0.0;
  for (int s = 0; s < model.n_states; ++s) {
    if (prior[s] > 0.0) sum += prior[s] * state_empowerment(model, s, n, solver);
  }
  return sum;
}

std::optional<double> EmpowermentCache::lookup(int state, int n) const {
  const std::uint64_t key = (static_cast<std::uint64_t>(state) << 32) | static_cast<std::uint32_t>(n);
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void EmpowermentCache::store(int state, int n, double bits) {
  const std::uint64_t key = (static_cast<std::uint64_t>(state) << 32) | static_cast<std::uint32_t>(n);
  std::lock_guard<std::mutex> lock(mutex_);
  values_.emplace(key, bits);
}

void EmpowermentCache::clear() {
  std::lock_guard<std::mutex> lock(mutex_);
  values_.clear();
}

namespace {

double cached_state_empowerment(const TransitionModel& model, int state, int n,
                                const SolverOptions& solver, EmpowermentCache& cache) {
  if (auto hit = cache.lookup(state, n)) return *hit;
  const double bits = state_empowerment(model, state, n, solver);
  cache.store(state, n, bits);
  return bits;
}

}  // namespace

double expected_empowerment(const TransitionModel& model, int state, int action, int n,
                            const SolverOptions& solver, EmpowermentCache& cache) {
  model.validate();
  if (action < 0 || action >= model.n_actions) {
    throw std::invalid_argument("expected_empowerment: action out of range");
  }
  auto row = model.row(state, action);
  double sum = 0.0;
  for (int t = 0; t < model.n_states; ++t) {
    if (row[t] > 0.0) sum += row[t] * cached_state_empowerment(model, t, n, solver, cache);
  }
  return sum;
}

int greedy_policy_step(const TransitionModel& model, int state, int n,
                       const SolverOptions& solver, EmpowermentCache& cache) {
  int best_action = 0;
  double best_value = expected_empowerment(model, state, 0, n, solver, cache);
  for (int a = 1; a < model.n_actions; ++a) {
    const double value = expected_empowerment(model, state, a, n, solver, cache);
    if (value > best_value) {
      best_value = value;
      best_action = a;
    }
  }
  return best_action;
}

namespace {

double map_value_for_state(const TransitionModel& model, int state, const MapParams& params) {
  switch (params.method) {
    case EmpowermentMethod::deterministic:
      return deterministic_empowerment(model, state, params.horizon);
    case EmpowermentMethod::ba:
      return state_empowerment(model, state, params.horizon, params.solver);
    case EmpowermentMethod::impoverished:
      return impoverished_empowerment(model, state, params.impoverished, params.solver)
          .capacity_bits;
  }
  throw std::logic_error("unreachable");
}

}  // namespace

EmpowermentMap compute_empowerment_map(const TransitionModel& model, const MapParams& params) {
  model.validate();
  EmpowermentMap map;
  map.horizon = params.method == EmpowermentMethod::impoverished
                    ? params.impoverished.segment_n * params.impoverished.segments
                    : params.horizon;
  map.model_id = model.id;
  map.method = params.method;
  map.values.assign(model.n_states, 0.0);

#ifdef _OPENMP
  const int threads = params.workers > 0 ? params.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int s = 0; s < model.n_states; ++s) {
    map.values[s] = map_value_for_state(model, s, params);
  }
#else
  for (int s = 0; s < model.n_states; ++s) {
    map.values[s] = map_value_for_state(model, s, params);
  }
#endif
  return map;
}

EmpowermentMap compute_empowerment_map_serial(const TransitionModel& model,
                                              const MapParams& params) {
  model.validate();
  EmpowermentMap map;
  map.horizon = params.method == EmpowermentMethod::impoverished
                    ? params.impoverished.segment_n * params.impoverished.segments
                    : params.horizon;
  map.model_id = model.id;
  map.method = params.method;
  map.values.assign(model.n_states, 0.0);
  for (int s = 0; s < model.n_states; ++s) {
    map.values[s] = map_value_for_state(model, s, params);
  }
  return map;
}

}  // namespace empo
