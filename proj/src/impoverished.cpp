#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "empo/empowerment.hpp"

namespace empo {

namespace {

// Sensor distribution after running `actions` open-loop from a delta at
// `start`, plus the resulting state distribution.
struct PropagationResult {
  std::vector<double> sensor_dist;
  std::vector<double> state_dist;
};

PropagationResult propagate_sequence(const TransitionModel& model, int start,
                                     std::span<const int> actions) {
  std::vector<double> dist(model.n_states, 0.0);
  std::vector<double> next(model.n_states, 0.0);
  dist[start] = 1.0;
  for (int a : actions) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int s = 0; s < model.n_states; ++s) {
      if (dist[s] == 0.0) continue;
      auto row = model.row(s, a);
      for (int t = 0; t < model.n_states; ++t) {
        if (row[t] != 0.0) next[t] += dist[s] * row[t];
      }
    }
    dist.swap(next);
  }
  PropagationResult out;
  out.sensor_dist.assign(model.n_sensors, 0.0);
  for (int s = 0; s < model.n_states; ++s) {
    if (dist[s] != 0.0) out.sensor_dist[model.sensor_map[s]] += dist[s];
  }
  out.state_dist = std::move(dist);
  return out;
}

int most_likely_state(const std::vector<double>& dist) {
  int best = 0;
  for (int s = 1; s < static_cast<int>(dist.size()); ++s) {
    if (dist[s] > dist[best]) best = s;  // ties keep the smallest id
  }
  return best;
}

double capacity_of_rows(const std::vector<const std::vector<double>*>& rows,
                        const BaParams& ba) {
  DiscreteChannel ch(static_cast<int>(rows.size()), static_cast<int>(rows.front()->size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i]->begin(), rows[i]->end(), ch.row(static_cast<int>(i)).begin());
  }
  return blahut_arimoto(ch, ba).capacity_bits;
}

struct Candidate {
  std::vector<int> actions;          // full concatenated sequence
  std::vector<double> sensor_dist;   // stage-local row used for selection
  int endpoint = 0;                  // stage-local most likely final state
};

// Greedy forward selection by capacity gain. Candidates arrive in
// lexicographic sequence order; ties keep the earliest candidate.
std::vector<int> greedy_select(const std::vector<Candidate>& candidates, int budget,
                               const BaParams& ba) {
  std::vector<int> selected;
  selected.push_back(0);  // all singleton channels have zero capacity
  std::vector<char> taken(candidates.size(), 0);
  taken[0] = 1;
  while (static_cast<int>(selected.size()) < budget) {
    int best = -1;
    double best_capacity = -1.0;
    std::vector<const std::vector<double>*> rows;
    rows.reserve(selected.size() + 1);
    for (int idx : selected) rows.push_back(&candidates[idx].sensor_dist);
    rows.push_back(nullptr);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (taken[c]) continue;
      rows.back() = &candidates[c].sensor_dist;
      const double capacity = capacity_of_rows(rows, ba);
      if (capacity > best_capacity) {
        best_capacity = capacity;
        best = static_cast<int>(c);
      }
    }
    selected.push_back(best);
    taken[best] = 1;
  }
  return selected;
}

}  // namespace

ImpoverishedResult impoverished_empowerment(const TransitionModel& model, int state,
                                            const ImpoverishedParams& params,
                                            const SolverOptions& solver) {
  model.validate();
  if (state < 0 || state >= model.n_states) {
    throw std::invalid_argument("impoverished_empowerment: state out of range");
  }
  if (params.segment_n < 1) throw std::invalid_argument("impoverished_empowerment: segment_n must be >= 1");
  if (params.budget < 2) throw std::invalid_argument("impoverished_empowerment: budget must be >= 2");
  if (params.segments < 1) throw std::invalid_argument("impoverished_empowerment: segments must be >= 1");

  std::uint64_t n_sequences = 1;
  for (int i = 0; i < params.segment_n; ++i) {
    n_sequences *= static_cast<std::uint64_t>(model.n_actions);
    if (n_sequences > solver.enumeration_budget) {
      throw std::runtime_error("horizon too large: |A|^n = " + std::to_string(model.n_actions) +
                               "^" + std::to_string(params.segment_n) +
                               " sequences exceeds enumeration budget " +
                               std::to_string(solver.enumeration_budget));
    }
  }

  ImpoverishedResult result;
  int budget = params.budget;
  if (static_cast<std::uint64_t>(budget) > n_sequences) {
    budget = static_cast<int>(n_sequences);
    result.budget_clamped = true;
  }

  // All per-stage continuations in lexicographic order.
  std::vector<std::vector<int>> continuations;
  continuations.reserve(n_sequences);
  std::vector<int> seq(params.segment_n, 0);
  while (true) {
    continuations.push_back(seq);
    int i = params.segment_n - 1;
    while (i >= 0 && seq[i] == model.n_actions - 1) seq[i--] = 0;
    if (i < 0) break;
    ++seq[i];
  }

  struct Kept {
    std::vector<int> actions;
    int endpoint;
  };
  std::vector<Kept> kept{{{}, state}};

  for (int stage = 0; stage < params.segments; ++stage) {
    std::vector<Candidate> candidates;
    candidates.reserve(kept.size() * continuations.size());
    for (const Kept& k : kept) {
      for (const auto& cont : continuations) {
        Candidate c;
        c.actions = k.actions;
        c.actions.insert(c.actions.end(), cont.begin(), cont.end());
        PropagationResult prop = propagate_sequence(model, k.endpoint, cont);
        c.sensor_dist = std::move(prop.sensor_dist);
        c.endpoint = most_likely_state(prop.state_dist);
        candidates.push_back(std::move(c));
      }
    }
    // Prefixes were kept in lexicographic order and continuations are
    // generated in lexicographic order, so candidates are ordered too.
    const int stage_budget =
        std::min<int>(budget, static_cast<int>(candidates.size()));
    std::vector<int> chosen = greedy_select(candidates, stage_budget, solver.ba);
    std::sort(chosen.begin(), chosen.end());

    kept.clear();
    for (int idx : chosen) kept.push_back({candidates[idx].actions, candidates[idx].endpoint});
  }

  // Reported value: capacity of the unpruned full-horizon channel restricted
  // to the kept sequences, i.e. rows propagated exactly from the query state.
  std::vector<std::vector<double>> true_rows;
  true_rows.reserve(kept.size());
  result.skeleton.reserve(kept.size());
  result.endpoints.reserve(kept.size());
  for (const Kept& k : kept) {
    true_rows.push_back(propagate_sequence(model, state, k.actions).sensor_dist);
    result.skeleton.push_back(k.actions);
    result.endpoints.push_back(k.endpoint);
  }
  std::vector<const std::vector<double>*> row_ptrs;
  row_ptrs.reserve(true_rows.size());
  for (const auto& r : true_rows) row_ptrs.push_back(&r);
  result.capacity_bits = capacity_of_rows(row_ptrs, solver.ba);
  return result;
}

}  // namespace empo
