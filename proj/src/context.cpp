#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "empo/empowerment.hpp"

namespace empo {

namespace {

// State channels share input indexing (sequence rank) and output indexing
// (sensor symbols), so a context channel is a per-row convex mixture.
DiscreteChannel mixture_channel(const std::vector<DiscreteChannel>& state_channels,
                                const std::vector<int>& members,
                                const std::vector<double>& weights) {
  const DiscreteChannel& first = state_channels[members.front()];
  DiscreteChannel out(first.n_inputs(), first.n_outputs());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    const DiscreteChannel& ch = state_channels[members[i]];
    for (int v = 0; v < ch.n_inputs(); ++v) {
      auto src = ch.row(v);
      auto dst = out.row(v);
      for (int s = 0; s < ch.n_outputs(); ++s) dst[s] += w * src[s];
    }
  }
  return out;
}

std::vector<DiscreteChannel> per_state_channels(const TransitionModel& model, int n,
                                                const SolverOptions& solver) {
  std::vector<DiscreteChannel> channels;
  channels.reserve(model.n_states);
  for (int s = 0; s < model.n_states; ++s) {
    channels.push_back(sequence_channel(model, s, n, solver.enumeration_budget));
  }
  return channels;
}

void check_prior(const TransitionModel& model, std::span<const double> prior) {
  validate_probability_vector(prior, "state prior");
  if (static_cast<int>(prior.size()) != model.n_states) {
    throw std::invalid_argument("state prior length does not match the model");
  }
}

}  // namespace

int ContextPartition::n_contexts() const {
  int max_id = -1;
  for (int k : assignment) max_id = std::max(max_id, k);
  return max_id + 1;
}

void ContextPartition::validate(const TransitionModel& model) const {
  if (static_cast<int>(assignment.size()) != model.n_states) {
    throw std::invalid_argument("ContextPartition: assignment must cover every state");
  }
  const int k = n_contexts();
  if (k < 1) throw std::invalid_argument("ContextPartition: no contexts");
  std::vector<char> used(k, 0);
  for (int id : assignment) {
    if (id < 0 || id >= k) throw std::invalid_argument("ContextPartition: context id out of range");
    used[id] = 1;
  }
  for (int i = 0; i < k; ++i) {
    if (!used[i]) {
      throw std::invalid_argument("ContextPartition: context " + std::to_string(i) + " is empty");
    }
  }
}

ContextPartition ContextPartition::singletons(int n_states) {
  ContextPartition p;
  p.assignment.resize(n_states);
  for (int s = 0; s < n_states; ++s) p.assignment[s] = s;
  return p;
}

ContextPartition ContextPartition::one_block(int n_states) {
  ContextPartition p;
  p.assignment.assign(n_states, 0);
  return p;
}

std::vector<double> context_prior(const ContextPartition& partition,
                                  std::span<const double> prior) {
  std::vector<double> pk(partition.n_contexts(), 0.0);
  for (std::size_t s = 0; s < prior.size(); ++s) pk[partition.assignment[s]] += prior[s];
  return pk;
}

double contextual_empowerment(const TransitionModel& model, const ContextPartition& partition,
                              std::span<const double> prior, int n,
                              const SolverOptions& solver) {
  check_prior(model, prior);
  partition.validate(model);

  auto channels = per_state_channels(model, n, solver);
  const std::vector<double> pk = context_prior(partition, prior);

  double total = 0.0;
  for (int k = 0; k < partition.n_contexts(); ++k) {
    if (pk[k] == 0.0) continue;
    std::vector<int> members;
    std::vector<double> weights;
    for (int s = 0; s < model.n_states; ++s) {
      if (partition.assignment[s] == k) {
        members.push_back(s);
        weights.push_back(prior[s] / pk[k]);
      }
    }
    DiscreteChannel ch = mixture_channel(channels, members, weights);
    total += pk[k] * blahut_arimoto(ch, solver.ba).capacity_bits;
  }
  return total;
}

double context_free_empowerment(const TransitionModel& model, std::span<const double> prior,
                                int n, const SolverOptions& solver) {
  check_prior(model, prior);
  auto channels = per_state_channels(model, n, solver);
  std::vector<int> members(model.n_states);
  std::vector<double> weights(prior.begin(), prior.end());
  for (int s = 0; s < model.n_states; ++s) members[s] = s;
  DiscreteChannel marginal = mixture_channel(channels, members, weights);
  return blahut_arimoto(marginal, solver.ba).capacity_bits;
}

ContextPartition optimal_context_search(const TransitionModel& model,
                                        std::span<const double> prior, int n,
                                        const SolverOptions& solver, double tol_bits) {
  check_prior(model, prior);
  const int n_states = model.n_states;
  if (n_states > 12) {
    throw std::invalid_argument(
        "optimal_context_search: exhaustive partition search is limited to 12 states, got " +
        std::to_string(n_states));
  }

  auto channels = per_state_channels(model, n, solver);

  // One capacity per state subset; partitions then score via table lookups.
  const std::uint32_t n_subsets = 1u << n_states;
  std::vector<double> subset_capacity(n_subsets, 0.0);
  std::vector<double> subset_mass(n_subsets, 0.0);
  for (std::uint32_t mask = 1; mask < n_subsets; ++mask) {
    double mass = 0.0;
    std::vector<int> members;
    for (int s = 0; s < n_states; ++s) {
      if (mask & (1u << s)) {
        members.push_back(s);
        mass += prior[s];
      }
    }
    subset_mass[mask] = mass;
    if (mass == 0.0) continue;
    std::vector<double> weights;
    weights.reserve(members.size());
    for (int s : members) weights.push_back(prior[s] / mass);
    DiscreteChannel ch = mixture_channel(channels, members, weights);
    subset_capacity[mask] = blahut_arimoto(ch, solver.ba).capacity_bits;
  }

  double full = 0.0;  // E over the singleton partition
  for (int s = 0; s < n_states; ++s) {
    full += prior[s] * subset_capacity[1u << s];
  }

  // Enumerate partitions as restricted growth strings, in lexicographic order.
  std::vector<int> rgs(n_states, 0);
  std::vector<int> best_rgs;
  double best_entropy = 0.0;
  int best_blocks = 0;

  const auto score_current = [&] {
    const int blocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
    std::vector<std::uint32_t> block_mask(blocks, 0);
    for (int s = 0; s < n_states; ++s) block_mask[rgs[s]] |= 1u << s;
    double value = 0.0;
    double h = 0.0;
    for (int b = 0; b < blocks; ++b) {
      const double mass = subset_mass[block_mask[b]];
      if (mass == 0.0) continue;
      value += mass * subset_capacity[block_mask[b]];
      h -= mass * std::log2(mass);
    }
    if (value < full - tol_bits) return;
    const bool better =
        best_rgs.empty() || h < best_entropy - 1e-12 ||
        (h <= best_entropy + 1e-12 && blocks < best_blocks);
    if (better) {
      best_rgs = rgs;
      best_entropy = h;
      best_blocks = blocks;
    }
  };

  // Iterative RGS successor: rgs[i] may be at most max(rgs[0..i-1]) + 1.
  while (true) {
    score_current();
    int i = n_states - 1;
    for (; i > 0; --i) {
      int prefix_max = 0;
      for (int j = 0; j < i; ++j) prefix_max = std::max(prefix_max, rgs[j]);
      if (rgs[i] <= prefix_max) break;
    }
    if (i == 0) break;
    ++rgs[i];
    std::fill(rgs.begin() + i + 1, rgs.end(), 0);
  }

  ContextPartition best;
  best.assignment = best_rgs;
  best.validate(model);
  return best;
}

}  // namespace empo
