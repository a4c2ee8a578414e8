#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "empo/infotheory.hpp"
#include "empo/transition_model.hpp"

namespace empo {

struct SolverOptions {
  BaParams ba;
  std::uint64_t enumeration_budget = 1'000'000;  // max |A|^n action sequences
};

enum class EmpowermentMethod { deterministic, ba, impoverished };

std::string to_string(EmpowermentMethod method);
EmpowermentMethod empowerment_method_from_string(const std::string& name);

/// Per-state empowerment values in bits plus how they were produced.
struct EmpowermentMap {
  std::vector<double> values;
  int horizon = 0;
  std::string model_id;
  EmpowermentMethod method = EmpowermentMethod::deterministic;
};

// Channel whose inputs are the |A|^n open-loop action sequences from `state`
// and whose outputs are sensor symbols after the final action. Rows are
// computed by exact forward propagation of the state distribution. Sequence v
// is decoded base-|A| with the first action in the most significant digit, so
// row order is the lexicographic order of sequences.
DiscreteChannel sequence_channel(const TransitionModel& model, int state, int n,
                                 std::uint64_t enumeration_budget = 1'000'000);

// log2 of the number of distinct sensor symbols reachable in exactly n steps.
// Cost is polynomial in states and horizon; requires a deterministic model.
double deterministic_empowerment(const TransitionModel& model, int state, int n);

// Channel capacity of the n-step sequence channel from `state`.
double state_empowerment(const TransitionModel& model, int state, int n,
                         const SolverOptions& solver = {});

double average_state_empowerment(const TransitionModel& model,
                                 std::span<const double> prior, int n,
                                 const SolverOptions& solver = {});

/// Grouping of states into contexts k, plus the prior-induced context weights.
struct ContextPartition {
  std::vector<int> assignment;  // state -> context id, ids dense in [0, n_contexts)
  int n_contexts() const;
  void validate(const TransitionModel& model) const;
  static ContextPartition singletons(int n_states);
  static ContextPartition one_block(int n_states);
};

// Context weights p(k) induced by a state prior.
std::vector<double> context_prior(const ContextPartition& partition,
                                  std::span<const double> prior);

double contextual_empowerment(const TransitionModel& model, const ContextPartition& partition,
                              std::span<const double> prior, int n,
                              const SolverOptions& solver = {});

double context_free_empowerment(const TransitionModel& model, std::span<const double> prior,
                                int n, const SolverOptions& solver = {});

// Exhaustive search for the lowest-entropy partition whose contextual
// empowerment stays within tol_bits of the full state-resolved value.
// Ties break toward fewer blocks, then the lexicographically smallest
// assignment. Limited to n_states <= 12.
ContextPartition optimal_context_search(const TransitionModel& model,
                                        std::span<const double> prior, int n,
                                        const SolverOptions& solver, double tol_bits);

struct ImpoverishedParams {
  int segment_n = 1;  // horizon of each stage
  int budget = 2;     // sequences retained per stage
  int segments = 1;   // number of chained stages
};

struct ImpoverishedResult {
  double capacity_bits = 0.0;
  std::vector<std::vector<int>> skeleton;  // selected sequences, concatenated actions
  std::vector<int> endpoints;              // stage-local most likely final state per sequence
  bool budget_clamped = false;
};

// Greedy capacity-guided pruning of action sequences, chained over stages.
// Each stage keeps `budget` sequences by greedy capacity gain and replants the
// enumeration at the most likely endpoint of each kept sequence. The reported
// value is the capacity of the full-horizon channel restricted to the kept
// sequences, so it never exceeds the unpruned empowerment.
ImpoverishedResult impoverished_empowerment(const TransitionModel& model, int state,
                                            const ImpoverishedParams& params,
                                            const SolverOptions& solver = {});

/// Memo of per-(state, horizon) empowerment values, safe for concurrent use.
class EmpowermentCache {
 public:
  std::optional<double> lookup(int state, int n) const;
  void store(int state, int n, double bits);
  void clear();

 private:
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, double> values_;
};

// E[ E(S') | state, action ] with successor values memoized in `cache`.
double expected_empowerment(const TransitionModel& model, int state, int action, int n,
                            const SolverOptions& solver, EmpowermentCache& cache);

// Action maximizing expected successor empowerment; ties go to the lowest id.
int greedy_policy_step(const TransitionModel& model, int state, int n,
                       const SolverOptions& solver, EmpowermentCache& cache);

struct MapParams {
  int horizon = 1;
  EmpowermentMethod method = EmpowermentMethod::ba;
  SolverOptions solver;
  ImpoverishedParams impoverished;
  int workers = 0;  // 0 = all hardware threads
};

// Per-state empowerment over the whole model; states are independent, so the
// default kernel fans out over OpenMP threads. The serial variant is the
// reference implementation and must produce identical values.
EmpowermentMap compute_empowerment_map(const TransitionModel& model, const MapParams& params);
EmpowermentMap compute_empowerment_map_serial(const TransitionModel& model,
                                              const MapParams& params);

}  // namespace empo
