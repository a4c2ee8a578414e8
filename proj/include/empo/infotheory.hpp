#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace empo {

inline constexpr double kProbabilityTolerance = 1e-9;

// Throws std::invalid_argument when p has a negative entry or its total mass
// deviates from 1 by more than kProbabilityTolerance. `what` names the value
// in the error message.
void validate_probability_vector(std::span<const double> p, const char* what);

/// Conditional distribution p(output | input), one row-stochastic row per input.
class DiscreteChannel {
 public:
  DiscreteChannel(int n_inputs, int n_outputs);

  static DiscreteChannel from_rows(const std::vector<std::vector<double>>& rows);

  // One input per line, comma-separated conditional probabilities.
  static DiscreteChannel load_csv(const std::filesystem::path& file);

  int n_inputs() const { return n_inputs_; }
  int n_outputs() const { return n_outputs_; }

  std::span<const double> row(int input) const {
    return {table_.data() + static_cast<std::size_t>(input) * n_outputs_,
            static_cast<std::size_t>(n_outputs_)};
  }
  std::span<double> row(int input) {
    return {table_.data() + static_cast<std::size_t>(input) * n_outputs_,
            static_cast<std::size_t>(n_outputs_)};
  }
  double at(int input, int output) const {
    return table_[static_cast<std::size_t>(input) * n_outputs_ + output];
  }
  double& at(int input, int output) {
    return table_[static_cast<std::size_t>(input) * n_outputs_ + output];
  }

  void validate() const;

 private:
  int n_inputs_;
  int n_outputs_;
  std::vector<double> table_;  // row-major
};

struct BaParams {
  double epsilon_bits = 1e-8;  // stop once successive estimates differ by less
  int max_iter = 500;
};

struct CapacityResult {
  double capacity_bits = 0.0;
  std::vector<double> optimal_input;
  int iterations = 0;
  bool converged = false;
  std::vector<double> estimate_trace_bits;  // capacity estimate per iteration
};

// Shannon entropy in bits, 0 log 0 = 0.
double entropy(std::span<const double> p);

// H(output | input) in bits: sum_a p(a) H(row_a).
double conditional_entropy(std::span<const double> input, const DiscreteChannel& channel);

// I(input; output) in bits, clamped to 0 against rounding.
double mutual_information(std::span<const double> input, const DiscreteChannel& channel);

// Alternating-maximization channel capacity. Starts from the uniform input
// distribution; the per-iteration estimate sequence is non-decreasing.
CapacityResult blahut_arimoto(const DiscreteChannel& channel, const BaParams& params = {});

}  // namespace empo
