#include <cmath>
#include <random>

#include "doctest.h"
#include "empo/empowerment.hpp"
#include "helpers.hpp"

using namespace empo;

namespace {

TransitionModel noisy_line(int n_cells, double eps) {
  TransitionModel m = TransitionModel::make(n_cells, 3, n_cells);
  for (int s = 0; s < n_cells; ++s) {
    m.sensor_map[s] = s;
    const int targets[3] = {std::max(0, s - 1), std::min(n_cells - 1, s + 1), s};
    for (int a = 0; a < 3; ++a) {
      auto row = m.row(s, a);
      for (int b = 0; b < 3; ++b) row[targets[b]] += (a == b) ? 1.0 - eps : eps / 2.0;
    }
  }
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("a budget covering every endpoint matches the full deterministic value") {
  TransitionModel m = noisy_line(5, 0.0);
  const int segment_n = 2;
  // From the center, two steps reach all five cells.
  const double full = deterministic_empowerment(m, 2, segment_n);
  ImpoverishedParams params{segment_n, 5, 1};
  ImpoverishedResult result = impoverished_empowerment(m, 2, params);
  CHECK(result.capacity_bits == doctest::Approx(full).epsilon(1e-6));
  CHECK_FALSE(result.budget_clamped);
}

TEST_CASE("with a budget of two the kept sequences end at the extremes") {
  TransitionModel m = noisy_line(5, 0.1);
  ImpoverishedParams params{2, 2, 1};
  ImpoverishedResult result = impoverished_empowerment(m, 2, params);
  REQUIRE(result.skeleton.size() == 2);
  REQUIRE(result.endpoints.size() == 2);
  CHECK(((result.endpoints[0] == 0 && result.endpoints[1] == 4) ||
         (result.endpoints[0] == 4 && result.endpoints[1] == 0)));

  // Oracle: among all sequence pairs, an extremes pair maximizes capacity.
  DiscreteChannel full_channel = sequence_channel(m, 2, 2);
  const auto endpoint_of = [&](int seq) {
    // Most likely final cell for a sequence index under the slip dynamics.
    auto row = full_channel.row(seq);
    int best = 0;
    for (int s = 1; s < full_channel.n_outputs(); ++s) {
      if (row[s] > row[best]) best = s;
    }
    return best;
  };
  double best_pair = 0.0;
  int best_a = 0, best_b = 0;
  for (int a = 0; a < full_channel.n_inputs(); ++a) {
    for (int b = a + 1; b < full_channel.n_inputs(); ++b) {
      DiscreteChannel pair(2, full_channel.n_outputs());
      std::copy(full_channel.row(a).begin(), full_channel.row(a).end(), pair.row(0).begin());
      std::copy(full_channel.row(b).begin(), full_channel.row(b).end(), pair.row(1).begin());
      const double capacity = blahut_arimoto(pair, {1e-10, 2000}).capacity_bits;
      if (capacity > best_pair) {
        best_pair = capacity;
        best_a = a;
        best_b = b;
      }
    }
  }
  CHECK(((endpoint_of(best_a) == 0 && endpoint_of(best_b) == 4) ||
         (endpoint_of(best_a) == 4 && endpoint_of(best_b) == 0)));
  CHECK(result.capacity_bits == doctest::Approx(best_pair).epsilon(1e-6));
}

TEST_CASE("the pruned value never beats the full horizon") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 12; ++trial) {
    TransitionModel m = test::random_model(rng, 5, 3, 4, trial % 2 == 0);
    ImpoverishedParams params;
    params.segment_n = 1 + static_cast<int>(rng() % 2);
    params.budget = 2 + static_cast<int>(rng() % 3);
    params.segments = 1 + static_cast<int>(rng() % 2);
    const int state = static_cast<int>(rng() % m.n_states);

    ImpoverishedResult result = impoverished_empowerment(m, state, params);
    const double full =
        state_empowerment(m, state, params.segment_n * params.segments, {{1e-11, 3000}});
    CHECK(result.capacity_bits <= full + 1e-6);
    for (const auto& sequence : result.skeleton) {
      CHECK(static_cast<int>(sequence.size()) == params.segment_n * params.segments);
    }
  }
}

TEST_CASE("an oversized budget is clamped and flagged") {
  TransitionModel m = noisy_line(3, 0.0);
  ImpoverishedParams params{1, 10, 1};  // only 3 one-step sequences exist
  ImpoverishedResult result = impoverished_empowerment(m, 1, params);
  CHECK(result.budget_clamped);
  CHECK(result.skeleton.size() == 3);
}

TEST_CASE("chained segments extend the reach of the skeleton") {
  TransitionModel m = noisy_line(9, 0.0);
  // One two-step segment from the center cannot leave [2, 6]; two chained
  // segments with enough budget recover the full four-step spread.
  ImpoverishedParams params{2, 9, 2};
  ImpoverishedResult result = impoverished_empowerment(m, 4, params);
  const double full = deterministic_empowerment(m, 4, 4);
  CHECK(full == doctest::Approx(std::log2(9.0)));
  CHECK(result.capacity_bits == doctest::Approx(full).epsilon(1e-6));
}

TEST_CASE("parameter validation") {
  TransitionModel m = noisy_line(3, 0.0);
  CHECK_THROWS_AS(impoverished_empowerment(m, 0, {0, 2, 1}), std::invalid_argument);
  CHECK_THROWS_AS(impoverished_empowerment(m, 0, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(impoverished_empowerment(m, 0, {1, 2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(impoverished_empowerment(m, 9, {1, 2, 1}), std::invalid_argument);
}
