#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "empo/infotheory.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace empo;

namespace {

DiscreteChannel bsc(double crossover) {
  return DiscreteChannel::from_rows(
      {{1.0 - crossover, crossover}, {crossover, 1.0 - crossover}});
}

DiscreteChannel identity_channel(int n) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) rows[i][i] = 1.0;
  return DiscreteChannel::from_rows(rows);
}

}  // namespace

TEST_CASE("entropy matches hand values") {
  CHECK(entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(entropy(std::vector<double>{1.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-12));
  // -0.11 log2 0.11 - 0.89 log2 0.89, frozen from the closed form
  CHECK(entropy(std::vector<double>{0.11, 0.89}) ==
        doctest::Approx(0.499915958164528).epsilon(1e-12));
}

TEST_CASE("entropy rejects malformed distributions") {
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, -0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(std::vector<double>{0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("conditional entropy") {
  const std::vector<double> uniform{0.5, 0.5};
  CHECK(conditional_entropy(uniform, identity_channel(2)) == doctest::Approx(0.0));
  CHECK(conditional_entropy(uniform, DiscreteChannel::from_rows({{0.5, 0.5}, {0.5, 0.5}})) ==
        doctest::Approx(1.0));
  CHECK(conditional_entropy(std::vector<double>{0.25, 0.75},
                            DiscreteChannel::from_rows({{1.0, 0.0}, {0.5, 0.5}})) ==
        doctest::Approx(0.75));
  CHECK_THROWS_AS(conditional_entropy(std::vector<double>{1.0}, identity_channel(2)),
                  std::invalid_argument);
}

TEST_CASE("mutual information") {
  for (int n = 2; n <= 5; ++n) {
    std::vector<double> uniform(n, 1.0 / n);
    CHECK(mutual_information(uniform, identity_channel(n)) ==
          doctest::Approx(std::log2(n)).epsilon(1e-12));
  }
  // Constant channel carries nothing.
  auto constant = DiscreteChannel::from_rows({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}});
  CHECK(mutual_information(std::vector<double>{0.2, 0.5, 0.3}, constant) ==
        doctest::Approx(0.0));
  // Uniform input over a binary symmetric channel attains 1 - H2(p).
  CHECK(mutual_information(std::vector<double>{0.5, 0.5}, bsc(0.11)) ==
        doctest::Approx(test::bsc_capacity(0.11)).epsilon(1e-12));
}

TEST_CASE("mutual information symmetry via the joint") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int n_in = 2 + static_cast<int>(rng() % 3);
    const int n_out = 2 + static_cast<int>(rng() % 3);
    DiscreteChannel channel = test::random_channel(rng, n_in, n_out);
    std::vector<double> input = test::random_distribution(rng, n_in);

    // H(A) - H(A|S) computed through the joint distribution.
    std::vector<double> marginal(n_out, 0.0);
    for (int a = 0; a < n_in; ++a) {
      for (int s = 0; s < n_out; ++s) marginal[s] += input[a] * channel.at(a, s);
    }
    double h_a_given_s = 0.0;
    for (int s = 0; s < n_out; ++s) {
      if (marginal[s] <= 0.0) continue;
      for (int a = 0; a < n_in; ++a) {
        const double joint = input[a] * channel.at(a, s);
        if (joint > 0.0) h_a_given_s -= joint * std::log2(joint / marginal[s]);
      }
    }
    const double expected = entropy(input) - h_a_given_s;
    CHECK(mutual_information(input, channel) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("blahut-arimoto on the identity channel is exact for every size") {
  for (int n = 2; n <= 8; ++n) {
    CapacityResult result = blahut_arimoto(identity_channel(n));
    CHECK(result.converged);
    CHECK(result.capacity_bits == doctest::Approx(std::log2(n)).epsilon(1e-9));
    for (double p : result.optimal_input) CHECK(p == doctest::Approx(1.0 / n).epsilon(1e-9));
  }
}

TEST_CASE("blahut-arimoto matches the closed-form BSC capacity") {
  for (double p : {0.05, 0.11, 0.25, 0.45}) {
    CapacityResult result = blahut_arimoto(bsc(p), {1e-10, 2000});
    CHECK(result.capacity_bits == doctest::Approx(test::bsc_capacity(p)).epsilon(1e-6));
  }
}

TEST_CASE("blahut-arimoto resolves duplicate deterministic rows") {
  // Two inputs collapse onto one output; only two outputs are distinguishable.
  auto channel = DiscreteChannel::from_rows({{1.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}});
  CapacityResult result = blahut_arimoto(channel, {1e-10, 2000});
  CHECK(result.capacity_bits == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(result.capacity_bits ==
        doctest::Approx(test::grid_search_capacity(channel, 0.001)).epsilon(1e-4));
}

TEST_CASE("blahut-arimoto estimates rise monotonically and respect the dimension bound") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_in = 2 + static_cast<int>(rng() % 4);
    const int n_out = 2 + static_cast<int>(rng() % 4);
    DiscreteChannel channel = test::random_channel(rng, n_in, n_out);
    CapacityResult result = blahut_arimoto(channel);
    for (std::size_t k = 1; k < result.estimate_trace_bits.size(); ++k) {
      CHECK(result.estimate_trace_bits[k] >= result.estimate_trace_bits[k - 1] - 1e-12);
    }
    CHECK(result.capacity_bits >= 0.0);
    CHECK(result.capacity_bits <= std::log2(std::min(n_in, n_out)) + 1e-9);
  }
}

TEST_CASE("blahut-arimoto agrees with dense simplex search on small channels") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    DiscreteChannel channel = test::random_channel(rng, 3, 3);
    CapacityResult result = blahut_arimoto(channel, {1e-10, 2000});
    CHECK(result.capacity_bits ==
          doctest::Approx(test::grid_search_capacity(channel, 0.001)).epsilon(1e-4));
  }
}

TEST_CASE("blahut-arimoto validates parameters") {
  CHECK_THROWS_AS(blahut_arimoto(identity_channel(2), {0.0, 100}), std::invalid_argument);
  CHECK_THROWS_AS(blahut_arimoto(identity_channel(2), {1e-8, 0}), std::invalid_argument);
  CHECK_THROWS(blahut_arimoto(DiscreteChannel::from_rows({{0.7, 0.2}, {0.5, 0.5}})));
}

TEST_CASE("channel csv round trip and validation") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "empo_csv_test";
  fs::create_directories(dir);

  {
    std::ofstream out(dir / "bsc.csv");
    out << "0.89,0.11\n0.11,0.89\n";
  }
  DiscreteChannel channel = DiscreteChannel::load_csv(dir / "bsc.csv");
  CHECK(channel.n_inputs() == 2);
  CHECK(channel.n_outputs() == 2);
  CHECK(channel.at(0, 1) == doctest::Approx(0.11));

  {
    std::ofstream out(dir / "bad.csv");
    out << "0.6,0.2\n0.5,0.5\n";
  }
  CHECK_THROWS_AS(DiscreteChannel::load_csv(dir / "bad.csv"), std::invalid_argument);

  {
    std::ofstream out(dir / "junk.csv");
    out << "0.5,oops\n";
  }
  CHECK_THROWS_AS(DiscreteChannel::load_csv(dir / "junk.csv"), std::invalid_argument);

  fs::remove_all(dir);
}
