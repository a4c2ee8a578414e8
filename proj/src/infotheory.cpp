#include "empo/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace empo {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kProbabilityFloor = 1e-300;

}  // namespace

void validate_probability_vector(std::span<const double> p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative entry at index " +
                                  std::to_string(i));
    }
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument(std::string(what) + ": mass sums to " + std::to_string(sum));
  }
}

DiscreteChannel::DiscreteChannel(int n_inputs, int n_outputs)
    : n_inputs_(n_inputs), n_outputs_(n_outputs) {
  if (n_inputs < 1 || n_outputs < 1) {
    throw std::invalid_argument("DiscreteChannel: need at least one input and one output");
  }
  table_.assign(static_cast<std::size_t>(n_inputs) * n_outputs, 0.0);
}

DiscreteChannel DiscreteChannel::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("DiscreteChannel: no rows");
  DiscreteChannel ch(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw std::invalid_argument("DiscreteChannel: ragged rows");
    }
    std::copy(rows[i].begin(), rows[i].end(), ch.row(static_cast<int>(i)).begin());
  }
  ch.validate();
  return ch;
}

DiscreteChannel DiscreteChannel::load_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open channel file: " + file.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::invalid_argument(file.string() + ":" + std::to_string(line_no) +
                                    ": not a number: '" + field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(file.string() + ": no rows");
  return from_rows(rows);
}

void DiscreteChannel::validate() const {
  for (int i = 0; i < n_inputs_; ++i) {
    validate_probability_vector(row(i), ("channel row " + std::to_string(i)).c_str());
  }
}

double entropy(std::span<const double> p) {
  validate_probability_vector(p, "entropy input");
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log2(x);
  }
  return std::max(h, 0.0);
}

double conditional_entropy(std::span<const double> input, const DiscreteChannel& channel) {
  validate_probability_vector(input, "conditional_entropy input");
  channel.validate();
  if (static_cast<int>(input.size()) != channel.n_inputs()) {
    throw std::invalid_argument("conditional_entropy: input length " +
                                std::to_string(input.size()) + " != channel inputs " +
                                std::to_string(channel.n_inputs()));
  }
  double h = 0.0;
  for (int a = 0; a < channel.n_inputs(); ++a) {
    if (input[a] == 0.0) continue;
    double row_h = 0.0;
    for (double x : channel.row(a)) {
      if (x > 0.0) row_h -= x * std::log2(x);
    }
    h += input[a] * row_h;
  }
  return std::max(h, 0.0);
}

double mutual_information(std::span<const double> input, const DiscreteChannel& channel) {
  validate_probability_vector(input, "mutual_information input");
  channel.validate();
  if (static_cast<int>(input.size()) != channel.n_inputs()) {
    throw std::invalid_argument("mutual_information: input length " +
                                std::to_string(input.size()) + " != channel inputs " +
                                std::to_string(channel.n_inputs()));
  }
  std::vector<double> marginal(channel.n_outputs(), 0.0);
  for (int a = 0; a < channel.n_inputs(); ++a) {
    if (input[a] == 0.0) continue;
    auto row = channel.row(a);
    for (int s = 0; s < channel.n_outputs(); ++s) marginal[s] += input[a] * row[s];
  }
  double h_out = 0.0;
  for (double q : marginal) {
    if (q > 0.0) h_out -= q * std::log2(q);
  }
  double mi = h_out - conditional_entropy(input, channel);
  return mi > 0.0 ? mi : 0.0;
}

CapacityResult blahut_arimoto(const DiscreteChannel& channel, const BaParams& params) {
  channel.validate();
  if (!(params.epsilon_bits > 0.0)) throw std::invalid_argument("blahut_arimoto: epsilon must be > 0");
  if (params.max_iter < 1) throw std::invalid_argument("blahut_arimoto: max_iter must be >= 1");

  const int n = channel.n_inputs();
  const int m = channel.n_outputs();

  // Sparse row views plus the input-independent sum p log p term of the
  // divergence; rows never change across iterations.
  struct Entry {
    int output;
    double p;
  };
  std::vector<std::vector<Entry>> rows(n);
  std::vector<double> row_plogp(n, 0.0);
  for (int v = 0; v < n; ++v) {
    auto r = channel.row(v);
    for (int s = 0; s < m; ++s) {
      if (r[s] > 0.0) {
        rows[v].push_back({s, r[s]});
        row_plogp[v] += r[s] * std::log(r[s]);
      }
    }
  }

  CapacityResult result;
  std::vector<double> p(n, 1.0 / n);
  std::vector<double> marginal(m, 0.0);
  std::vector<double> log_marginal(m, 0.0);
  std::vector<double> d(n, 0.0);
  std::vector<double> log_weight(n, 0.0);

  double prev_bits = 0.0;
  for (int k = 1; k <= params.max_iter; ++k) {
    std::fill(marginal.begin(), marginal.end(), 0.0);
    for (int v = 0; v < n; ++v) {
      for (const Entry& e : rows[v]) marginal[e.output] += p[v] * e.p;
    }
    for (int s = 0; s < m; ++s) {
      log_marginal[s] = marginal[s] > 0.0 ? std::log(marginal[s]) : 0.0;
    }

    // d_v = KL(row_v || marginal) in nats; zero row entries contribute nothing.
    double estimate_nats = 0.0;
    for (int v = 0; v < n; ++v) {
      double cross = 0.0;
      for (const Entry& e : rows[v]) cross += e.p * log_marginal[e.output];
      d[v] = row_plogp[v] - cross;
      estimate_nats += p[v] * d[v];
    }
    const double estimate_bits = estimate_nats / kLn2;
    result.estimate_trace_bits.push_back(estimate_bits);
    result.iterations = k;

    // p_v <- p_v exp(d_v) / z, in log space to dodge overflow.
    double max_w = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v) {
      log_weight[v] = std::log(p[v]) + d[v];
      max_w = std::max(max_w, log_weight[v]);
    }
    double z = 0.0;
    for (int v = 0; v < n; ++v) {
      p[v] = std::exp(log_weight[v] - max_w);
      z += p[v];
    }
    for (int v = 0; v < n; ++v) {
      p[v] /= z;
      if (p[v] < kProbabilityFloor) p[v] = kProbabilityFloor;
    }
    double renorm = 0.0;
    for (double x : p) renorm += x;
    for (double& x : p) x /= renorm;

    if (k > 1 && std::abs(estimate_bits - prev_bits) < params.epsilon_bits) {
      result.converged = true;
      result.capacity_bits = estimate_bits;
      break;
    }
    prev_bits = estimate_bits;
    result.capacity_bits = estimate_bits;
  }

  result.optimal_input = std::move(p);
  if (result.capacity_bits < 0.0) result.capacity_bits = 0.0;
  return result;
}

}  // namespace empo
