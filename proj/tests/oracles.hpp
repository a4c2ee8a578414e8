#pragma once

// Brute-force reference computations used to pin expected values. These stay
// independent of the library code paths they check: mutual information and
// capacity are recomputed from first principles here.

#include <cmath>
#include <span>
#include <vector>

#include "empo/continuous.hpp"
#include "empo/infotheory.hpp"

namespace empo::test {

inline double oracle_mutual_information(std::span<const double> input,
                                        const DiscreteChannel& channel) {
  std::vector<double> marginal(channel.n_outputs(), 0.0);
  for (int a = 0; a < channel.n_inputs(); ++a) {
    for (int s = 0; s < channel.n_outputs(); ++s) {
      marginal[s] += input[a] * channel.at(a, s);
    }
  }
  double mi = 0.0;
  for (int a = 0; a < channel.n_inputs(); ++a) {
    if (input[a] == 0.0) continue;
    for (int s = 0; s < channel.n_outputs(); ++s) {
      const double p = channel.at(a, s);
      if (p > 0.0 && marginal[s] > 0.0) mi += input[a] * p * std::log2(p / marginal[s]);
    }
  }
  return mi;
}

// Dense grid search over the input simplex; supports 2 or 3 inputs.
inline double grid_search_capacity(const DiscreteChannel& channel, double step = 0.001) {
  const int n = channel.n_inputs();
  double best = 0.0;
  std::vector<double> p(n, 0.0);
  const int ticks = static_cast<int>(std::lround(1.0 / step));
  if (n == 2) {
    for (int i = 0; i <= ticks; ++i) {
      p[0] = static_cast<double>(i) / ticks;
      p[1] = 1.0 - p[0];
      best = std::max(best, oracle_mutual_information(p, channel));
    }
    return best;
  }
  if (n == 3) {
    for (int i = 0; i <= ticks; ++i) {
      p[0] = static_cast<double>(i) / ticks;
      for (int j = 0; j <= ticks - i; ++j) {
        p[1] = static_cast<double>(j) / ticks;
        p[2] = 1.0 - p[0] - p[1];
        if (p[2] < 0.0) p[2] = 0.0;
        best = std::max(best, oracle_mutual_information(p, channel));
      }
    }
    return best;
  }
  throw std::invalid_argument("grid_search_capacity: supports 2 or 3 inputs");
}

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double bsc_capacity(double crossover) { return 1.0 - binary_entropy(crossover); }

// Brute-force power split for up to 3 parallel channels, objective
// 0.5 log2(1 + sigma_i P_i), grid resolution power/1000.
inline double grid_search_water_filling(std::span<const double> sigmas, double power) {
  const int ticks = 1000;
  const auto value = [&](double s, double p) { return 0.5 * std::log2(1.0 + s * p); };
  double best = 0.0;
  if (sigmas.size() == 1) {
    return value(sigmas[0], power);
  }
  if (sigmas.size() == 2) {
    for (int i = 0; i <= ticks; ++i) {
      const double p0 = power * i / ticks;
      best = std::max(best, value(sigmas[0], p0) + value(sigmas[1], power - p0));
    }
    return best;
  }
  for (int i = 0; i <= ticks; ++i) {
    const double p0 = power * i / ticks;
    for (int j = 0; j <= ticks - i; ++j) {
      const double p1 = power * j / ticks;
      best = std::max(best, value(sigmas[0], p0) + value(sigmas[1], p1) +
                                value(sigmas[2], power - p0 - p1));
    }
  }
  return best;
}

// Fine output-binned discrete channel for a Gaussian action model with 1-D or
// 2-D outcomes; bin mass from the Gaussian CDF, rows renormalized against the
// clipped tails.
inline DiscreteChannel discretize_gaussian_model(const GaussianActionModel& model,
                                                 int bins_per_dim = 400, double pad_sigmas = 8.0) {
  const int d = model.dim();
  if (d != 1 && d != 2) {
    throw std::invalid_argument("discretize_gaussian_model: supports 1-D or 2-D outcomes");
  }
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (int v = 0; v < model.n_actions(); ++v) {
    for (int q = 0; q < d; ++q) {
      const double s = std::sqrt(model.variances[v][q]);
      lo[q] = std::min(lo[q], model.means[v][q] - pad_sigmas * s);
      hi[q] = std::max(hi[q], model.means[v][q] + pad_sigmas * s);
    }
  }

  const auto bin_mass = [](double a, double b, double mean, double var) {
    const double s = std::sqrt(2.0 * var);
    return 0.5 * (std::erf((b - mean) / s) - std::erf((a - mean) / s));
  };

  const int total_bins = d == 1 ? bins_per_dim : bins_per_dim * bins_per_dim;
  std::vector<std::vector<double>> rows(model.n_actions(), std::vector<double>(total_bins, 0.0));
  for (int v = 0; v < model.n_actions(); ++v) {
    if (d == 1) {
      const double w = (hi[0] - lo[0]) / bins_per_dim;
      for (int b = 0; b < bins_per_dim; ++b) {
        rows[v][b] = bin_mass(lo[0] + b * w, lo[0] + (b + 1) * w, model.means[v][0],
                              model.variances[v][0]);
      }
    } else {
      const double w0 = (hi[0] - lo[0]) / bins_per_dim;
      const double w1 = (hi[1] - lo[1]) / bins_per_dim;
      std::vector<double> m0(bins_per_dim), m1(bins_per_dim);
      for (int b = 0; b < bins_per_dim; ++b) {
        m0[b] = bin_mass(lo[0] + b * w0, lo[0] + (b + 1) * w0, model.means[v][0],
                         model.variances[v][0]);
        m1[b] = bin_mass(lo[1] + b * w1, lo[1] + (b + 1) * w1, model.means[v][1],
                         model.variances[v][1]);
      }
      for (int b0 = 0; b0 < bins_per_dim; ++b0) {
        for (int b1 = 0; b1 < bins_per_dim; ++b1) {
          rows[v][b0 * bins_per_dim + b1] = m0[b0] * m1[b1];
        }
      }
    }
    double sum = 0.0;
    for (double x : rows[v]) sum += x;
    for (double& x : rows[v]) x /= sum;
  }
  return DiscreteChannel::from_rows(rows);
}

}  // namespace empo::test
