// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/stats.hpp"

namespace eevi {

enum class WeightRole { forward, auxiliary };

struct WeightLog {
  double log_weight = 0.0;
  WeightRole role = WeightRole::forward;
};

struct TailPoint {
  double t = 0.0;
  double frequency = 0.0;  // fraction with log w >= t + log_z
  double std_error = 0.0;  // binomial standard error of that fraction
};

struct WeightDiagnostics {
  double mean = 0.0;
  double variance = 0.0;
  double mad = 0.0;  // mean absolute deviation about the sample mean
  double mad_std_error = 0.0;
  std::vector<TailPoint> tail;
};

// Sample statistics of log-weights. The tail curve is measured relative to
// log_z, the log normalizer ratio when it is known.
inline WeightDiagnostics log_weight_diagnostics(std::span<const WeightLog> weights,
                                                double log_z = 0.0,
                                                std::span<const double> t_grid = {}) {
  require(!weights.empty(), ErrorCode::invalid_argument, "no weights to summarize");
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = weights[i].log_weight;
  WeightDiagnostics d;
  d.mean = stats::mean(lw);
  d.variance = stats::variance(lw);
  std::vector<double> dev(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) dev[i] = std::abs(lw[i] - d.mean);
  d.mad = stats::mean(dev);
  d.mad_std_error = stats::stderr_of_mean(dev);
  const double n = static_cast<double>(lw.size());
  for (double t : t_grid) {
    std::size_t hits = 0;
    for (double x : lw) hits += x >= t + log_z ? 1 : 0;
    const double f = static_cast<double>(hits) / n;
    d.tail.push_back({t, f, std::sqrt(std::max(f * (1.0 - f), 0.0) / n)});
  }
  return d;
}

}  // namespace eevi
