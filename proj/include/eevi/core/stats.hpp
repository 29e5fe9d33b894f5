// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"

namespace eevi::stats {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return std::nan("");
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// Unbiased sample variance (zero for fewer than two values).
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mu;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::invalid_argument,
          "covariance of series with different lengths");
  if (xs.size() < 2) return 0.0;
  const double mx = mean(xs);
  const double my = mean(ys);
  std::vector<double> prod(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    prod[i] = (xs[i] - mx) * (ys[i] - my);
  return pairwise_sum(prod) / static_cast<double>(xs.size() - 1);
}

inline double stderr_of_mean(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  return std::sqrt(variance(xs) / static_cast<double>(xs.size()));
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_log_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

// Gaussian differential entropy of a scalar with the given variance.
inline double gaussian_entropy_1d(double var) {
  return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
}

}  // namespace eevi::stats
