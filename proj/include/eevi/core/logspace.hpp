// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/rng.hpp"

namespace eevi {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(sum_i exp(x_i)). Returns -inf for an empty input or when every entry
// is -inf; +inf propagates.
inline double logsumexp(std::span<const double> xs) {
  if (xs.empty()) return neg_inf;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// log((1/n) sum_i exp(x_i))
inline double logmeanexp(std::span<const double> xs) {
  return logsumexp(xs) - std::log(static_cast<double>(xs.size()));
}

inline double logaddexp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a == neg_inf) return neg_inf;
  return a + std::log1p(std::exp(b - a));
}

// Pairwise summation; the result depends only on the order of `xs`.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const auto half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

// Draws an index with probability proportional to exp(log_weights[i]) by
// inverting the CDF at a single uniform.
inline std::size_t sample_log_categorical(Rng& rng,
                                          std::span<const double> log_weights) {
  const double lse = logsumexp(log_weights);
  require(lse > neg_inf, ErrorCode::all_weights_zero,
          "categorical draw over weights that are all zero");
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == neg_inf) continue;
    last_positive = i;
    cum += std::exp(log_weights[i] - lse);
    if (u < cum) return i;
  }
  return last_positive;
}

// Multinomial resampling: `count` ancestor indices, each by inverse CDF on its
// own uniform, written in particle-index order.
inline std::vector<std::size_t> resample_multinomial(
    Rng& rng, std::span<const double> log_weights, std::size_t count) {
  const double lse = logsumexp(log_weights);
  require(lse > neg_inf, ErrorCode::particle_collapse,
          "all particle weights are zero");
  std::vector<double> cdf(log_weights.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    cum += std::exp(log_weights[i] - lse);
    cdf[i] = cum;
  }
  std::vector<std::size_t> out(count);
  for (auto& a : out) {
    const double u = rng.uniform() * cum;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<std::size_t>(it - cdf.begin());
    if (idx >= cdf.size()) idx = cdf.size() - 1;
    a = idx;
  }
  return out;
}

}  // namespace eevi
