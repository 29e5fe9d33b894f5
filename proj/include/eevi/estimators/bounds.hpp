// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/parallel.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/core/stats.hpp"
#include "eevi/estimators/mcmc.hpp"
#include "eevi/model.hpp"
#include "eevi/proposals/extended.hpp"

namespace eevi {

struct EstimatorConfig {
  std::size_t n = 1000;         // outer replicates
  std::size_t m = 1;            // inner replicates
  std::size_t mcmc_steps = 0;   // refresh sweeps between lower-bound inner draws
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    require(n >= 1 && m >= 1, ErrorCode::invalid_argument, "n and m must be >= 1");
    require(workers >= 1, ErrorCode::invalid_argument, "workers must be >= 1");
  }
};

enum class BoundKind { lower, upper };

inline const char* bound_kind_name(BoundKind k) {
  return k == BoundKind::lower ? "lower" : "upper";
}

// One side of an entropy interval. terms[i * m + j] holds the entropy-scale
// contribution of inner draw j of outer replicate i: -log w for the upper
// bound and log w' for the lower bound, so point is their mean.
struct BoundEstimate {
  BoundKind kind = BoundKind::upper;
  double point = 0.0;
  double std_error = 0.0;
  double variance = 0.0;  // sample variance of the terms
  std::vector<double> terms;
  std::vector<double> replicate_means;  // one per outer replicate
  std::size_t n = 0;
  std::size_t m = 0;
  bool valid = true;

  // Fills point, variance, stderr and validity from terms.
  void summarize() {
    valid = true;
    for (double t : terms) valid = valid && std::isfinite(t);
    replicate_means.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      replicate_means[i] = stats::mean(std::span<const double>(terms).subspan(i * m, m));
    point = stats::mean(terms);
    if (!valid) {
      variance = std_error = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    variance = stats::variance(terms);
    if (n >= 2)
      std_error = stats::stderr_of_mean(replicate_means);
    else
      std_error = std::sqrt(variance / static_cast<double>(terms.size()));
  }

  // A bound known exactly (zero-variance oracle route).
  static BoundEstimate exact(BoundKind kind, double value) {
    BoundEstimate b;
    b.kind = kind;
    b.point = value;
    b.n = b.m = 1;
    b.terms = {value};
    b.replicate_means = {value};
    return b;
  }
};

struct IntervalEstimate {
  BoundEstimate lower;
  BoundEstimate upper;
  bool shared_outer = false;
  bool exact = false;

  double midpoint() const { return 0.5 * (lower.point + upper.point); }
  // Not clamped: a single noisy realization may give a negative width.
  double width() const { return upper.point - lower.point; }
  bool valid() const { return lower.valid && upper.valid; }
  bool contains(double v, double slack = 0.0) const {
    return lower.point - slack <= v && v <= upper.point + slack;
  }
};

// Substream bookkeeping. Outer joint draws of replicate i come from
// (seed, kOuterTag, outer, i) and inner draws from (seed, kInnerTag, inner, i),
// so results never depend on the worker count.
struct StreamIds {
  std::uint64_t outer = 0;
  std::uint64_t inner = 0;
};

inline constexpr std::uint64_t kOuterTag = 0x6f75746572ULL;
inline constexpr std::uint64_t kInnerTag = 0x696e6e6572ULL;

inline Point outer_draw(const JointModel& model, std::uint64_t seed,
                        std::uint64_t stream, std::size_t i) {
  Rng rng = Rng::substream(seed, {kOuterTag, stream, i});
  Point z(model.layout().width());
  model.simulate(rng, z);
  return z;
}

// n outer joint draws for sharing across bounds and terms.
inline std::vector<Point> outer_draws(const JointModel& model, const EstimatorConfig& cfg,
                                      std::uint64_t stream = 0) {
  std::vector<Point> out(cfg.n);
  parallel_for(cfg.n, cfg.workers,
               [&](std::size_t i) { out[i] = outer_draw(model, cfg.seed, stream, i); });
  return out;
}

namespace detail {

inline BoundEstimate run_bound(const JointModel& model, const ExtendedProposal& prop,
                               BoundKind kind, const EstimatorConfig& cfg,
                               StreamIds streams, const std::vector<Point>* shared) {
  cfg.validate();
  const auto& sel = prop.selection();
  require(!sel.is_full(), ErrorCode::invalid_selection,
          "full selection has no latents; use the exact plug-in route");
  if (shared)
    require(shared->size() == cfg.n, ErrorCode::invalid_argument,
            "shared outer draws do not match n");
  if (kind == BoundKind::lower && cfg.mcmc_steps > 0 && cfg.m > 1)
    require(model.can_resimulate_sites(), ErrorCode::capability_missing,
            model.name() + " does not support the MCMC refresh");

  BoundEstimate b;
  b.kind = kind;
  b.n = cfg.n;
  b.m = cfg.m;
  b.terms.resize(cfg.n * cfg.m);
  parallel_for(cfg.n, cfg.workers, [&](std::size_t i) {
    Point z = shared ? (*shared)[i] : outer_draw(model, cfg.seed, streams.outer, i);
    Rng rng = Rng::substream(cfg.seed, {kInnerTag, streams.inner, i});
    double* out = b.terms.data() + i * cfg.m;
    if (kind == BoundKind::upper) {
      Point work = z;
      for (std::size_t j = 0; j < cfg.m; ++j) out[j] = -prop.propose_log_weight(rng, work);
      return;
    }
    for (std::size_t j = 0; j < cfg.m; ++j) {
      if (j > 0)
        for (std::size_t s = 0; s < cfg.mcmc_steps; ++s) mcmc_refresh(model, sel, z, rng);
      out[j] = prop.aux_log_weight(rng, z);
    }
  });
  b.summarize();
  return b;
}

}  // namespace detail

// Upper bound on H(Y): -mean log w with (V, X) ~ q(.; Y), (X~, Y) ~ p.
inline BoundEstimate entropy_upper(const JointModel& model, const ExtendedProposal& q,
                                   const EstimatorConfig& cfg,
                                   StreamIds streams = {1, 1},
                                   const std::vector<Point>* shared = nullptr) {
  return detail::run_bound(model, q, BoundKind::upper, cfg, streams, shared);
}

// Lower bound on H(Y): mean log w' with (X', Y) ~ p and V ~ r'(.; X', Y).
inline BoundEstimate entropy_lower(const JointModel& model, const ExtendedProposal& q,
                                   const EstimatorConfig& cfg,
                                   StreamIds streams = {2, 2},
                                   const std::vector<Point>* shared = nullptr) {
  return detail::run_bound(model, q, BoundKind::lower, cfg, streams, shared);
}

// Both bounds. With shared_outer the same outer draws feed both sides.
inline IntervalEstimate entropy_interval(const JointModel& model,
                                         const ExtendedProposal& upper_prop,
                                         const ExtendedProposal& lower_prop,
                                         const EstimatorConfig& cfg,
                                         bool shared_outer = true) {
  IntervalEstimate out;
  out.shared_outer = shared_outer;
  if (shared_outer) {
    const auto outer = outer_draws(model, cfg, 0);
    out.upper = entropy_upper(model, upper_prop, cfg, {0, 1}, &outer);
    out.lower = entropy_lower(model, lower_prop, cfg, {0, 2}, &outer);
  } else {
    out.upper = entropy_upper(model, upper_prop, cfg, {1, 1});
    out.lower = entropy_lower(model, lower_prop, cfg, {2, 2});
  }
  return out;
}

inline IntervalEstimate entropy_interval(const JointModel& model,
                                         const ExtendedProposal& prop,
                                         const EstimatorConfig& cfg,
                                         bool shared_outer = true) {
  return entropy_interval(model, prop, prop, cfg, shared_outer);
}

// Plug-in -mean log p(z) over joint draws; for target sets covering every
// variable, where there is nothing to infer.
inline BoundEstimate entropy_plugin(const JointModel& model, const EstimatorConfig& cfg,
                                    std::uint64_t outer_stream = 0,
                                    const std::vector<Point>* shared = nullptr) {
  cfg.validate();
  if (shared)
    require(shared->size() == cfg.n, ErrorCode::invalid_argument,
            "shared outer draws do not match n");
  BoundEstimate b;
  b.kind = BoundKind::upper;
  b.n = cfg.n;
  b.m = 1;
  b.terms.resize(cfg.n);
  parallel_for(cfg.n, cfg.workers, [&](std::size_t i) {
    const Point z = shared ? (*shared)[i] : outer_draw(model, cfg.seed, outer_stream, i);
    b.terms[i] = -model.log_joint(z);
  });
  b.summarize();
  return b;
}

// Zero-width interval at an exactly known entropy.
inline IntervalEstimate exact_interval(double value) {
  IntervalEstimate out;
  out.lower = BoundEstimate::exact(BoundKind::lower, value);
  out.upper = BoundEstimate::exact(BoundKind::upper, value);
  out.shared_outer = true;
  out.exact = true;
  return out;
}

// Phi(sqrt(t) B_lo / s_lo) * Phi(sqrt(t) B_hi / s_hi)
inline double coverage_probability(double bias_lower, double bias_upper, double sd_lower,
                                   double sd_upper, double t) {
  require(sd_lower > 0.0 && sd_upper > 0.0, ErrorCode::nonpositive_stddev,
          "standard deviations must be positive");
  require(t >= 1.0, ErrorCode::invalid_argument, "sample budget must be >= 1");
  const double r = std::sqrt(t);
  return stats::normal_cdf(r * bias_lower / sd_lower) *
         stats::normal_cdf(r * bias_upper / sd_upper);
}

}  // namespace eevi
