// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"
#include "eevi/proposals/basic.hpp"

namespace eevi {

// A proposal q(v, x; y) on an extended space together with its auxiliary
// proposal r(v; x, y). Estimators only consume the two extended log-weights
//   log w  = log p(x, y) r(v; x, y) / q(v, x; y)      (v, x) ~ q
//   log w' = log q(v, x; y) / (p(x, y) r(v; x, y))    v ~ r(.; x, y)
class ExtendedProposal {
 public:
  virtual ~ExtendedProposal() = default;
  virtual const Selection& selection() const = 0;
  virtual std::string id() const = 0;
  // Writes the proposed latents into z (targets already present).
  virtual double propose_log_weight(Rng& rng, std::span<double> z) const = 0;
  // z is a complete point with p(z) > 0.
  virtual double aux_log_weight(Rng& rng, std::span<const double> z) const = 0;
};

// A basic proposal viewed as an extended proposal with a trivial v.
class BasicExtended final : public ExtendedProposal {
 public:
  BasicExtended(const JointModel& model, std::shared_ptr<const BasicProposal> base)
      : model_(model), base_(std::move(base)) {}

  const Selection& selection() const override { return base_->selection(); }
  std::string id() const override { return base_->id(); }

  double propose_log_weight(Rng& rng, std::span<double> z) const override {
    const double lq = base_->propose(rng, z);
    return model_.log_joint(z) - lq;
  }

  double aux_log_weight(Rng&, std::span<const double> z) const override {
    const double lp = model_.log_joint(z);
    require(lp > neg_inf, ErrorCode::zero_density_conditioning_point,
            "conditioning point has zero joint density");
    return base_->assess(z) - lp;
  }

 private:
  const JointModel& model_;
  std::shared_ptr<const BasicProposal> base_;
};

// Auxiliary record of one SIR run: the P particles (latent vectors), their
// base log ratios log p(x_j, y) - log q0(x_j; y), base log densities, and the
// selected index.
struct SirDraw {
  std::vector<std::vector<double>> particles;
  std::vector<double> log_ratios;
  std::vector<double> log_q0;
  std::size_t selected = 0;
  double log_weight = 0.0;
};

// The extended weight of a SIR particle set: log mean of the base ratios.
inline double sir_log_weight(std::span<const double> log_ratios) {
  return logmeanexp(log_ratios);
}

// Resampling step of SIR on frozen particles.
inline std::size_t sir_select(Rng& rng, std::span<const double> log_ratios) {
  return sample_log_categorical(rng, log_ratios);
}

// Sampling importance resampling over a basic proposal q0.
class SirProposal final : public ExtendedProposal {
 public:
  SirProposal(const JointModel& model, std::shared_ptr<const BasicProposal> base,
              std::size_t particles)
      : model_(model), base_(std::move(base)), particles_(particles) {
    require(particles_ >= 1, ErrorCode::invalid_argument, "SIR needs P >= 1");
  }

  const Selection& selection() const override { return base_->selection(); }
  std::string id() const override {
    return "sir" + std::to_string(particles_) + "(" + base_->id() + ")";
  }
  std::size_t particles() const { return particles_; }
  const BasicProposal& base() const { return *base_; }

  // Forward run; the selected particle is written into z.
  SirDraw propose(Rng& rng, std::span<double> z) const {
    const auto& sel = selection();
    SirDraw d;
    d.particles.reserve(particles_);
    d.log_ratios.resize(particles_);
    d.log_q0.resize(particles_);
    Point work(z.begin(), z.end());
    for (std::size_t j = 0; j < particles_; ++j) {
      d.log_q0[j] = base_->propose(rng, work);
      d.log_ratios[j] = model_.log_joint(work) - d.log_q0[j];
      d.particles.push_back(sel.gather_latents(work));
    }
    require(logsumexp(d.log_ratios) > neg_inf, ErrorCode::all_weights_zero,
            "every SIR particle has zero joint density");
    d.selected = sir_select(rng, d.log_ratios);
    d.log_weight = sir_log_weight(d.log_ratios);
    sel.scatter_latents(d.particles[d.selected], z);
    return d;
  }

  // Auxiliary run: the given latents occupy a uniform slot k, the rest are
  // fresh base draws. log_weight holds log w'.
  SirDraw propose_aux(Rng& rng, std::span<const double> z) const {
    const auto& sel = selection();
    const double lp = model_.log_joint(z);
    require(lp > neg_inf, ErrorCode::zero_density_conditioning_point,
            "conditioning point has zero joint density");
    SirDraw d;
    d.selected = rng.uniform_index(particles_);
    d.particles.resize(particles_);
    d.log_ratios.resize(particles_);
    d.log_q0.resize(particles_);
    Point work(z.begin(), z.end());
    for (std::size_t j = 0; j < particles_; ++j) {
      if (j == d.selected) {
        d.log_q0[j] = base_->assess(z);
        d.log_ratios[j] = lp - d.log_q0[j];
        d.particles[j] = sel.gather_latents(z);
        continue;
      }
      d.log_q0[j] = base_->propose(rng, work);
      d.log_ratios[j] = model_.log_joint(work) - d.log_q0[j];
      d.particles[j] = sel.gather_latents(work);
    }
    d.log_weight = -sir_log_weight(d.log_ratios);
    return d;
  }

  // Density route to the same weights: log q(v, x; y) and log r(v; x, y).
  static double log_q_extended(const SirDraw& d) {
    return pairwise_sum(d.log_q0) + d.log_ratios[d.selected] - logsumexp(d.log_ratios);
  }
  static double log_r_extended(const SirDraw& d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d.log_q0.size(); ++j)
      if (j != d.selected) s += d.log_q0[j];
    return s - std::log(static_cast<double>(d.log_q0.size()));
  }

  double propose_log_weight(Rng& rng, std::span<double> z) const override {
    return propose(rng, z).log_weight;
  }
  double aux_log_weight(Rng& rng, std::span<const double> z) const override {
    return propose_aux(rng, z).log_weight;
  }

 private:
  const JointModel& model_;
  std::shared_ptr<const BasicProposal> base_;
  std::size_t particles_;
};

// SIR over an extended proposal (q0, r0). Each candidate's importance ratio
// uses the unbiased inner weight w0, so the outer weight is the mean of the
// inner weights and the resampled latents keep a tractable extended density.
class NestedSirProposal final : public ExtendedProposal {
 public:
  NestedSirProposal(const JointModel& model,
                    std::shared_ptr<const ExtendedProposal> inner,
                    std::size_t particles)
      : model_(model), inner_(std::move(inner)), particles_(particles) {
    require(particles_ >= 1, ErrorCode::invalid_argument,
            "nested SIR needs P >= 1");
  }

  const Selection& selection() const override { return inner_->selection(); }
  std::string id() const override {
    return "nested-sir" + std::to_string(particles_) + "(" + inner_->id() + ")";
  }
  std::size_t particles() const { return particles_; }

  double propose_log_weight(Rng& rng, std::span<double> z) const override {
    const auto& sel = selection();
    std::vector<double> lw(particles_);
    std::vector<std::vector<double>> xs(particles_);
    Point work(z.begin(), z.end());
    for (std::size_t j = 0; j < particles_; ++j) {
      lw[j] = inner_->propose_log_weight(rng, work);
      xs[j] = sel.gather_latents(work);
    }
    require(logsumexp(lw) > neg_inf, ErrorCode::all_weights_zero,
            "every nested SIR particle has zero weight");
    const auto k = sample_log_categorical(rng, lw);
    sel.scatter_latents(xs[k], z);
    return logmeanexp(lw);
  }

  double aux_log_weight(Rng& rng, std::span<const double> z) const override {
    require(model_.log_joint(z) > neg_inf, ErrorCode::zero_density_conditioning_point,
            "conditioning point has zero joint density");
    const auto k = rng.uniform_index(particles_);
    std::vector<double> lw(particles_);
    Point work(z.begin(), z.end());
    for (std::size_t j = 0; j < particles_; ++j) {
      if (j == k) {
        // Inner weight of the retained particle, from v ~ r0(.; x, y).
        lw[j] = -inner_->aux_log_weight(rng, z);
        continue;
      }
      lw[j] = inner_->propose_log_weight(rng, work);
    }
    return -logmeanexp(lw);
  }

 private:
  const JointModel& model_;
  std::shared_ptr<const ExtendedProposal> inner_;
  std::size_t particles_;
};

}  // namespace eevi
