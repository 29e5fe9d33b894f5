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
#include "eevi/proposals/extended.hpp"

namespace eevi {

// Step structure of an SMC proposal. States are full-width points whose
// target slots hold y; at step t only the entries the kernels define for t
// are meaningful. Steps run t = 0..T and the final target is p(x, y).
class SmcKernels {
 public:
  virtual ~SmcKernels() = default;
  virtual const Selection& selection() const = 0;
  virtual std::string id() const = 0;
  virtual std::size_t steps() const = 0;  // T

  // x_0 ~ q0(.; y); returns log q0.
  virtual double sample_initial(Rng& rng, std::span<double> s) const = 0;
  virtual double log_initial(std::span<const double> s) const = 0;
  // log p~_t(s; y)
  virtual double log_target(std::size_t t, std::span<const double> s) const = 0;
  // log p~_0(s) - log q0(s), given log q0 from sample_initial.
  virtual double log_initial_weight(std::span<const double> s, double log_q0) const {
    return log_target(0, s) - log_q0;
  }

  // next ~ q_t(.; prev), t >= 1.
  virtual void sample_forward(std::size_t t, Rng& rng, std::span<const double> prev,
                              std::span<double> next) const = 0;
  // log [p~_t(next) l_{t-1}(prev; next) / (p~_{t-1}(prev) q_t(next; prev))]
  virtual double log_incremental_weight(std::size_t t, std::span<const double> prev,
                                        std::span<const double> next) const = 0;

  // prev ~ l_t(.; next), t = 0..T-1.
  virtual bool has_backward(std::size_t) const { return false; }
  virtual void sample_backward(std::size_t t, Rng&, std::span<const double>,
                               std::span<double>) const {
    fail(ErrorCode::backward_kernel_unavailable,
         "no backward kernel for step " + std::to_string(t));
  }
};

// Serializable SMC settings.
struct SmcConfig {
  std::size_t particles = 1;
  std::size_t steps = 0;
  std::vector<double> schedule;  // explicit beta_0..beta_T; empty means linear
  std::size_t mh_moves = 1;

  std::vector<double> betas() const {
    if (!schedule.empty()) {
      require(schedule.size() == steps + 1, ErrorCode::invalid_argument,
              "schedule needs steps + 1 entries");
      for (std::size_t t = 0; t < schedule.size(); ++t) {
        require(schedule[t] >= 0.0 && schedule[t] <= 1.0,
                ErrorCode::invalid_argument, "schedule entries must lie in [0, 1]");
        require(t == 0 || schedule[t] >= schedule[t - 1],
                ErrorCode::invalid_argument, "schedule must be nondecreasing");
      }
      require(schedule.back() == 1.0, ErrorCode::invalid_argument,
              "schedule must end at 1");
      return schedule;
    }
    std::vector<double> b(steps + 1);
    for (std::size_t t = 0; t <= steps; ++t)
      b[t] = steps == 0 ? 1.0 : static_cast<double>(t) / static_cast<double>(steps);
    b.back() = 1.0;
    return b;
  }

  void validate() const {
    require(particles >= 1, ErrorCode::invalid_argument, "SMC needs P >= 1");
    (void)betas();
  }
};

// Geometric path p~_t = p^{b_t} q0^{1 - b_t} between a basic proposal and the
// joint, moved by independence Metropolis-Hastings with q0 as proposal. Each
// move is reversible for its target, so the backward kernels are the forward
// moves themselves and the incremental weight reduces to
// p~_t(x_{t-1}) / p~_{t-1}(x_{t-1}).
class TemperedKernels final : public SmcKernels {
 public:
  TemperedKernels(const JointModel& model, std::shared_ptr<const BasicProposal> base,
                  std::vector<double> betas, std::size_t mh_moves)
      : model_(model), base_(std::move(base)), betas_(std::move(betas)),
        mh_moves_(mh_moves) {
    require(!betas_.empty() && betas_.back() == 1.0, ErrorCode::invalid_argument,
            "tempering schedule must end at 1");
  }

  const Selection& selection() const override { return base_->selection(); }
  std::string id() const override { return base_->id(); }
  std::size_t steps() const override { return betas_.size() - 1; }
  const std::vector<double>& betas() const { return betas_; }

  double sample_initial(Rng& rng, std::span<double> s) const override {
    return base_->propose(rng, s);
  }
  double log_initial(std::span<const double> s) const override {
    return base_->assess(s);
  }

  double log_target(std::size_t t, std::span<const double> s) const override {
    return mix(betas_[t], model_.log_joint(s), base_->assess(s));
  }

  double log_initial_weight(std::span<const double> s, double log_q0) const override {
    const double b = betas_[0];
    if (b == 0.0) return 0.0;
    const double lp = model_.log_joint(s);
    if (b == 1.0) return lp - log_q0;
    return b * (lp - log_q0);
  }

  void sample_forward(std::size_t t, Rng& rng, std::span<const double> prev,
                      std::span<double> next) const override {
    std::copy(prev.begin(), prev.end(), next.begin());
    move(betas_[t], rng, next);
  }

  double log_incremental_weight(std::size_t t, std::span<const double> prev,
                                std::span<const double>) const override {
    const double db = betas_[t] - betas_[t - 1];
    if (db == 0.0) return 0.0;
    const double lp = model_.log_joint(prev);
    if (lp == neg_inf) return neg_inf;
    return db * (lp - base_->assess(prev));
  }

  bool has_backward(std::size_t) const override { return true; }
  void sample_backward(std::size_t t, Rng& rng, std::span<const double> next,
                       std::span<double> prev) const override {
    std::copy(next.begin(), next.end(), prev.begin());
    move(betas_[t + 1], rng, prev);
  }

 private:
  static double mix(double b, double lp, double lq) {
    if (b == 1.0) return lp;
    if (b == 0.0) return lq;
    if (lp == neg_inf) return neg_inf;
    return b * lp + (1.0 - b) * lq;
  }

  // mh_moves independence-sampler steps targeting p^b q0^{1-b}.
  void move(double b, Rng& rng, std::span<double> s) const {
    if (b == 0.0) {
      // The target is q0 itself: one exact draw per move.
      for (std::size_t k = 0; k < mh_moves_; ++k) base_->propose(rng, s);
      return;
    }
    Point cand(s.begin(), s.end());
    double cur = model_.log_joint(s) - base_->assess(s);
    for (std::size_t k = 0; k < mh_moves_; ++k) {
      const double lq = base_->propose(rng, cand);
      const double lr = model_.log_joint(cand) - lq;
      const double u = rng.uniform_open();
      bool accept;
      if (lr == neg_inf) accept = false;
      else if (cur == neg_inf) accept = true;
      else accept = std::log(u) < b * (lr - cur);
      if (accept) {
        selection().copy_latents(cand, s);
        cur = lr;
      }
    }
  }

  const JointModel& model_;
  std::shared_ptr<const BasicProposal> base_;
  std::vector<double> betas_;
  std::size_t mh_moves_;
};

// Record of one SMC or conditional-SMC run.
struct SmcDraw {
  std::vector<double> step_log_means;  // log (1/P) sum_i w_t^i, t = 0..T
  std::size_t selected = 0;
  double log_weight = 0.0;
};

// Sequential Monte Carlo as an extended proposal, with conditional SMC as the
// auxiliary proposal. Multinomial resampling at every step.
class SmcProposal final : public ExtendedProposal {
 public:
  static constexpr double kTargetTolerance = 1e-9;

  SmcProposal(const JointModel& model, std::shared_ptr<const SmcKernels> kernels,
              std::size_t particles)
      : model_(model), kernels_(std::move(kernels)), particles_(particles) {
    require(particles_ >= 1, ErrorCode::invalid_argument, "SMC needs P >= 1");
    check_final_target();
  }

  const Selection& selection() const override { return kernels_->selection(); }
  std::string id() const override {
    return "smc" + std::to_string(particles_) + "x" +
           std::to_string(kernels_->steps()) + "(" + kernels_->id() + ")";
  }
  std::size_t particles() const { return particles_; }
  const SmcKernels& kernels() const { return *kernels_; }

  SmcDraw propose(Rng& rng, std::span<double> z) const {
    const std::size_t T = kernels_->steps();
    SmcDraw d;
    d.step_log_means.reserve(T + 1);
    std::vector<Point> cur(particles_, Point(z.begin(), z.end()));
    std::vector<Point> nxt = cur;
    std::vector<double> lw(particles_);
    for (std::size_t i = 0; i < particles_; ++i) {
      const double lq = kernels_->sample_initial(rng, cur[i]);
      lw[i] = kernels_->log_initial_weight(cur[i], lq);
    }
    d.step_log_means.push_back(step_mean(lw, 0));
    for (std::size_t t = 1; t <= T; ++t) {
      const auto anc = resample_multinomial(rng, lw, particles_);
      for (std::size_t i = 0; i < particles_; ++i) {
        kernels_->sample_forward(t, rng, cur[anc[i]], nxt[i]);
        lw[i] = kernels_->log_incremental_weight(t, cur[anc[i]], nxt[i]);
      }
      std::swap(cur, nxt);
      d.step_log_means.push_back(step_mean(lw, t));
    }
    d.selected = sample_log_categorical(rng, lw);
    selection().copy_latents(cur[d.selected], z);
    d.log_weight = pairwise_sum(d.step_log_means);
    return d;
  }

  // Conditional SMC through the retained trajectory ending at z.
  SmcDraw propose_aux(Rng& rng, std::span<const double> z) const {
    const std::size_t T = kernels_->steps();
    require(model_.log_joint(z) > neg_inf, ErrorCode::zero_density_conditioning_point,
            "conditioning point has zero joint density");
    for (std::size_t t = 0; t < T; ++t)
      require(kernels_->has_backward(t), ErrorCode::backward_kernel_unavailable,
              "no backward kernel for step " + std::to_string(t));

    std::vector<Point> path(T + 1, Point(z.begin(), z.end()));
    for (std::size_t t = T; t-- > 0;) kernels_->sample_backward(t, rng, path[t + 1], path[t]);
    std::vector<std::size_t> slot(T + 1);
    for (auto& b : slot) b = rng.uniform_index(particles_);

    SmcDraw d;
    d.step_log_means.reserve(T + 1);
    std::vector<Point> cur(particles_, Point(z.begin(), z.end()));
    std::vector<Point> nxt = cur;
    std::vector<double> lw(particles_);
    for (std::size_t i = 0; i < particles_; ++i) {
      if (i == slot[0]) {
        cur[i] = path[0];
        lw[i] = kernels_->log_initial_weight(cur[i], kernels_->log_initial(cur[i]));
        continue;
      }
      const double lq = kernels_->sample_initial(rng, cur[i]);
      lw[i] = kernels_->log_initial_weight(cur[i], lq);
    }
    d.step_log_means.push_back(step_mean(lw, 0));
    for (std::size_t t = 1; t <= T; ++t) {
      const auto anc = resample_multinomial(rng, lw, particles_);
      for (std::size_t i = 0; i < particles_; ++i) {
        if (i == slot[t]) {
          nxt[i] = path[t];
          lw[i] = kernels_->log_incremental_weight(t, cur[slot[t - 1]], nxt[i]);
          continue;
        }
        kernels_->sample_forward(t, rng, cur[anc[i]], nxt[i]);
        lw[i] = kernels_->log_incremental_weight(t, cur[anc[i]], nxt[i]);
      }
      std::swap(cur, nxt);
      d.step_log_means.push_back(step_mean(lw, t));
    }
    d.selected = slot[T];
    d.log_weight = -pairwise_sum(d.step_log_means);
    return d;
  }

  double propose_log_weight(Rng& rng, std::span<double> z) const override {
    return propose(rng, z).log_weight;
  }
  double aux_log_weight(Rng& rng, std::span<const double> z) const override {
    return propose_aux(rng, z).log_weight;
  }

 private:
  static double step_mean(std::span<const double> lw, std::size_t t) {
    const double m = logmeanexp(lw);
    require(m > neg_inf, ErrorCode::particle_collapse,
            "all particle weights are zero at step " + std::to_string(t));
    return m;
  }

  // p~_T must be the joint density.
  void check_final_target() const {
    Rng rng(derive_seed(0x5eedULL, {0x736d63ULL}));
    Point z(model_.layout().width());
    const auto T = kernels_->steps();
    for (int k = 0; k < 8; ++k) {
      model_.simulate(rng, z);
      const double a = kernels_->log_target(T, z);
      const double b = model_.log_joint(z);
      require(std::abs(a - b) <= kTargetTolerance * (1.0 + std::abs(b)),
              ErrorCode::invalid_argument,
              "final SMC target differs from the joint density");
    }
  }

  const JointModel& model_;
  std::shared_ptr<const SmcKernels> kernels_;
  std::size_t particles_;
};

}  // namespace eevi
