// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <optional>
#include <span>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"

namespace eevi {

// Single-site proposal kernel used by the Metropolis-Hastings refresh. The
// kernel for variable v may depend on every entry of z except v itself.
class SiteKernel {
 public:
  virtual ~SiteKernel() = default;
  virtual double resimulate(Rng& rng, std::size_t var, std::span<double> z) const = 0;
  virtual double log_density(std::size_t var, std::span<const double> z) const = 0;
};

// The model's own conditional-ancestral site kernel.
class ModelSiteKernel final : public SiteKernel {
 public:
  explicit ModelSiteKernel(const JointModel& model) : model_(model) {
    require(model.can_resimulate_sites(), ErrorCode::capability_missing,
            model.name() + " does not support single-site resimulation");
  }
  double resimulate(Rng& rng, std::size_t var, std::span<double> z) const override {
    return model_.resimulate_site(rng, var, z);
  }
  double log_density(std::size_t var, std::span<const double> z) const override {
    return model_.site_log_density(var, z);
  }

 private:
  const JointModel& model_;
};

struct MhSweepStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double acceptance_rate() const {
    return proposed == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

// One systematic sweep of single-site Metropolis-Hastings over the latents of
// sel in topological order. Leaves p(x | y) invariant. Updates z in place.
inline MhSweepStats mcmc_refresh(const JointModel& model, const Selection& sel,
                                 std::span<double> z, Rng& rng,
                                 const SiteKernel* kernel = nullptr) {
  MhSweepStats stats;
  if (sel.latents().empty()) return stats;
  std::optional<ModelSiteKernel> own;
  if (!kernel) own.emplace(model);
  const SiteKernel& k = kernel ? *kernel : *own;
  const auto& layout = model.layout();
  Point cand(z.begin(), z.end());
  double lp = model.log_joint(z);
  for (auto v : model.topological_order()) {
    if (sel.is_target(v)) continue;
    const auto off = layout.offset(v);
    const auto w = static_cast<std::size_t>(layout.support(v).width());
    const double lq_rev = k.log_density(v, z);
    const double lq_fwd = k.resimulate(rng, v, cand);
    const double lp_new = model.log_joint(cand);
    const double u = rng.uniform_open();
    ++stats.proposed;
    bool accept;
    if (lp_new == neg_inf) accept = false;
    else if (lp == neg_inf) accept = true;
    else accept = std::log(u) < (lp_new - lp) + (lq_rev - lq_fwd);
    if (accept) {
      ++stats.accepted;
      for (std::size_t s = 0; s < w; ++s) z[off + s] = cand[off + s];
      lp = lp_new;
    } else {
      for (std::size_t s = 0; s < w; ++s) cand[off + s] = z[off + s];
    }
  }
  return stats;
}

}  // namespace eevi
