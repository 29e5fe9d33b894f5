// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <functional>
#include <memory>
#include <string>

#include "eevi/core/error.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"
#include "eevi/models/mvn.hpp"
#include "eevi/models/ssm.hpp"
#include "eevi/proposals/basic.hpp"
#include "eevi/proposals/extended.hpp"
#include "eevi/proposals/smc.hpp"

namespace eevi {

// Builds the proposal for one target selection of a model.
using ProposalFactory = std::function<std::shared_ptr<const ExtendedProposal>(
    const JointModel&, const Selection&)>;

// Proposal stack description:
//   base:   prior | regression | exact
//   scheme: basic | sir | nested-sir | smc
// smc on an SSM with the prior base runs the particle filter over time;
// otherwise it tempers from the base to the joint.
struct ProposalSpec {
  std::string base = "prior";
  std::string scheme = "sir";
  std::size_t particles = 1;
  std::size_t inner_particles = 1;  // nested-sir only
  std::size_t steps = 0;            // smc only
  std::vector<double> schedule;     // smc only; empty means linear
  std::size_t mh_moves = 1;         // tempered smc only
  std::size_t training = 10000;     // regression only
  std::uint64_t fit_seed = 0;

  std::string label() const {
    std::string s = scheme + ":" + base;
    if (scheme != "basic") s += ":P" + std::to_string(particles);
    if (scheme == "nested-sir") s += "x" + std::to_string(inner_particles);
    if (scheme == "smc") s += ":T" + std::to_string(steps);
    return s;
  }

  void validate() const {
    require(base == "prior" || base == "regression" || base == "exact",
            ErrorCode::config, "unknown proposal base '" + base + "'");
    require(scheme == "basic" || scheme == "sir" || scheme == "nested-sir" ||
                scheme == "smc",
            ErrorCode::config, "unknown proposal scheme '" + scheme + "'");
    require(particles >= 1 && inner_particles >= 1, ErrorCode::config,
            "particle counts must be >= 1");
    if (scheme == "smc") {
      SmcConfig c{particles, steps, schedule, mh_moves};
      try {
        c.validate();
      } catch (const Error& e) {
        fail(ErrorCode::config, e.what());
      }
    }
  }
};

inline std::shared_ptr<const BasicProposal> make_base_proposal(const JointModel& model,
                                                               const Selection& sel,
                                                               const ProposalSpec& spec) {
  if (spec.base == "prior") return std::make_shared<PriorProposal>(model, sel);
  if (spec.base == "regression") {
    std::uint64_t h = 0;
    for (char c : sel.key()) h = mix64(h ^ static_cast<unsigned char>(c));
    Rng rng(derive_seed(spec.fit_seed, {0x726567ULL, h}));
    return std::make_shared<GaussianRegressionProposal>(
        fit_regression_proposal(model, sel, spec.training, rng));
  }
  if (const auto* mvn = dynamic_cast<const MvnModel*>(&model))
    return std::make_shared<ExactGaussianProposal>(*mvn, sel);
  require(model.layout().all_discrete(), ErrorCode::capability_missing,
          "no exact posterior proposal for " + model.name());
  return std::make_shared<EnumeratedPosteriorProposal>(model, sel);
}

inline ProposalFactory make_proposal_factory(ProposalSpec spec) {
  spec.validate();
  return [spec](const JointModel& model,
                const Selection& sel) -> std::shared_ptr<const ExtendedProposal> {
    if (spec.scheme == "smc") {
      const auto* ssm = dynamic_cast<const LinearGaussianSsm*>(&model);
      std::shared_ptr<const SmcKernels> kernels;
      if (ssm && spec.base == "prior") {
        kernels = std::make_shared<SsmFilterKernels>(*ssm, sel);
      } else {
        SmcConfig c{spec.particles, spec.steps, spec.schedule, spec.mh_moves};
        kernels = std::make_shared<TemperedKernels>(
            model, make_base_proposal(model, sel, spec), c.betas(), spec.mh_moves);
      }
      return std::make_shared<SmcProposal>(model, std::move(kernels), spec.particles);
    }
    auto base = make_base_proposal(model, sel, spec);
    if (spec.scheme == "basic") return std::make_shared<BasicExtended>(model, base);
    if (spec.scheme == "sir")
      return std::make_shared<SirProposal>(model, base, spec.particles);
    auto inner = std::make_shared<SirProposal>(model, base, spec.inner_particles);
    return std::make_shared<NestedSirProposal>(model, inner, spec.particles);
  };
}

}  // namespace eevi
