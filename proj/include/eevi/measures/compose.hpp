// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/stats.hpp"
#include "eevi/estimators/bounds.hpp"
#include "eevi/estimators/enumeration.hpp"
#include "eevi/model.hpp"
#include "eevi/proposals/factory.hpp"

namespace eevi {

enum class MeasureKind {
  conditional_entropy,
  cmi,
  total_correlation,
  interaction_information,
  dual_correlation,
};

inline const char* measure_kind_name(MeasureKind k) {
  switch (k) {
    case MeasureKind::conditional_entropy: return "conditional-entropy";
    case MeasureKind::cmi: return "cmi";
    case MeasureKind::total_correlation: return "total-correlation";
    case MeasureKind::interaction_information: return "interaction-information";
    case MeasureKind::dual_correlation: return "dual-correlation";
  }
  return "?";
}

inline MeasureKind parse_measure_kind(const std::string& s) {
  for (auto k : {MeasureKind::conditional_entropy, MeasureKind::cmi,
                 MeasureKind::total_correlation, MeasureKind::interaction_information,
                 MeasureKind::dual_correlation})
    if (s == measure_kind_name(k)) return k;
  fail(ErrorCode::config, "unknown measure kind '" + s + "'");
}

enum class SharingMode { iid, shared_outer };

using AddressSet = std::vector<Address>;

// One marginal entropy H(vars) with an integer coefficient. Positive terms
// take their lower bound on the lower side and their upper bound on the upper
// side; negative terms the reverse.
struct PlanTerm {
  std::vector<std::size_t> vars;  // sorted variable indices
  int coefficient = 0;
  std::string key;  // "a;b;c"
};

struct CompositionPlan {
  MeasureKind kind = MeasureKind::cmi;
  SharingMode sharing = SharingMode::shared_outer;
  std::vector<PlanTerm> terms;
};

namespace detail {

class TermAccumulator {
 public:
  explicit TermAccumulator(const Layout& layout) : layout_(layout) {}

  void add(std::vector<std::size_t> vars, int c) {
    if (vars.empty() || c == 0) return;
    std::sort(vars.begin(), vars.end());
    for (auto& t : terms_)
      if (t.vars == vars) {
        t.coefficient += c;
        return;
      }
    PlanTerm t;
    t.vars = std::move(vars);
    t.coefficient = c;
    for (auto v : t.vars) {
      if (!t.key.empty()) t.key += ';';
      t.key += layout_.address(v).str();
    }
    terms_.push_back(std::move(t));
  }

  std::vector<PlanTerm> take() {
    std::erase_if(terms_, [](const PlanTerm& t) { return t.coefficient == 0; });
    return std::move(terms_);
  }

 private:
  const Layout& layout_;
  std::vector<PlanTerm> terms_;
};

inline std::vector<std::size_t> resolve(const Layout& layout, const AddressSet& set) {
  std::vector<std::size_t> out;
  for (const auto& a : set) out.push_back(layout.index_of(a));
  return out;
}

inline std::vector<std::size_t> join(std::initializer_list<const std::vector<std::size_t>*> parts) {
  std::vector<std::size_t> out;
  for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

}  // namespace detail

// Expands a measure over argument sets A_1..A_n given A_0 into signed marginal
// entropy terms. Argument sets must be nonempty and pairwise disjoint with A_0.
// Interaction information uses sum_S (-1)^{n-|S|} H(A_S | A_0), which is
// -I(A_1 : A_2 | A_0) for n = 2 and -ln 2 for a fair XOR triple.
inline CompositionPlan plan_measure(const Layout& layout, MeasureKind kind,
                                    const std::vector<AddressSet>& args,
                                    const AddressSet& conditioning,
                                    SharingMode sharing = SharingMode::shared_outer) {
  std::vector<std::vector<std::size_t>> a;
  for (const auto& s : args) {
    require(!s.empty(), ErrorCode::invalid_selection, "empty argument set");
    a.push_back(detail::resolve(layout, s));
  }
  const auto a0 = detail::resolve(layout, conditioning);
  std::vector<int> seen(layout.size(), 0);
  for (const auto* set : {&a0}) for (auto v : *set) ++seen[v];
  for (const auto& s : a) for (auto v : s) ++seen[v];
  for (std::size_t v = 0; v < seen.size(); ++v)
    require(seen[v] <= 1, ErrorCode::invalid_selection,
            "argument sets overlap at " + layout.address(v).str());

  const std::size_t n = a.size();
  switch (kind) {
    case MeasureKind::conditional_entropy:
    case MeasureKind::cmi:
      require(n == 2, ErrorCode::invalid_argument,
              std::string(measure_kind_name(kind)) + " takes two argument sets");
      break;
    default:
      require(n >= 2, ErrorCode::invalid_argument,
              std::string(measure_kind_name(kind)) + " needs at least two argument sets");
  }

  std::vector<std::size_t> all;
  for (const auto& s : a) all.insert(all.end(), s.begin(), s.end());

  detail::TermAccumulator acc(layout);
  switch (kind) {
    case MeasureKind::conditional_entropy:
      // H(A1 | A2, A0)
      acc.add(detail::join({&a[0], &a[1], &a0}), +1);
      acc.add(detail::join({&a[1], &a0}), -1);
      break;
    case MeasureKind::cmi:
      acc.add(detail::join({&a0, &a[0]}), +1);
      acc.add(detail::join({&a0, &a[1]}), +1);
      acc.add(detail::join({&a0, &a[0], &a[1]}), -1);
      acc.add(a0, -1);
      break;
    case MeasureKind::total_correlation:
      for (const auto& s : a) acc.add(detail::join({&s, &a0}), +1);
      acc.add(detail::join({&all, &a0}), -1);
      acc.add(a0, -static_cast<int>(n - 1));
      break;
    case MeasureKind::interaction_information: {
      require(n < 20, ErrorCode::invalid_argument, "too many argument sets");
      for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> u = a0;
        std::size_t size = 0;
        for (std::size_t i = 0; i < n; ++i)
          if (mask >> i & 1) {
            u.insert(u.end(), a[i].begin(), a[i].end());
            ++size;
          }
        const int sign = (n - size) % 2 == 0 ? 1 : -1;
        acc.add(u, sign);
        acc.add(a0, -sign);
      }
      break;
    }
    case MeasureKind::dual_correlation: {
      // H(U | A0) - sum_i H(A_i | A0, U \ A_i)
      const auto u0 = detail::join({&all, &a0});
      acc.add(u0, +1);
      acc.add(a0, -1);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> rest = a0;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) rest.insert(rest.end(), a[j].begin(), a[j].end());
        acc.add(u0, -1);
        acc.add(rest, +1);
      }
      break;
    }
  }
  CompositionPlan plan;
  plan.kind = kind;
  plan.sharing = sharing;
  plan.terms = acc.take();
  return plan;
}

struct TermEstimate {
  PlanTerm term;
  IntervalEstimate interval;
};

struct MeasureEstimate {
  CompositionPlan plan;
  std::vector<TermEstimate> terms;
  // Assembled measure; each side's terms are per-outer-replicate values.
  IntervalEstimate interval;
};

namespace detail {

// Per-replicate values of one bound, or a constant for an exact term.
inline double replicate_value(const BoundEstimate& b, std::size_t i) {
  return b.replicate_means.size() == 1 ? b.replicate_means[0] : b.replicate_means[i];
}

}  // namespace detail

// Estimates every term and assembles the measure by the sign rule.
// Shared-outer mode draws one set of outer joint samples and reuses it for
// every term and both sides; iid mode gives every term side its own.
// Terms covering every model variable are computed exactly by enumeration.
inline MeasureEstimate estimate_measure(const JointModel& model, const CompositionPlan& plan,
                                        const ProposalFactory& factory,
                                        const EstimatorConfig& cfg) {
  cfg.validate();
  const auto& layout = model.layout();
  MeasureEstimate out;
  out.plan = plan;
  const bool shared = plan.sharing == SharingMode::shared_outer;
  std::vector<Point> outer;
  if (shared) outer = outer_draws(model, cfg, 0);

  std::optional<EnumerationOracle> oracle;
  for (std::size_t k = 0; k < plan.terms.size(); ++k) {
    const auto& term = plan.terms[k];
    std::vector<Address> addrs;
    for (auto v : term.vars) addrs.push_back(layout.address(v));
    const auto sel = Selection::make(layout, std::span<const Address>(addrs), true);
    TermEstimate te{term, {}};
    if (sel.is_full() && layout.all_discrete()) {
      if (!oracle) oracle.emplace(model);
      te.interval = exact_interval(oracle->entropy(sel));
    } else if (sel.is_full()) {
      // No latents: both sides are the plug-in -log p(z).
      const std::uint64_t s = 2 * k + 1;
      te.interval.shared_outer = shared;
      te.interval.upper = entropy_plugin(model, cfg, shared ? 0 : s, shared ? &outer : nullptr);
      te.interval.lower = te.interval.upper;
      te.interval.lower.kind = BoundKind::lower;
    } else {
      const auto prop = factory(model, sel);
      const std::uint64_t up = 2 * k + 1, lo = 2 * k + 2;
      te.interval.shared_outer = shared;
      if (shared) {
        te.interval.upper = entropy_upper(model, *prop, cfg, {0, up}, &outer);
        te.interval.lower = entropy_lower(model, *prop, cfg, {0, lo}, &outer);
      } else {
        te.interval.upper = entropy_upper(model, *prop, cfg, {up, up});
        te.interval.lower = entropy_lower(model, *prop, cfg, {lo, lo});
      }
    }
    out.terms.push_back(std::move(te));
  }

  BoundEstimate lower, upper;
  lower.kind = BoundKind::lower;
  upper.kind = BoundKind::upper;
  lower.n = upper.n = cfg.n;
  lower.m = upper.m = 1;
  lower.terms.assign(cfg.n, 0.0);
  upper.terms.assign(cfg.n, 0.0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    double lo = 0.0, hi = 0.0;
    for (const auto& te : out.terms) {
      const double c = te.term.coefficient;
      const double tl = detail::replicate_value(te.interval.lower, i);
      const double tu = detail::replicate_value(te.interval.upper, i);
      lo += c * (c > 0 ? tl : tu);
      hi += c * (c > 0 ? tu : tl);
    }
    lower.terms[i] = lo;
    upper.terms[i] = hi;
  }
  lower.summarize();
  upper.summarize();
  out.interval.lower = std::move(lower);
  out.interval.upper = std::move(upper);
  out.interval.shared_outer = shared;
  out.interval.exact = std::all_of(out.terms.begin(), out.terms.end(),
                                   [](const TermEstimate& t) { return t.interval.exact; });
  return out;
}

// The same sign rule applied to given term intervals (used with oracle values).
inline std::pair<double, double> assemble_sides(const CompositionPlan& plan,
                                                std::span<const double> term_lower,
                                                std::span<const double> term_upper) {
  double lo = 0.0, hi = 0.0;
  for (std::size_t k = 0; k < plan.terms.size(); ++k) {
    const double c = plan.terms[k].coefficient;
    lo += c * (c > 0 ? term_lower[k] : term_upper[k]);
    hi += c * (c > 0 ? term_upper[k] : term_lower[k]);
  }
  return {lo, hi};
}

// Exact measure value from an enumerable model.
inline double exact_measure(const EnumerationOracle& oracle, const CompositionPlan& plan) {
  double v = 0.0;
  for (const auto& t : plan.terms) v += t.coefficient * oracle.entropy(t.vars);
  return v;
}

inline MeasureEstimate conditional_entropy_interval(
    const JointModel& model, const AddressSet& a1, const AddressSet& a2,
    const ProposalFactory& factory, const EstimatorConfig& cfg,
    SharingMode sharing = SharingMode::shared_outer) {
  return estimate_measure(
      model, plan_measure(model.layout(), MeasureKind::conditional_entropy, {a1, a2}, {}, sharing),
      factory, cfg);
}

inline MeasureEstimate cmi_interval(const JointModel& model, const AddressSet& a1,
                                    const AddressSet& a2, const AddressSet& a0,
                                    const ProposalFactory& factory,
                                    const EstimatorConfig& cfg,
                                    SharingMode sharing = SharingMode::shared_outer) {
  return estimate_measure(
      model, plan_measure(model.layout(), MeasureKind::cmi, {a1, a2}, a0, sharing), factory,
      cfg);
}

inline MeasureEstimate total_correlation_interval(
    const JointModel& model, const std::vector<AddressSet>& sets, const AddressSet& a0,
    const ProposalFactory& factory, const EstimatorConfig& cfg,
    SharingMode sharing = SharingMode::shared_outer) {
  return estimate_measure(
      model, plan_measure(model.layout(), MeasureKind::total_correlation, sets, a0, sharing),
      factory, cfg);
}

inline MeasureEstimate interaction_information_interval(
    const JointModel& model, const std::vector<AddressSet>& sets, const AddressSet& a0,
    const ProposalFactory& factory, const EstimatorConfig& cfg,
    SharingMode sharing = SharingMode::shared_outer) {
  return estimate_measure(
      model,
      plan_measure(model.layout(), MeasureKind::interaction_information, sets, a0, sharing),
      factory, cfg);
}

inline MeasureEstimate dual_correlation_interval(
    const JointModel& model, const std::vector<AddressSet>& sets, const AddressSet& a0,
    const ProposalFactory& factory, const EstimatorConfig& cfg,
    SharingMode sharing = SharingMode::shared_outer) {
  return estimate_measure(
      model, plan_measure(model.layout(), MeasureKind::dual_correlation, sets, a0, sharing),
      factory, cfg);
}

struct RankedCandidate {
  std::string name;
  AddressSet candidate;
  MeasureEstimate estimate;  // H(target | candidate, conditioning)
};

// Sorts candidates by the midpoint of H(target | candidate, conditioning),
// ascending; ties by name.
inline std::vector<RankedCandidate> rank_by_conditional_entropy(
    const JointModel& model, const std::vector<std::pair<std::string, AddressSet>>& candidates,
    const AddressSet& target, const AddressSet& conditioning, const ProposalFactory& factory,
    const EstimatorConfig& cfg, SharingMode sharing = SharingMode::shared_outer) {
  std::vector<RankedCandidate> out;
  for (const auto& [name, cand] : candidates) {
    AddressSet given = cand;
    given.insert(given.end(), conditioning.begin(), conditioning.end());
    out.push_back({name, cand,
                   conditional_entropy_interval(model, target, given, factory, cfg, sharing)});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    const double ma = a.estimate.interval.midpoint(), mb = b.estimate.interval.midpoint();
    if (ma != mb) return ma < mb;
    return a.name < b.name;
  });
  return out;
}

// Sample covariances between the per-replicate series of every estimated
// term side of a shared-outer measure.
struct CovarianceReport {
  std::vector<std::string> labels;  // "<term key>/<lower|upper>"
  std::vector<std::vector<double>> series;
  std::vector<std::vector<double>> covariance;

  std::size_t index(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    require(it != labels.end(), ErrorCode::invalid_argument, "no series " + label);
    return static_cast<std::size_t>(it - labels.begin());
  }

  double correlation(std::size_t a, std::size_t b) const {
    return covariance[a][b] / std::sqrt(covariance[a][a] * covariance[b][b]);
  }

  // Var[A - B] from the report's entries.
  double variance_of_difference(std::size_t a, std::size_t b) const {
    return covariance[a][a] + covariance[b][b] - 2.0 * covariance[a][b];
  }
};

inline CovarianceReport covariance_report(const MeasureEstimate& est) {
  require(est.plan.sharing == SharingMode::shared_outer, ErrorCode::sharing_mode_mismatch,
          "covariance report needs shared outer samples");
  CovarianceReport r;
  for (const auto& te : est.terms) {
    if (te.interval.exact) continue;
    r.labels.push_back(te.term.key + "/lower");
    r.series.push_back(te.interval.lower.replicate_means);
    r.labels.push_back(te.term.key + "/upper");
    r.series.push_back(te.interval.upper.replicate_means);
  }
  const auto k = r.series.size();
  r.covariance.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      r.covariance[a][b] = stats::covariance(r.series[a], r.series[b]);
  return r;
}

}  // namespace eevi
