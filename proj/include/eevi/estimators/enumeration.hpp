// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/model.hpp"

namespace eevi {

// Exact inference on a small all-discrete model by tabulating the joint.
class EnumerationOracle {
 public:
  static constexpr std::size_t kMaxTable = std::size_t{1} << 20;

  explicit EnumerationOracle(const JointModel& model) : layout_(model.layout()) {
    require(layout_.all_discrete(), ErrorCode::invalid_argument,
            "enumeration needs an all-discrete model");
    std::size_t total = 1;
    for (std::size_t v = 0; v < layout_.size(); ++v) {
      const auto c = static_cast<std::size_t>(layout_.support(v).cardinality);
      cards_.push_back(c);
      require(c >= 1 && total <= kMaxTable / c, ErrorCode::too_large_to_enumerate,
              "joint table of " + model.name() + " exceeds 2^20 entries");
      total *= c;
    }
    log_table_.resize(total);
    Point z(layout_.width(), 0.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
      decode(idx, z);
      log_table_[idx] = model.log_joint(z);
    }
  }

  std::size_t table_size() const { return log_table_.size(); }
  const std::vector<double>& log_joint_table() const { return log_table_; }
  const std::vector<std::size_t>& cardinalities() const { return cards_; }

  // Variable values of table entry idx; variable 0 varies slowest.
  void decode(std::size_t idx, std::span<double> z) const {
    for (std::size_t v = cards_.size(); v-- > 0;) {
      z[layout_.offset(v)] = static_cast<double>(idx % cards_[v]);
      idx /= cards_[v];
    }
  }

  // Log marginal table over `vars` (mixed radix in the given order).
  std::vector<double> log_marginal(std::span<const std::size_t> vars) const {
    std::size_t size = 1;
    for (auto v : vars) size *= cards_[v];
    std::vector<std::vector<double>> buckets(size);
    Point z(layout_.width(), 0.0);
    for (std::size_t idx = 0; idx < log_table_.size(); ++idx) {
      if (log_table_[idx] == neg_inf) continue;
      decode(idx, z);
      buckets[key(vars, z)].push_back(log_table_[idx]);
    }
    std::vector<double> out(size);
    for (std::size_t k = 0; k < size; ++k) out[k] = logsumexp(buckets[k]);
    return out;
  }

  // Mixed-radix index of z restricted to vars.
  std::size_t key(std::span<const std::size_t> vars, std::span<const double> z) const {
    std::size_t k = 0;
    for (auto v : vars) k = k * cards_[v] + static_cast<std::size_t>(z[layout_.offset(v)]);
    return k;
  }

  // Exact H(vars) in nats; an empty set has entropy 0.
  double entropy(std::span<const std::size_t> vars) const {
    if (vars.empty()) return 0.0;
    return entropy_of(log_marginal(vars));
  }

  double entropy(const Selection& sel) const { return entropy(sel.targets()); }

  // H(a | b) = H(a u b) - H(b)
  double conditional_entropy(std::span<const std::size_t> a,
                             std::span<const std::size_t> b) const {
    std::vector<std::size_t> ab(a.begin(), a.end());
    ab.insert(ab.end(), b.begin(), b.end());
    return entropy(ab) - entropy(b);
  }

  // log p(y) for the target values stored in z.
  double log_marginal_at(const Selection& sel, std::span<const double> z) const {
    return log_marginal(sel.targets())[key(sel.targets(), z)];
  }

  // Log conditional table p(a | b = values in z), mixed radix over a.
  std::vector<double> log_conditional(std::span<const std::size_t> a,
                                      std::span<const std::size_t> b,
                                      std::span<const double> z) const {
    std::size_t size = 1;
    for (auto v : a) size *= cards_[v];
    std::vector<std::vector<double>> buckets(size);
    Point w(layout_.width(), 0.0);
    for (std::size_t idx = 0; idx < log_table_.size(); ++idx) {
      if (log_table_[idx] == neg_inf) continue;
      decode(idx, w);
      bool match = true;
      for (auto v : b) match = match && w[layout_.offset(v)] == z[layout_.offset(v)];
      if (match) buckets[key(a, w)].push_back(log_table_[idx]);
    }
    std::vector<double> out(size);
    for (std::size_t k = 0; k < size; ++k) out[k] = logsumexp(buckets[k]);
    const double norm = logsumexp(out);
    require(norm > neg_inf, ErrorCode::zero_density_conditioning_point,
            "conditioning values have zero probability");
    for (auto& x : out) x -= norm;
    return out;
  }

  static double entropy_of(std::span<const double> log_probs) {
    std::vector<double> terms;
    terms.reserve(log_probs.size());
    for (double lp : log_probs)
      if (lp > neg_inf) terms.push_back(-std::exp(lp) * lp);
    return pairwise_sum(terms);
  }

  // KL(p || q) between two log-probability tables on the same support.
  static double kl(std::span<const double> log_p, std::span<const double> log_q) {
    require(log_p.size() == log_q.size(), ErrorCode::invalid_argument,
            "KL between tables of different sizes");
    std::vector<double> terms;
    for (std::size_t i = 0; i < log_p.size(); ++i) {
      if (log_p[i] == neg_inf) continue;
      if (log_q[i] == neg_inf) return std::numeric_limits<double>::infinity();
      terms.push_back(std::exp(log_p[i]) * (log_p[i] - log_q[i]));
    }
    return pairwise_sum(terms);
  }

 private:
  const Layout& layout_;
  std::vector<std::size_t> cards_;
  std::vector<double> log_table_;
};

// Exact H(Y) for an enumerable model.
inline double exact_entropy_plugin(const JointModel& model, const Selection& sel) {
  return EnumerationOracle(model).entropy(sel);
}

}  // namespace eevi
