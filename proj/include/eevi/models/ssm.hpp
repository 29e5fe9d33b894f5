// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/core/stats.hpp"
#include "eevi/model.hpp"
#include "eevi/models/gaussian.hpp"
#include "eevi/proposals/smc.hpp"

namespace eevi {

// Linear-Gaussian state space model with a static gain theta on a discrete
// grid:
//   theta ~ Categorical(gain_prior) over gains
//   x_0 ~ N(init_mean, init_var)
//   x_t = theta * transition * x_{t-1} + input_gain * u_t + N(0, transition_var)
//   y_t = emission * x_t + N(0, emission_var),         t = 1..horizon
// Inputs u_t are an exogenous schedule.
struct SsmConfig {
  std::size_t horizon = 5;
  double transition = 0.9;
  double transition_var = 0.5;
  double emission = 1.0;
  double emission_var = 0.5;
  double input_gain = 1.0;
  double init_mean = 0.0;
  double init_var = 1.0;
  std::vector<double> inputs;      // u_1..u_H; empty means all zero
  std::vector<double> gains{1.0};
  std::vector<double> gain_prior;  // empty means uniform
};

class LinearGaussianSsm final : public JointModel {
 public:
  explicit LinearGaussianSsm(SsmConfig cfg) : cfg_(std::move(cfg)) {
    require(cfg_.horizon >= 1, ErrorCode::invalid_argument, "horizon must be >= 1");
    require(cfg_.transition_var > 0 && cfg_.emission_var > 0 && cfg_.init_var > 0,
            ErrorCode::invalid_argument, "noise variances must be positive");
    if (cfg_.inputs.empty()) cfg_.inputs.assign(cfg_.horizon, 0.0);
    require(cfg_.inputs.size() == cfg_.horizon, ErrorCode::invalid_argument,
            "inputs need one entry per time step");
    require(!cfg_.gains.empty(), ErrorCode::invalid_argument, "empty gain grid");
    if (cfg_.gain_prior.empty())
      cfg_.gain_prior.assign(cfg_.gains.size(), 1.0 / static_cast<double>(cfg_.gains.size()));
    require(cfg_.gain_prior.size() == cfg_.gains.size(), ErrorCode::invalid_argument,
            "gain prior size mismatch");
    double s = 0.0;
    for (double p : cfg_.gain_prior) {
      require(p > 0.0, ErrorCode::invalid_argument, "gain prior must be positive");
      s += p;
    }
    require(std::abs(s - 1.0) <= 1e-9, ErrorCode::invalid_argument,
            "gain prior must sum to 1");
    for (double p : cfg_.gain_prior) log_prior_.push_back(std::log(p));

    layout_.add(Address("theta"), Support::discrete(static_cast<int>(cfg_.gains.size())));
    layout_.add(Address("x", 0), Support::real());
    for (std::size_t t = 1; t <= cfg_.horizon; ++t) {
      layout_.add(Address("x", static_cast<int>(t)), Support::real());
      layout_.add(Address("y", static_cast<int>(t)), Support::real());
    }
  }

  const SsmConfig& config() const { return cfg_; }
  std::size_t horizon() const { return cfg_.horizon; }
  const Layout& layout() const override { return layout_; }
  std::string name() const override { return "ssm" + std::to_string(cfg_.horizon); }

  // Point slots.
  static constexpr std::size_t theta_slot() { return 0; }
  static constexpr std::size_t x_slot(std::size_t t) { return t == 0 ? 1 : 2 * t; }
  static constexpr std::size_t y_slot(std::size_t t) { return 2 * t + 1; }

  double gain(std::span<const double> z) const {
    return cfg_.gains[static_cast<std::size_t>(z[theta_slot()])];
  }

  void simulate(Rng& rng, std::span<double> z) const override {
    z[theta_slot()] = static_cast<double>(sample_theta(rng));
    z[x_slot(0)] = cfg_.init_mean + std::sqrt(cfg_.init_var) * rng.normal();
    for (std::size_t t = 1; t <= cfg_.horizon; ++t) {
      z[x_slot(t)] = transition_mean(z, t) + std::sqrt(cfg_.transition_var) * rng.normal();
      z[y_slot(t)] = cfg_.emission * z[x_slot(t)] + std::sqrt(cfg_.emission_var) * rng.normal();
    }
  }

  double log_joint(std::span<const double> z) const override {
    double lp = log_theta(z);
    if (lp == neg_inf) return neg_inf;
    lp += stats::normal_log_density(z[x_slot(0)], cfg_.init_mean, cfg_.init_var);
    for (std::size_t t = 1; t <= cfg_.horizon; ++t) lp += step_log_density(t, z);
    return lp;
  }

  // Log prior of theta; -inf off the grid.
  double log_theta(std::span<const double> z) const {
    const double v = z[theta_slot()];
    if (!(v >= 0.0) || v != std::floor(v) ||
        v >= static_cast<double>(cfg_.gains.size()))
      return neg_inf;
    return log_prior_[static_cast<std::size_t>(v)];
  }

  double transition_mean(std::span<const double> z, std::size_t t) const {
    return gain(z) * cfg_.transition * z[x_slot(t - 1)] + cfg_.input_gain * cfg_.inputs[t - 1];
  }

  double transition_log_density(std::size_t t, std::span<const double> z) const {
    return stats::normal_log_density(z[x_slot(t)], transition_mean(z, t), cfg_.transition_var);
  }

  double emission_log_density(std::size_t t, std::span<const double> z) const {
    return stats::normal_log_density(z[y_slot(t)], cfg_.emission * z[x_slot(t)],
                                     cfg_.emission_var);
  }

  // log p(x_t | x_{t-1}, theta) + log p(y_t | x_t)
  double step_log_density(std::size_t t, std::span<const double> z) const {
    return transition_log_density(t, z) + emission_log_density(t, z);
  }

  std::size_t sample_theta(Rng& rng) const {
    if (cfg_.gains.size() == 1) return 0;
    return sample_log_categorical(rng, log_prior_);
  }

  bool can_simulate_latents() const override { return true; }
  std::unique_ptr<LatentKernel> ancestral_kernel(const Selection& sel) const override {
    return std::make_unique<AncestralKernel>(*this, sel);
  }

  bool can_resimulate_sites() const override { return true; }
  double resimulate_site(Rng& rng, std::size_t var, std::span<double> z) const override {
    return site(rng, var, z, true);
  }
  double site_log_density(std::size_t var, std::span<const double> z) const override {
    Rng unused(0);
    Point w(z.begin(), z.end());
    return site(unused, var, w, false);
  }

  // Moments of x_t under a fixed gain: means mu_0..mu_H and covariance matrix.
  struct StateMoments {
    std::vector<double> mean;
    gaussian::Matrix cov;
  };

  StateMoments state_moments(double g) const {
    const std::size_t n = cfg_.horizon + 1;
    const double a = g * cfg_.transition;
    StateMoments m;
    m.mean.resize(n);
    std::vector<double> var(n);
    m.mean[0] = cfg_.init_mean;
    var[0] = cfg_.init_var;
    for (std::size_t t = 1; t < n; ++t) {
      m.mean[t] = a * m.mean[t - 1] + cfg_.input_gain * cfg_.inputs[t - 1];
      var[t] = a * a * var[t - 1] + cfg_.transition_var;
    }
    m.cov.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t t = s; t < n; ++t) {
        const double c = std::pow(a, static_cast<double>(t - s)) * var[s];
        m.cov(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = c;
        m.cov(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = c;
      }
    return m;
  }

  // Mean and covariance of (y_t), t in times, under gain index k.
  std::pair<gaussian::Vector, gaussian::Matrix> observation_moments(
      std::span<const std::size_t> times, std::size_t k) const {
    check_times(times);
    const auto sm = state_moments(cfg_.gains[k]);
    const auto n = static_cast<Eigen::Index>(times.size());
    gaussian::Vector mu(n);
    gaussian::Matrix cov(n, n);
    const double h = cfg_.emission;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ti = static_cast<Eigen::Index>(times[static_cast<std::size_t>(i)]);
      mu(i) = h * sm.mean[static_cast<std::size_t>(ti)];
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto tj = static_cast<Eigen::Index>(times[static_cast<std::size_t>(j)]);
        cov(i, j) = h * h * sm.cov(ti, tj) + (i == j ? cfg_.emission_var : 0.0);
      }
    }
    return {mu, cov};
  }

  // Kalman filter log p(y_obs | theta_k); observations at `times` only.
  double kalman_log_likelihood(std::span<const std::size_t> times,
                               std::span<const double> values, std::size_t k) const {
    check_times(times);
    require(values.size() == times.size(), ErrorCode::invalid_argument,
            "one value per observation time");
    const double a = cfg_.gains[k] * cfg_.transition;
    const double h = cfg_.emission;
    double m = cfg_.init_mean, p = cfg_.init_var, ll = 0.0;
    for (std::size_t t = 1; t <= cfg_.horizon; ++t) {
      m = a * m + cfg_.input_gain * cfg_.inputs[t - 1];
      p = a * a * p + cfg_.transition_var;
      const auto it = std::find(times.begin(), times.end(), t);
      if (it == times.end()) continue;
      const double y = values[static_cast<std::size_t>(it - times.begin())];
      const double s = h * h * p + cfg_.emission_var;
      ll += stats::normal_log_density(y, h * m, s);
      const double gain_k = p * h / s;
      m += gain_k * (y - h * m);
      p *= (1.0 - gain_k * h);
    }
    return ll;
  }

  // log p(y_obs), Kalman filter per gain mixed over the prior.
  double log_marginal_kalman(std::span<const std::size_t> times,
                             std::span<const double> values) const {
    std::vector<double> terms(cfg_.gains.size());
    for (std::size_t k = 0; k < terms.size(); ++k)
      terms[k] = log_prior_[k] + kalman_log_likelihood(times, values, k);
    return logsumexp(terms);
  }

  // Same quantity from the assembled joint covariance.
  double log_marginal_direct(std::span<const std::size_t> times,
                             std::span<const double> values) const {
    gaussian::Vector y(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) y(static_cast<Eigen::Index>(i)) = values[i];
    std::vector<double> terms(cfg_.gains.size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto [mu, cov] = observation_moments(times, k);
      terms[k] = log_prior_[k] + gaussian::log_density(y, mu, gaussian::cholesky(cov));
    }
    return logsumexp(terms);
  }

  // Times 1..H, distinct; IndexOutOfHorizon or InvalidSelection otherwise.
  void check_times(std::span<const std::size_t> times) const {
    require(!times.empty(), ErrorCode::invalid_selection, "no observation times");
    for (std::size_t i = 0; i < times.size(); ++i) {
      require(times[i] >= 1 && times[i] <= cfg_.horizon, ErrorCode::index_out_of_horizon,
              "observation time " + std::to_string(times[i]) + " outside 1.." +
                  std::to_string(cfg_.horizon));
      for (std::size_t j = 0; j < i; ++j)
        require(times[i] != times[j], ErrorCode::invalid_selection,
                "duplicate observation time " + std::to_string(times[i]));
    }
  }

  const std::vector<double>& log_gain_prior() const { return log_prior_; }

 private:
  // Conditional-ancestral draw (or density) of one variable given the rest.
  double site(Rng& rng, std::size_t var, std::span<double> z, bool draw) const {
    if (var == 0) {
      if (draw) z[theta_slot()] = static_cast<double>(sample_theta(rng));
      return log_theta(z);
    }
    if (var == 1) {
      if (draw) z[x_slot(0)] = cfg_.init_mean + std::sqrt(cfg_.init_var) * rng.normal();
      return stats::normal_log_density(z[x_slot(0)], cfg_.init_mean, cfg_.init_var);
    }
    const std::size_t t = var / 2;
    if (var % 2 == 0) {
      const double m = transition_mean(z, t);
      if (draw) z[x_slot(t)] = m + std::sqrt(cfg_.transition_var) * rng.normal();
      return stats::normal_log_density(z[x_slot(t)], m, cfg_.transition_var);
    }
    const double m = cfg_.emission * z[x_slot(t)];
    if (draw) z[y_slot(t)] = m + std::sqrt(cfg_.emission_var) * rng.normal();
    return stats::normal_log_density(z[y_slot(t)], m, cfg_.emission_var);
  }

  class AncestralKernel final : public LatentKernel {
   public:
    AncestralKernel(const LinearGaussianSsm& m, const Selection& sel)
        : model_(m), latents_(sel.latents()) {}
    double simulate(Rng& rng, std::span<double> z) const override {
      double lq = 0.0;
      for (auto v : latents_) lq += model_.site(rng, v, z, true);
      return lq;
    }
    double assess(std::span<const double> z) const override {
      Rng unused(0);
      Point w(z.begin(), z.end());
      double lq = 0.0;
      for (auto v : latents_) lq += model_.site(unused, v, w, false);
      return lq;
    }

   private:
    const LinearGaussianSsm& model_;
    std::vector<std::size_t> latents_;
  };

  SsmConfig cfg_;
  std::vector<double> log_prior_;
  Layout layout_;
};

// Bootstrap particle filter over time for an SSM selection. Step 0 draws the
// gain (when latent) and x_0; step t draws x_t and, when latent, y_t. The
// backward kernel truncates the prefix, so every incremental weight is the
// emission density of an observed y_t.
class SsmFilterKernels final : public SmcKernels {
 public:
  SsmFilterKernels(const LinearGaussianSsm& model, Selection sel)
      : model_(model), sel_(std::move(sel)) {
    theta_target_ = sel_.is_target(0);
    require(!sel_.is_target(1), ErrorCode::invalid_selection,
            "particle filter kernels do not support x@0 as a target");
    for (std::size_t t = 1; t <= model.horizon(); ++t) {
      require(!sel_.is_target(LinearGaussianSsm::x_slot(t)), ErrorCode::invalid_selection,
              "particle filter kernels need latent states; x@" + std::to_string(t) +
                  " is a target");
      y_target_.push_back(sel_.is_target(LinearGaussianSsm::y_slot(t)));
    }
  }

  const Selection& selection() const override { return sel_; }
  std::string id() const override { return "filter"; }
  std::size_t steps() const override { return model_.horizon(); }

  double sample_initial(Rng& rng, std::span<double> s) const override {
    const auto& c = model_.config();
    double lq = 0.0;
    if (!theta_target_) {
      s[0] = static_cast<double>(model_.sample_theta(rng));
      lq += model_.log_theta(s);
    }
    s[1] = c.init_mean + std::sqrt(c.init_var) * rng.normal();
    return lq + stats::normal_log_density(s[1], c.init_mean, c.init_var);
  }

  double log_initial(std::span<const double> s) const override {
    const auto& c = model_.config();
    return (theta_target_ ? 0.0 : model_.log_theta(s)) +
           stats::normal_log_density(s[1], c.init_mean, c.init_var);
  }

  double log_initial_weight(std::span<const double> s, double) const override {
    return theta_target_ ? model_.log_theta(s) : 0.0;
  }

  double log_target(std::size_t t, std::span<const double> s) const override {
    const auto& c = model_.config();
    double lp = model_.log_theta(s);
    if (lp == neg_inf) return neg_inf;
    lp += stats::normal_log_density(s[1], c.init_mean, c.init_var);
    for (std::size_t u = 1; u <= t; ++u) lp += model_.step_log_density(u, s);
    return lp;
  }

  void sample_forward(std::size_t t, Rng& rng, std::span<const double> prev,
                      std::span<double> next) const override {
    const auto& c = model_.config();
    std::copy(prev.begin(), prev.end(), next.begin());
    const auto xs = LinearGaussianSsm::x_slot(t);
    next[xs] = model_.transition_mean(next, t) + std::sqrt(c.transition_var) * rng.normal();
    if (!y_target_[t - 1])
      next[LinearGaussianSsm::y_slot(t)] =
          c.emission * next[xs] + std::sqrt(c.emission_var) * rng.normal();
  }

  double log_incremental_weight(std::size_t t, std::span<const double>,
                                std::span<const double> next) const override {
    return y_target_[t - 1] ? model_.emission_log_density(t, next) : 0.0;
  }

  bool has_backward(std::size_t) const override { return true; }
  void sample_backward(std::size_t, Rng&, std::span<const double> next,
                       std::span<double> prev) const override {
    std::copy(next.begin(), next.end(), prev.begin());
  }

 private:
  const LinearGaussianSsm& model_;
  Selection sel_;
  bool theta_target_ = false;
  std::vector<bool> y_target_;
};

// Gauss-Hermite nodes and weights for the weight exp(-x^2), Golub-Welsch.
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n) {
  gaussian::Matrix j = gaussian::Matrix::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    const double b = std::sqrt(static_cast<double>(i) / 2.0);
    j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = b;
    j(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(i)) = b;
  }
  Eigen::SelfAdjointEigenSolver<gaussian::Matrix> es(j);
  std::vector<double> x(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v = es.eigenvectors()(0, static_cast<Eigen::Index>(i));
    w[i] = std::sqrt(std::numbers::pi) * v * v;
  }
  return {x, w};
}

// Entropy of a Gaussian mixture sum_k pi_k N(mu_k, cov_k) in up to three
// dimensions, by tensor Gauss-Hermite quadrature of each component.
inline double gaussian_mixture_entropy(std::span<const double> log_weights,
                                       std::span<const gaussian::Vector> means,
                                       std::span<const gaussian::Matrix> covs) {
  const auto d = static_cast<std::size_t>(means.front().size());
  if (means.size() == 1) return gaussian::entropy(covs.front());
  require(d >= 1 && d <= 3, ErrorCode::invalid_argument,
          "mixture entropy quadrature supports 1 to 3 dimensions");
  const std::size_t n = d == 1 ? 80 : d == 2 ? 48 : 24;
  const auto [nodes, wts] = gauss_hermite(n);
  std::vector<Eigen::LLT<gaussian::Matrix>> llts;
  for (const auto& c : covs) llts.push_back(gaussian::cholesky(c));

  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= n;
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(d));
  double h = 0.0;
  std::vector<double> comp(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    const gaussian::Matrix l = llts[k].matrixL();
    double e = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
      gaussian::Vector xi(static_cast<Eigen::Index>(d));
      double w = norm;
      std::size_t r = idx;
      for (std::size_t a = 0; a < d; ++a) {
        xi(static_cast<Eigen::Index>(a)) = std::sqrt(2.0) * nodes[r % n];
        w *= wts[r % n];
        r /= n;
      }
      const gaussian::Vector y = means[k] + l * xi;
      for (std::size_t c = 0; c < means.size(); ++c)
        comp[c] = log_weights[c] + gaussian::log_density(y, means[c], llts[c]);
      e += w * logsumexp(comp);
    }
    h -= std::exp(log_weights[k]) * e;
  }
  return h;
}

// Exact entropy of (y_t), t in times.
inline double ssm_observation_entropy(const LinearGaussianSsm& model,
                                      std::span<const std::size_t> times) {
  model.check_times(times);
  const auto k = model.config().gains.size();
  std::vector<gaussian::Vector> means;
  std::vector<gaussian::Matrix> covs;
  for (std::size_t i = 0; i < k; ++i) {
    auto [mu, cov] = model.observation_moments(times, i);
    means.push_back(std::move(mu));
    covs.push_back(std::move(cov));
  }
  return gaussian_mixture_entropy(model.log_gain_prior(), means, covs);
}

// Exact I(theta ; (y_t)_{t in times}) = H(Y) - sum_k pi_k H(Y | theta_k).
inline double ssm_gain_information(const LinearGaussianSsm& model,
                                   std::span<const std::size_t> times) {
  const double hy = ssm_observation_entropy(model, times);
  double hc = 0.0;
  for (std::size_t k = 0; k < model.config().gains.size(); ++k)
    hc += model.config().gain_prior[k] *
          gaussian::entropy(model.observation_moments(times, k).second);
  return hy - hc;
}

}  // namespace eevi
