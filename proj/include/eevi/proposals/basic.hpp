// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eevi/core/error.hpp"
#include "eevi/core/logspace.hpp"
#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"
#include "eevi/models/gaussian.hpp"
#include "eevi/models/mvn.hpp"

namespace eevi {

// Normalized proposal density q(x; y) over the latents of one selection.
// Points passed in carry the targets y; propose overwrites the latents.
class BasicProposal {
 public:
  virtual ~BasicProposal() = default;
  virtual const Selection& selection() const = 0;
  virtual std::string id() const = 0;
  // Writes x ~ q(.; y) into z and returns log q(x; y).
  virtual double propose(Rng& rng, std::span<double> z) const = 0;
  virtual double assess(std::span<const double> z) const = 0;
};

// Conditional-ancestral ("prior") proposal: each latent drawn from its model
// conditional given its parents.
class PriorProposal final : public BasicProposal {
 public:
  PriorProposal(const JointModel& model, Selection sel) : sel_(std::move(sel)) {
    require(model.can_simulate_latents(), ErrorCode::capability_missing,
            model.name() + " cannot ancestrally simulate latents");
    require(!sel_.is_full(), ErrorCode::invalid_selection,
            "selection has no latents");
    kernel_ = model.ancestral_kernel(sel_);
  }

  const Selection& selection() const override { return sel_; }
  std::string id() const override { return "prior"; }
  double propose(Rng& rng, std::span<double> z) const override {
    return kernel_->simulate(rng, z);
  }
  double assess(std::span<const double> z) const override {
    return kernel_->assess(z);
  }

 private:
  Selection sel_;
  std::unique_ptr<LatentKernel> kernel_;
};

// One independent least-squares regression per latent slot on the target
// slots: x_k ~ N(intercept_k + slope_k . y, residual_var_k).
class GaussianRegressionProposal final : public BasicProposal {
 public:
  static constexpr double kMinVariance = 1e-8;

  GaussianRegressionProposal(Selection sel, gaussian::Vector intercept,
                             gaussian::Matrix slopes, gaussian::Vector residual_var,
                             std::size_t trained_on)
      : sel_(std::move(sel)),
        intercept_(std::move(intercept)),
        slopes_(std::move(slopes)),
        residual_var_(residual_var.cwiseMax(kMinVariance)),
        trained_on_(trained_on) {
    log_sd_ = 0.5 * residual_var_.array().log();
  }

  const Selection& selection() const override { return sel_; }
  std::string id() const override { return "regression"; }

  const gaussian::Vector& intercept() const { return intercept_; }
  // Row k holds the coefficients of latent slot k on the target slots.
  const gaussian::Matrix& slopes() const { return slopes_; }
  const gaussian::Vector& residual_variance() const { return residual_var_; }
  std::size_t trained_on() const { return trained_on_; }

  double propose(Rng& rng, std::span<double> z) const override {
    const auto& ls = sel_.latent_slots();
    double lq = 0.0;
    for (std::size_t k = 0; k < ls.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double e = rng.normal();
      z[ls[k]] = mean(kk, z) + std::sqrt(residual_var_(kk)) * e;
      lq += -0.5 * (std::log(2.0 * std::numbers::pi) + e * e) - log_sd_(kk);
    }
    return lq;
  }

  double assess(std::span<const double> z) const override {
    const auto& ls = sel_.latent_slots();
    double lq = 0.0;
    for (std::size_t k = 0; k < ls.size(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double r = (z[ls[k]] - mean(kk, z)) / std::sqrt(residual_var_(kk));
      lq += -0.5 * (std::log(2.0 * std::numbers::pi) + r * r) - log_sd_(kk);
    }
    return lq;
  }

 private:
  double mean(Eigen::Index k, std::span<const double> z) const {
    const auto& ts = sel_.target_slots();
    double m = intercept_(k);
    for (std::size_t j = 0; j < ts.size(); ++j)
      m += slopes_(k, static_cast<Eigen::Index>(j)) * z[ts[j]];
    return m;
  }

  Selection sel_;
  gaussian::Vector intercept_;
  gaussian::Matrix slopes_;
  gaussian::Vector residual_var_;
  gaussian::Vector log_sd_;
  std::size_t trained_on_;
};

// Fits a GaussianRegressionProposal on n_train simulated joint samples.
// Minimum-norm least squares on centered data, so constant targets give zero
// slopes and the latent sample mean as intercept.
inline GaussianRegressionProposal fit_regression_proposal(const JointModel& model,
                                                          const Selection& sel,
                                                          std::size_t n_train,
                                                          Rng& rng) {
  const auto& layout = model.layout();
  for (std::size_t v = 0; v < layout.size(); ++v)
    require(!layout.support(v).is_discrete(), ErrorCode::non_real_variables,
            "regression proposal requires real-valued variables; " +
                layout.address(v).str() + " is discrete");
  const auto dy = sel.target_slots().size();
  const auto dx = sel.latent_slots().size();
  require(n_train >= 10 * (dy + 1), ErrorCode::insufficient_training_data,
          "need at least " + std::to_string(10 * (dy + 1)) +
              " training samples, got " + std::to_string(n_train));

  const auto n = static_cast<Eigen::Index>(n_train);
  gaussian::Matrix ys(n, static_cast<Eigen::Index>(dy));
  gaussian::Matrix xs(n, static_cast<Eigen::Index>(dx));
  Point z(layout.width());
  for (Eigen::Index i = 0; i < n; ++i) {
    model.simulate(rng, z);
    for (std::size_t j = 0; j < dy; ++j)
      ys(i, static_cast<Eigen::Index>(j)) = z[sel.target_slots()[j]];
    for (std::size_t k = 0; k < dx; ++k)
      xs(i, static_cast<Eigen::Index>(k)) = z[sel.latent_slots()[k]];
  }
  const gaussian::Vector my = ys.colwise().mean();
  const gaussian::Vector mx = xs.colwise().mean();
  const gaussian::Matrix yc = ys.rowwise() - my.transpose();
  const gaussian::Matrix xc = xs.rowwise() - mx.transpose();

  Eigen::CompleteOrthogonalDecomposition<gaussian::Matrix> cod(yc);
  cod.setThreshold(1e-10);
  const gaussian::Matrix beta = cod.solve(xc);  // dy x dx
  const auto rank = cod.rank();
  const gaussian::Matrix resid = xc - yc * beta;
  const double dof = static_cast<double>(n - rank - 1);
  gaussian::Vector var = resid.colwise().squaredNorm().transpose() / dof;

  gaussian::Matrix slopes = beta.transpose();  // dx x dy
  gaussian::Vector intercept = mx - slopes * my;
  return GaussianRegressionProposal(sel, std::move(intercept), std::move(slopes),
                                    std::move(var), n_train);
}

// Exact Gaussian conditional p(x | y) of an MVN model.
class ExactGaussianProposal final : public BasicProposal {
 public:
  ExactGaussianProposal(const MvnModel& model, Selection sel)
      : sel_(std::move(sel)),
        cond_(model.conditional(sel_.latents(), sel_.targets())) {
    const auto llt = gaussian::cholesky(cond_.cov);
    chol_ = llt.matrixL();
    const auto k = chol_.rows();
    chol_inv_ = chol_.triangularView<Eigen::Lower>().solve(
        gaussian::Matrix::Identity(k, k));
    log_norm_ = -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) +
                        gaussian::log_det(llt));
  }

  const Selection& selection() const override { return sel_; }
  std::string id() const override { return "exact"; }

  double propose(Rng& rng, std::span<double> z) const override {
    const auto m = mean(z);
    const auto k = m.size();
    std::vector<double> e(static_cast<std::size_t>(k));
    double q = 0.0;
    for (auto& x : e) {
      x = rng.normal();
      q += x * x;
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      double v = m(i);
      for (Eigen::Index j = 0; j <= i; ++j) v += chol_(i, j) * e[static_cast<std::size_t>(j)];
      z[sel_.latent_slots()[static_cast<std::size_t>(i)]] = v;
    }
    return log_norm_ - 0.5 * q;
  }

  double assess(std::span<const double> z) const override {
    const auto m = mean(z);
    const auto k = m.size();
    double q = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      double r = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j)
        r += chol_inv_(i, j) * (z[sel_.latent_slots()[static_cast<std::size_t>(j)]] - m(j));
      q += r * r;
    }
    return log_norm_ - 0.5 * q;
  }

 private:
  gaussian::Vector mean(std::span<const double> z) const {
    const auto& ts = sel_.target_slots();
    gaussian::Vector y(static_cast<Eigen::Index>(ts.size()));
    for (std::size_t j = 0; j < ts.size(); ++j) y(static_cast<Eigen::Index>(j)) = z[ts[j]];
    return cond_.mean(y);
  }

  Selection sel_;
  gaussian::Conditional cond_;
  gaussian::Matrix chol_;
  gaussian::Matrix chol_inv_;
  double log_norm_ = 0.0;
};

// Exact posterior p(x | y) of a small all-discrete model, by enumerating the
// latent configurations for each y.
class EnumeratedPosteriorProposal final : public BasicProposal {
 public:
  static constexpr std::size_t kMaxLatentConfigurations = std::size_t{1} << 16;

  EnumeratedPosteriorProposal(const JointModel& model, Selection sel)
      : model_(model), sel_(std::move(sel)) {
    const auto& layout = model.layout();
    std::size_t configs = 1;
    for (auto v : sel_.latents()) {
      require(layout.support(v).is_discrete(), ErrorCode::invalid_argument,
              "enumerated posterior needs discrete latents");
      cards_.push_back(layout.support(v).cardinality);
      configs *= static_cast<std::size_t>(cards_.back());
      require(configs <= kMaxLatentConfigurations, ErrorCode::too_large_to_enumerate,
              "too many latent configurations to enumerate");
    }
    configs_ = configs;
  }

  const Selection& selection() const override { return sel_; }
  std::string id() const override { return "exact"; }

  double propose(Rng& rng, std::span<double> z) const override {
    const auto logs = posterior(z);
    const auto c = sample_log_categorical(rng, logs);
    write_config(c, z);
    return logs[c] - logsumexp(logs);
  }

  double assess(std::span<const double> z) const override {
    Point work(z.begin(), z.end());
    const double lp = model_.log_joint(work);
    const auto logs = posterior(z);
    return lp - logsumexp(logs);
  }

 private:
  std::vector<double> posterior(std::span<const double> z) const {
    Point work(z.begin(), z.end());
    std::vector<double> logs(configs_);
    for (std::size_t c = 0; c < configs_; ++c) {
      write_config(c, work);
      logs[c] = model_.log_joint(work);
    }
    return logs;
  }

  void write_config(std::size_t c, std::span<double> z) const {
    const auto& lat = sel_.latent_slots();
    for (std::size_t k = lat.size(); k-- > 0;) {
      const auto card = static_cast<std::size_t>(cards_[k]);
      z[lat[k]] = static_cast<double>(c % card);
      c /= card;
    }
  }

  const JointModel& model_;
  Selection sel_;
  std::vector<int> cards_;
  std::size_t configs_ = 1;
};

}  // namespace eevi
