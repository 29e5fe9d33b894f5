// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "eevi/core/rng.hpp"
#include "eevi/model.hpp"
#include "eevi/models/gaussian.hpp"

namespace eevi {

// Multivariate normal over scalar addresses z0 ... z{d-1}.
class MvnModel final : public JointModel {
 public:
  MvnModel(gaussian::Vector mean, gaussian::Matrix cov)
      : mean_(std::move(mean)), cov_(std::move(cov)) {
    require(mean_.size() == cov_.rows() && cov_.rows() == cov_.cols() &&
                mean_.size() > 0,
            ErrorCode::invalid_argument, "mean/covariance shape mismatch");
    require((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <=
                1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff()),
            ErrorCode::invalid_argument, "covariance is not symmetric");
    const auto llt = gaussian::cholesky(cov_);
    chol_ = llt.matrixL();
    chol_inv_ = chol_.triangularView<Eigen::Lower>().solve(
        gaussian::Matrix::Identity(cov_.rows(), cov_.cols()));
    log_norm_ = -0.5 * (static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi) +
                        gaussian::log_det(llt));
    for (std::size_t i = 0; i < dim(); ++i)
      layout_.add(Address("z" + std::to_string(i)), Support::real());
  }

  // Seeded benchmark covariance: a random correlation structure with unit
  // marginal variances, cov = D^{-1/2} (W W^T / d + s I) D^{-1/2}.
  static MvnModel benchmark(std::size_t d, std::uint64_t seed = 2,
                            double ridge = 0.5) {
    Rng rng(derive_seed(seed, {0x6d766eULL, d}));
    gaussian::Matrix w(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
    gaussian::Matrix c = w * w.transpose() / static_cast<double>(d);
    c.diagonal().array() += ridge;
    const gaussian::Vector s = c.diagonal().array().rsqrt();
    c = s.asDiagonal() * c * s.asDiagonal();
    c = 0.5 * (c + c.transpose());
    return MvnModel(gaussian::Vector::Zero(static_cast<Eigen::Index>(d)), c);
  }

  static MvnModel bivariate(double rho) {
    gaussian::Matrix c(2, 2);
    c << 1.0, rho, rho, 1.0;
    return MvnModel(gaussian::Vector::Zero(2), c);
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const gaussian::Vector& mean() const { return mean_; }
  const gaussian::Matrix& cov() const { return cov_; }

  const Layout& layout() const override { return layout_; }
  std::string name() const override { return "mvn" + std::to_string(dim()); }

  void simulate(Rng& rng, std::span<double> z) const override {
    const auto d = static_cast<Eigen::Index>(dim());
    double eps[kStack];
    std::vector<double> heap;
    double* e = eps;
    if (dim() > kStack) {
      heap.resize(dim());
      e = heap.data();
    }
    for (Eigen::Index i = 0; i < d; ++i) e[i] = rng.normal();
    for (Eigen::Index i = 0; i < d; ++i) {
      double v = mean_(i);
      for (Eigen::Index j = 0; j <= i; ++j) v += chol_(i, j) * e[j];
      z[static_cast<std::size_t>(i)] = v;
    }
  }

  double log_joint(std::span<const double> z) const override {
    const auto d = static_cast<Eigen::Index>(dim());
    double q = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      double r = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j)
        r += chol_inv_(i, j) * (z[static_cast<std::size_t>(j)] - mean_(j));
      q += r * r;
    }
    return log_norm_ - 0.5 * q;
  }

  // The "prior" proposal for a selection: the latent block's marginal
  // N(mean_X, cov_XX), independent of the targets.
  bool can_simulate_latents() const override { return true; }
  std::unique_ptr<LatentKernel> ancestral_kernel(
      const Selection& sel) const override {
    return std::make_unique<MarginalKernel>(*this, sel);
  }

  // Site kernel: z_i | z_{<i} from the Cholesky factor (the model read as a
  // DAG in coordinate order).
  bool can_resimulate_sites() const override { return true; }
  double resimulate_site(Rng& rng, std::size_t var,
                         std::span<double> z) const override {
    const auto [m, sd] = site_conditional(var, z);
    z[var] = m + sd * rng.normal();
    return stats_log_normal(z[var], m, sd);
  }
  double site_log_density(std::size_t var,
                          std::span<const double> z) const override {
    const auto [m, sd] = site_conditional(var, z);
    return stats_log_normal(z[var], m, sd);
  }

  // Differential entropy of the selected coordinates.
  double subset_entropy(std::span<const std::size_t> vars) const {
    require(!vars.empty(), ErrorCode::invalid_selection, "empty selection");
    return gaussian::entropy(gaussian::submatrix(cov_, vars, vars));
  }

  double subset_entropy(const Selection& sel) const {
    return subset_entropy(sel.targets());
  }

  gaussian::Conditional conditional(std::span<const std::size_t> target,
                                    std::span<const std::size_t> given) const {
    return gaussian::condition(mean_, cov_, target, given);
  }

 private:
  static constexpr std::size_t kStack = 64;

  static double stats_log_normal(double x, double m, double sd) {
    const double r = (x - m) / sd;
    return -0.5 * (std::log(2.0 * std::numbers::pi) + r * r) - std::log(sd);
  }

  std::pair<double, double> site_conditional(std::size_t var,
                                             std::span<const double> z) const {
    const auto i = static_cast<Eigen::Index>(var);
    double m = mean_(i);
    for (Eigen::Index j = 0; j < i; ++j) {
      double e = 0.0;
      for (Eigen::Index k = 0; k <= j; ++k)
        e += chol_inv_(j, k) * (z[static_cast<std::size_t>(k)] - mean_(k));
      m += chol_(i, j) * e;
    }
    return {m, chol_(i, i)};
  }

  class MarginalKernel final : public LatentKernel {
   public:
    MarginalKernel(const MvnModel& model, const Selection& sel)
        : slots_(sel.latent_slots()) {
      const auto& lat = sel.latents();
      mean_ = gaussian::subvector(model.mean_, lat);
      const auto llt = gaussian::cholesky(gaussian::submatrix(model.cov_, lat, lat));
      chol_ = llt.matrixL();
      const auto k = chol_.rows();
      chol_inv_ = chol_.triangularView<Eigen::Lower>().solve(
          gaussian::Matrix::Identity(k, k));
      log_norm_ = -0.5 * (static_cast<double>(k) * std::log(2.0 * std::numbers::pi) +
                          gaussian::log_det(llt));
    }

    double simulate(Rng& rng, std::span<double> z) const override {
      const auto k = static_cast<Eigen::Index>(slots_.size());
      double q = 0.0;
      std::vector<double> e(slots_.size());
      for (Eigen::Index i = 0; i < k; ++i) {
        e[static_cast<std::size_t>(i)] = rng.normal();
        q += e[static_cast<std::size_t>(i)] * e[static_cast<std::size_t>(i)];
      }
      for (Eigen::Index i = 0; i < k; ++i) {
        double v = mean_(i);
        for (Eigen::Index j = 0; j <= i; ++j)
          v += chol_(i, j) * e[static_cast<std::size_t>(j)];
        z[slots_[static_cast<std::size_t>(i)]] = v;
      }
      return log_norm_ - 0.5 * q;
    }

    double assess(std::span<const double> z) const override {
      const auto k = static_cast<Eigen::Index>(slots_.size());
      double q = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) {
        double r = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j)
          r += chol_inv_(i, j) * (z[slots_[static_cast<std::size_t>(j)]] - mean_(j));
        q += r * r;
      }
      return log_norm_ - 0.5 * q;
    }

   private:
    std::vector<std::size_t> slots_;
    gaussian::Vector mean_;
    gaussian::Matrix chol_;
    gaussian::Matrix chol_inv_;
    double log_norm_ = 0.0;
  };

  gaussian::Vector mean_;
  gaussian::Matrix cov_;
  gaussian::Matrix chol_;
  gaussian::Matrix chol_inv_;
  double log_norm_ = 0.0;
  Layout layout_;
};

}  // namespace eevi
