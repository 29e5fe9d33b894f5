// Copyright 2026 MIT Probabilistic Computing Project
// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "eevi/core/error.hpp"

namespace eevi::gaussian {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Matrix submatrix(const Matrix& m, std::span<const std::size_t> rows,
                        std::span<const std::size_t> cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline Vector subvector(const Vector& v, std::span<const std::size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(idx[i]));
  return out;
}

// Cholesky factorization that reports non-SPD input as SingularSubmatrix.
inline Eigen::LLT<Matrix> cholesky(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success, ErrorCode::singular_submatrix,
          "covariance is not symmetric positive definite");
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < cov.rows(); ++i)
    require(l(i, i) > 0.0 && std::isfinite(l(i, i)),
            ErrorCode::singular_submatrix, "covariance is singular");
  return llt;
}

inline double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// Differential entropy 0.5 ln((2 pi e)^k det cov), in nats.
inline double entropy(const Matrix& cov) {
  const auto llt = cholesky(cov);
  const double k = static_cast<double>(cov.rows());
  return 0.5 * (k * std::log(2.0 * std::numbers::pi * std::numbers::e) +
                log_det(llt));
}

inline double log_density(const Vector& x, const Vector& mean,
                          const Eigen::LLT<Matrix>& llt) {
  const Vector r = llt.matrixL().solve(x - mean);
  const double k = static_cast<double>(x.size());
  return -0.5 * (k * std::log(2.0 * std::numbers::pi) + log_det(llt) +
                 r.squaredNorm());
}

// KL(N(m0, s0) || N(m1, s1)).
inline double kl(const Vector& m0, const Matrix& s0, const Vector& m1,
                 const Matrix& s1) {
  const auto l0 = cholesky(s0);
  const auto l1 = cholesky(s1);
  const Matrix s1_inv_s0 = l1.solve(s0);
  const Vector dm = m1 - m0;
  const double k = static_cast<double>(m0.size());
  return 0.5 * (s1_inv_s0.trace() + dm.dot(l1.solve(dm)) - k + log_det(l1) -
                log_det(l0));
}

inline double kl_1d(double m0, double v0, double m1, double v1) {
  const double d = m1 - m0;
  return 0.5 * (v0 / v1 + d * d / v1 - 1.0 + std::log(v1 / v0));
}

// Parameters of x_T | x_G = g for a joint Gaussian:
//   mean = offset + gain * g,  covariance = cov.
struct Conditional {
  Vector offset;
  Matrix gain;
  Matrix cov;

  Vector mean(const Vector& given) const { return offset + gain * given; }
};

inline Conditional condition(const Vector& mean, const Matrix& cov,
                             std::span<const std::size_t> target,
                             std::span<const std::size_t> given) {
  const Matrix s_tt = submatrix(cov, target, target);
  const Vector m_t = subvector(mean, target);
  if (given.empty()) {
    return {m_t, Matrix::Zero(s_tt.rows(), 0), s_tt};
  }
  const Matrix s_tg = submatrix(cov, target, given);
  const Matrix s_gg = submatrix(cov, given, given);
  const auto llt = cholesky(s_gg);
  const Matrix gain = llt.solve(s_tg.transpose()).transpose();
  const Vector m_g = subvector(mean, given);
  Conditional c;
  c.gain = gain;
  c.offset = m_t - gain * m_g;
  c.cov = s_tt - gain * s_tg.transpose();
  c.cov = 0.5 * (c.cov + c.cov.transpose());
  return c;
}

}  // namespace eevi::gaussian
