#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "narxmpc/math.hpp"
#include "narxmpc/types.hpp"

namespace narxmpc {

/// Joint multivariate-Gaussian / univariate-Gamma belief over the model
/// coefficients and the measurement noise precision.
///
/// The coefficient block is Gaussian with mean `mean` and precision
/// tau * `precision`; the noise precision tau is Gamma with parameters
/// (`shape`, `rate`). Beliefs are immutable values: update() returns a new one.
template <typename Scalar = double>
struct NormalGammaBelief {
  Vector<Scalar> mean;     // coefficient location, length D
  Matrix<Scalar> precision;  // D x D symmetric positive definite
  Scalar shape = Scalar(1);
  Scalar rate = Scalar(1);

  Index dim() const { return mean.size(); }
};

/// Marginal over the coefficients: multivariate location-scale Student-t
/// with dof = 2*shape and scale matrix (rate/shape) * precision^{-1}.
template <typename Scalar = double>
struct StudentTMarginal {
  Vector<Scalar> location;
  Matrix<Scalar> scale;  // symmetric positive definite
  Scalar dof;
};

/// Marginal over the noise precision: Gamma(shape, rate).
template <typename Scalar = double>
struct GammaMarginal {
  Scalar shape;
  Scalar rate;
};

namespace detail {

template <typename Scalar>
Eigen::LLT<Matrix<Scalar>> factorize_precision(const Matrix<Scalar>& precision,
                                               const char* where) {
  Eigen::LLT<Matrix<Scalar>> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(std::string(where) +
                             ": precision matrix is not positive definite");
  }
  return llt;
}

template <typename Scalar>
Scalar log_det_from_llt(const Eigen::LLT<Matrix<Scalar>>& llt) {
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

template <typename Scalar>
void validate(const NormalGammaBelief<Scalar>& belief) {
  if (belief.precision.rows() != belief.dim() ||
      belief.precision.cols() != belief.dim()) {
    throw std::invalid_argument("NormalGammaBelief: precision/mean size mismatch");
  }
  if (!(belief.shape > Scalar(0))) {
    throw std::invalid_argument("NormalGammaBelief: shape must be positive");
  }
  if (!(belief.rate > Scalar(0))) {
    throw std::invalid_argument("NormalGammaBelief: rate must be positive");
  }
  detail::factorize_precision(belief.precision, "NormalGammaBelief");
}

/// Exact conjugate filter step: absorb one (features, output) pair.
///
///   P' = phi phi^T + P
///   mean' = P'^{-1} (phi y + P mean)      (linear solve, never an inverse)
///   shape' = shape + 1/2
///   rate' = rate + (y^2 - mean'^T P' mean' + mean^T P mean) / 2
///
/// The rate increment is recomputed in the algebraically equivalent
/// cancellation-free form ((y - mean'^T phi) y + (mean - mean')^T P mean) / 2
/// if the direct form rounds to a non-positive rate.
template <typename Scalar, typename Derived>
NormalGammaBelief<Scalar> update(const NormalGammaBelief<Scalar>& prior,
                                 const Eigen::MatrixBase<Derived>& phi,
                                 Scalar y) {
  if (phi.size() != prior.dim()) {
    throw std::invalid_argument("update: feature vector length mismatch");
  }
  const Vector<Scalar> f = phi;
  NormalGammaBelief<Scalar> post;
  post.precision = prior.precision + f * f.transpose();
  const auto llt = detail::factorize_precision(post.precision, "update");
  const Vector<Scalar> info = f * y + prior.precision * prior.mean;
  post.mean = llt.solve(info);
  post.shape = prior.shape + Scalar(0.5);

  const Scalar prior_quad = prior.mean.dot(prior.precision * prior.mean);
  const Scalar post_quad = post.mean.dot(post.precision * post.mean);
  post.rate = prior.rate + Scalar(0.5) * (y * y - post_quad + prior_quad);
  if (!(post.rate > Scalar(0))) {
    const Scalar residual = (y - post.mean.dot(f)) * y +
                            (prior.mean - post.mean).dot(prior.precision * prior.mean);
    post.rate = prior.rate + Scalar(0.5) * residual;
  }
  if (!(post.rate > Scalar(0))) {
    if (post.rate < Scalar(-1e-9) * prior.rate) {
      throw std::runtime_error("update: rate collapsed to a non-positive value");
    }
    post.rate = std::numeric_limits<Scalar>::min();
  }
  return post;
}

template <typename Scalar>
StudentTMarginal<Scalar> marginal_coefficients(
    const NormalGammaBelief<Scalar>& belief) {
  const auto llt = detail::factorize_precision(belief.precision,
                                               "marginal_coefficients");
  StudentTMarginal<Scalar> m;
  m.location = belief.mean;
  m.scale = (belief.rate / belief.shape) *
            llt.solve(Matrix<Scalar>::Identity(belief.dim(), belief.dim()));
  m.dof = Scalar(2) * belief.shape;
  return m;
}

template <typename Scalar>
GammaMarginal<Scalar> marginal_precision(const NormalGammaBelief<Scalar>& belief) {
  return GammaMarginal<Scalar>{belief.shape, belief.rate};
}

/// Differential entropy (nats) of the joint belief.
template <typename Scalar>
Scalar joint_entropy(const NormalGammaBelief<Scalar>& belief) {
  const auto llt = detail::factorize_precision(belief.precision, "joint_entropy");
  return normal_gamma_entropy(belief.dim(), detail::log_det_from_llt(llt),
                              belief.shape, belief.rate);
}

/// Log marginal likelihood of one observation under the belief: the
/// closed-form Student-t posterior predictive evaluated at y.
template <typename Scalar, typename Derived>
Scalar log_evidence(const NormalGammaBelief<Scalar>& belief,
                    const Eigen::MatrixBase<Derived>& phi, Scalar y) {
  if (phi.size() != belief.dim()) {
    throw std::invalid_argument("log_evidence: feature vector length mismatch");
  }
  const Vector<Scalar> f = phi;
  const auto llt = detail::factorize_precision(belief.precision, "log_evidence");
  const Scalar quad = f.dot(llt.solve(f));
  const Scalar dof = Scalar(2) * belief.shape;
  const Scalar location = belief.mean.dot(f);
  const Scalar scale_sq = belief.rate / belief.shape * (quad + Scalar(1));
  return student_t_log_density(dof, location, scale_sq, y);
}

}  // namespace narxmpc
