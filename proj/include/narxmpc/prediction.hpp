#pragma once

#include <stdexcept>
#include <vector>

#include "narxmpc/basis.hpp"
#include "narxmpc/belief.hpp"
#include "narxmpc/math.hpp"

namespace narxmpc {

/// Closed-form posterior predictive for one future output: a location-scale
/// Student-t with
///   dof      = 2 * shape
///   location = mean . phi
///   scale_sq = rate/shape * (phi^T P^{-1} phi + 1)
template <typename Scalar = double>
struct StudentTPrediction {
  Scalar dof;
  Scalar location;
  Scalar scale_sq;

  /// Variance of the predictive; defined for dof > 2.
  Scalar variance() const {
    if (!(dof > Scalar(2))) {
      throw std::domain_error("StudentTPrediction: variance requires dof > 2");
    }
    return scale_sq * dof / (dof - Scalar(2));
  }
};

template <typename Scalar, typename Derived>
StudentTPrediction<Scalar> predict(const NormalGammaBelief<Scalar>& belief,
                                   const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != belief.dim()) {
    throw std::invalid_argument("predict: feature vector length mismatch");
  }
  const Vector<Scalar> f = phi;
  const auto llt = detail::factorize_precision(belief.precision, "predict");
  const Scalar quad = f.dot(llt.solve(f));
  StudentTPrediction<Scalar> pred;
  pred.dof = Scalar(2) * belief.shape;
  pred.location = belief.mean.dot(f);
  pred.scale_sq = belief.rate / belief.shape * (quad + Scalar(1));
  return pred;
}

/// Differential entropy (nats) of the predictive; independent of location.
template <typename Scalar>
Scalar predictive_entropy(const StudentTPrediction<Scalar>& pred) {
  return student_t_entropy(pred.dof, pred.scale_sq);
}

/// Mean-collapsed multi-step prediction over a candidate control sequence.
///
/// Each step's predictive is collapsed to its most probable value (the
/// location) before being fed back into the delay vector; the belief itself
/// is never updated, so per-step scale depends only on that step's features.
template <typename Scalar = double>
struct Rollout {
  std::vector<DelayVector<Scalar>> states;            // x_t entering step t
  std::vector<Vector<Scalar>> features;               // phi_t
  std::vector<StudentTPrediction<Scalar>> predictions;
  Vector<Scalar> outputs;                             // collapsed means y_hat_t

  Index horizon() const { return outputs.size(); }
};

template <typename Scalar, typename Derived>
Rollout<Scalar> rollout(const NormalGammaBelief<Scalar>& belief,
                        const DelayVector<Scalar>& x0,
                        const Eigen::MatrixBase<Derived>& controls,
                        const PolyBasis& basis) {
  const Index horizon = controls.size();
  if (horizon < 1) {
    throw std::invalid_argument("rollout: horizon must be >= 1");
  }
  const Vector<Scalar> u = controls;
  const auto llt = detail::factorize_precision(belief.precision, "rollout");
  const Scalar dof = Scalar(2) * belief.shape;

  Rollout<Scalar> out;
  out.states.reserve(horizon);
  out.features.reserve(horizon);
  out.predictions.reserve(horizon);
  out.outputs.resize(horizon);

  DelayVector<Scalar> x = x0;
  for (Index t = 0; t < horizon; ++t) {
    Vector<Scalar> phi = expand(basis, x, u[t]);
    const Scalar quad = phi.dot(llt.solve(phi));
    StudentTPrediction<Scalar> pred;
    pred.dof = dof;
    pred.location = belief.mean.dot(phi);
    pred.scale_sq = belief.rate / belief.shape * (quad + Scalar(1));
    out.outputs[t] = pred.location;
    out.states.push_back(x);
    out.features.push_back(std::move(phi));
    out.predictions.push_back(pred);
    x = shift(x, pred.location, u[t]);
  }
  return out;
}

}  // namespace narxmpc
