#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "narxmpc/basis.hpp"
#include "narxmpc/belief.hpp"
#include "narxmpc/prediction.hpp"

namespace narxmpc {

/// Gaussian goal prior over future outputs: the setpoint and its tolerance.
template <typename Scalar = double>
struct GoalPrior {
  Scalar mean = Scalar(0);      // m*
  Scalar variance = Scalar(1);  // v* > 0
};

enum class ObjectiveKind { ExpectedFreeEnergy, QuadraticCost };

/// One receding-horizon control problem: belief, current delay state, goal,
/// horizon and box bounds on each control input.
template <typename Scalar = double>
struct ControlProblem {
  Index horizon = 1;
  Scalar input_min = Scalar(-1);
  Scalar input_max = Scalar(1);
  Scalar control_penalty = Scalar(0);  // eta >= 0
  GoalPrior<Scalar> goal;
  PolyBasis basis;
  NormalGammaBelief<Scalar> belief;
  DelayVector<Scalar> state;
};

/// Per-step decomposition of the expected-free-energy objective. The
/// cross-entropy column holds only the u-dependent part (the goal-prior
/// normalization constant is excluded); total = sum(ce - mi + penalty).
template <typename Scalar = double>
struct ObjectiveBreakdown {
  Vector<Scalar> cross_entropy;
  Vector<Scalar> mutual_information;
  Vector<Scalar> control_penalty;
  Scalar cross_entropy_total;
  Scalar mutual_information_total;
  Scalar control_penalty_total;
  Scalar total;
};

/// Expected negative log goal-density under the predictive (full value,
/// including the 1/2 ln(2 pi v*) normalization constant):
///   1/2 ln(2 pi v*) + ((m - m*)^2 + s^2 dof/(dof-2)) / (2 v*)
template <typename Scalar>
Scalar cross_entropy_term(const StudentTPrediction<Scalar>& pred,
                          const GoalPrior<Scalar>& goal) {
  if (!(pred.dof > Scalar(2))) {
    throw std::domain_error("cross_entropy_term: requires dof > 2");
  }
  if (!(goal.variance > Scalar(0))) {
    throw std::domain_error("cross_entropy_term: goal variance must be positive");
  }
  const Scalar dm = pred.location - goal.mean;
  return Scalar(0.5) * std::log(Scalar(2) * Scalar(EIGEN_PI) * goal.variance) +
         (dm * dm + pred.variance()) / (Scalar(2) * goal.variance);
}

/// The u-dependent part of the mutual information between parameters and a
/// predicted output: 1/2 ln(phi^T P^{-1} phi + 1) >= 0. The u-independent
/// entropy pieces are constants and are dropped.
template <typename Scalar, typename Derived>
Scalar mutual_information_term(const NormalGammaBelief<Scalar>& belief,
                               const Eigen::MatrixBase<Derived>& phi) {
  if (phi.size() != belief.dim()) {
    throw std::invalid_argument("mutual_information_term: feature length mismatch");
  }
  const Vector<Scalar> f = phi;
  const auto llt =
      detail::factorize_precision(belief.precision, "mutual_information_term");
  return Scalar(0.5) * std::log1p(f.dot(llt.solve(f)));
}

/// Caching evaluator for repeated objective/gradient evaluations over one
/// control problem. Factorizes the belief precision once; evaluation is pure
/// and may run concurrently over candidate sequences.
template <typename Scalar = double>
class ObjectiveEvaluator {
 public:
  ObjectiveEvaluator(const ControlProblem<Scalar>& problem, ObjectiveKind kind)
      : kind_(kind),
        basis_(problem.basis),
        x0_(problem.state),
        mean_(problem.belief.mean),
        goal_(problem.goal),
        eta_(problem.control_penalty),
        shape_(problem.belief.shape),
        rate_(problem.belief.rate) {
    basis_.validate();
    if (problem.horizon < 1) {
      throw std::invalid_argument("ControlProblem: horizon must be >= 1");
    }
    if (!(problem.input_min < problem.input_max)) {
      throw std::invalid_argument("ControlProblem: requires input_min < input_max");
    }
    if (!(goal_.variance > Scalar(0))) {
      throw std::invalid_argument("ControlProblem: goal variance must be positive");
    }
    if (!(eta_ >= Scalar(0))) {
      throw std::invalid_argument("ControlProblem: control penalty must be >= 0");
    }
    if (mean_.size() != basis_.feature_dim()) {
      throw std::invalid_argument(
          "ControlProblem: belief dimension does not match basis feature_dim");
    }
    if (kind_ == ObjectiveKind::ExpectedFreeEnergy && !(shape_ > Scalar(1))) {
      throw std::domain_error(
          "ControlProblem: expected free energy requires shape > 1");
    }
    const auto llt =
        detail::factorize_precision(problem.belief.precision, "ObjectiveEvaluator");
    inv_precision_ =
        llt.solve(Matrix<Scalar>::Identity(mean_.size(), mean_.size()));
    risk_coef_ = rate_ / (goal_.variance * (Scalar(2) * shape_ - Scalar(2)));
  }

  ObjectiveKind kind() const { return kind_; }

  Scalar value(const Vector<Scalar>& u) const {
    Vector<Scalar>* no_grad = nullptr;
    return evaluate(u, no_grad);
  }

  Scalar value_and_gradient(const Vector<Scalar>& u, Vector<Scalar>& grad) const {
    return evaluate(u, &grad);
  }

  /// Expected-free-energy decomposition; requires shape > 1.
  ObjectiveBreakdown<Scalar> breakdown(const Vector<Scalar>& u) const {
    if (!(shape_ > Scalar(1))) {
      throw std::domain_error("breakdown: requires shape > 1");
    }
    const Index horizon = u.size();
    ObjectiveBreakdown<Scalar> out;
    out.cross_entropy.resize(horizon);
    out.mutual_information.resize(horizon);
    out.control_penalty.resize(horizon);

    DelayVector<Scalar> x = x0_;
    for (Index t = 0; t < horizon; ++t) {
      const Vector<Scalar> phi = expand(basis_, x, u[t]);
      const Scalar m = mean_.dot(phi);
      const Scalar one_plus_quad = phi.dot(inv_precision_ * phi) + Scalar(1);
      const Scalar dm = m - goal_.mean;
      out.cross_entropy[t] = dm * dm / (Scalar(2) * goal_.variance) +
                             risk_coef_ * one_plus_quad;
      out.mutual_information[t] = Scalar(0.5) * std::log(one_plus_quad);
      out.control_penalty[t] = eta_ * u[t] * u[t];
      x = shift(x, m, u[t]);
    }
    out.cross_entropy_total = out.cross_entropy.sum();
    out.mutual_information_total = out.mutual_information.sum();
    out.control_penalty_total = out.control_penalty.sum();
    out.total = out.cross_entropy_total - out.mutual_information_total +
                out.control_penalty_total;
    return out;
  }

 private:
  /// Forward pass over the mean-collapsed rollout, with an optional reverse
  /// pass accumulating the exact gradient. The chain through the collapsed
  /// outputs (y_hat_t enters x_{t+1}) is carried by the delay-state adjoint.
  Scalar evaluate(const Vector<Scalar>& u, Vector<Scalar>* grad) const {
    const Index horizon = u.size();
    if (horizon < 1) {
      throw std::invalid_argument("objective: control sequence must be non-empty");
    }
    const Index m = basis_.delays.regressor_dim();
    const bool efe = kind_ == ObjectiveKind::ExpectedFreeEnergy;

    std::vector<Vector<Scalar>> regressors;
    std::vector<Vector<Scalar>> features;
    std::vector<Scalar> locations(horizon);
    std::vector<Scalar> one_plus_quads(horizon);
    if (grad) {
      regressors.reserve(horizon);
      features.reserve(horizon);
    }

    Scalar total(0);
    DelayVector<Scalar> x = x0_;
    for (Index t = 0; t < horizon; ++t) {
      Vector<Scalar> r = regressor(x, u[t]);
      Vector<Scalar> phi = expand(basis_, x, u[t]);
      const Scalar loc = mean_.dot(phi);
      const Scalar dm = loc - goal_.mean;
      if (efe) {
        const Scalar one_plus_quad = phi.dot(inv_precision_ * phi) + Scalar(1);
        total += dm * dm / (Scalar(2) * goal_.variance) +
                 risk_coef_ * one_plus_quad -
                 Scalar(0.5) * std::log(one_plus_quad) + eta_ * u[t] * u[t];
        one_plus_quads[t] = one_plus_quad;
      } else {
        total += dm * dm + eta_ * u[t] * u[t];
      }
      locations[t] = loc;
      x = shift(x, loc, u[t]);
      if (grad) {
        regressors.push_back(std::move(r));
        features.push_back(std::move(phi));
      }
    }
    if (!grad) {
      return total;
    }

    grad->setZero(horizon);
    const Index ny = basis_.delays.past_outputs;
    const Index nu = basis_.delays.past_inputs;
    DelayVector<Scalar> xbar = DelayVector<Scalar>::zero(basis_.delays);
    for (Index t = horizon - 1; t >= 0; --t) {
      // Reverse of x_{t+1} = shift(x_t, y_hat_t, u_t).
      Scalar yhat_bar(0);
      DelayVector<Scalar> xbar_prev = DelayVector<Scalar>::zero(basis_.delays);
      if (ny > 0) {
        yhat_bar = xbar.past_outputs[0];
        xbar_prev.past_outputs.head(ny - 1) = xbar.past_outputs.tail(ny - 1);
      }
      if (nu > 0) {
        (*grad)[t] += xbar.past_inputs[0];
        xbar_prev.past_inputs.head(nu - 1) = xbar.past_inputs.tail(nu - 1);
      }

      // d(step objective)/d(phi_t), plus the collapsed-output chain.
      const Scalar dm = locations[t] - goal_.mean;
      Vector<Scalar> phi_bar;
      if (efe) {
        phi_bar = (dm / goal_.variance + yhat_bar) * mean_ +
                  (Scalar(2) * risk_coef_ - Scalar(1) / one_plus_quads[t]) *
                      (inv_precision_ * features[t]);
      } else {
        phi_bar = (Scalar(2) * dm + yhat_bar) * mean_;
      }

      // Pull back through the polynomial expansion onto the raw regressor.
      const Vector<Scalar>& r = regressors[t];
      Vector<Scalar> r_bar = Vector<Scalar>::Zero(m);
      const Index offset = basis_.include_intercept ? 1 : 0;
      Vector<Scalar> power = Vector<Scalar>::Ones(m);
      for (int p = 1; p <= basis_.degree; ++p) {
        r_bar.array() +=
            Scalar(p) * power.array() *
            phi_bar.segment(offset + (p - 1) * m, m).array();
        power.array() *= r.array();
      }

      if (ny > 0) xbar_prev.past_outputs += r_bar.head(ny);
      if (nu > 0) xbar_prev.past_inputs += r_bar.segment(ny, nu);
      (*grad)[t] += r_bar[m - 1] + Scalar(2) * eta_ * u[t];
      xbar = std::move(xbar_prev);
    }
    return total;
  }

  ObjectiveKind kind_;
  PolyBasis basis_;
  DelayVector<Scalar> x0_;
  Vector<Scalar> mean_;
  Matrix<Scalar> inv_precision_;
  GoalPrior<Scalar> goal_;
  Scalar eta_;
  Scalar shape_;
  Scalar rate_;
  Scalar risk_coef_;
};

/// Expected-free-energy objective over the mean-collapsed rollout; reported
/// without the u-independent entropy and goal-normalization constants.
template <typename Scalar, typename Derived>
Scalar efe(const ControlProblem<Scalar>& problem,
           const Eigen::MatrixBase<Derived>& u) {
  return ObjectiveEvaluator<Scalar>(problem, ObjectiveKind::ExpectedFreeEnergy)
      .value(Vector<Scalar>(u));
}

/// Quadratic cost with regularization over the mean-collapsed rollout.
template <typename Scalar, typename Derived>
Scalar qcr(const ControlProblem<Scalar>& problem,
           const Eigen::MatrixBase<Derived>& u) {
  return ObjectiveEvaluator<Scalar>(problem, ObjectiveKind::QuadraticCost)
      .value(Vector<Scalar>(u));
}

/// Exact gradient of the chosen objective with respect to the control
/// sequence, including the chain through the collapsed rollout outputs.
template <typename Scalar, typename Derived>
Vector<Scalar> gradient(const ControlProblem<Scalar>& problem,
                        const Eigen::MatrixBase<Derived>& u,
                        ObjectiveKind kind) {
  Vector<Scalar> g;
  ObjectiveEvaluator<Scalar>(problem, kind).value_and_gradient(Vector<Scalar>(u),
                                                               g);
  return g;
}

template <typename Scalar, typename Derived>
ObjectiveBreakdown<Scalar> breakdown(const ControlProblem<Scalar>& problem,
                                     const Eigen::MatrixBase<Derived>& u) {
  return ObjectiveEvaluator<Scalar>(problem, ObjectiveKind::ExpectedFreeEnergy)
      .breakdown(Vector<Scalar>(u));
}

}  // namespace narxmpc
