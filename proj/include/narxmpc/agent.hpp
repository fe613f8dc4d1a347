#pragma once

#include <optional>
#include <stdexcept>
#include <utility>

#include "narxmpc/basis.hpp"
#include "narxmpc/belief.hpp"
#include "narxmpc/objective.hpp"
#include "narxmpc/optimizer.hpp"

namespace narxmpc {

struct AgentConfig {
  ObjectiveKind objective = ObjectiveKind::ExpectedFreeEnergy;
  Eigen::VectorXd prior_mean;
  Eigen::MatrixXd prior_precision;
  double prior_shape = 10.0;
  double prior_rate = 1.0;
  double control_penalty = 0.0;
  GoalPrior<double> goal;
  Index horizon = 1;
  double input_min = -1.0;
  double input_max = 1.0;
  PolyBasis basis;
  OptimizerConfig optimizer;

  void validate() const {
    basis.validate();
    if (prior_mean.size() != basis.feature_dim()) {
      throw std::invalid_argument(
          "AgentConfig: prior mean length does not match basis feature_dim");
    }
    if (objective == ObjectiveKind::ExpectedFreeEnergy && !(prior_shape > 1.0)) {
      throw std::invalid_argument(
          "AgentConfig: expected free energy requires prior shape > 1");
    }
    if (horizon < 1) {
      throw std::invalid_argument("AgentConfig: horizon must be >= 1");
    }
    if (!(input_min < input_max)) {
      throw std::invalid_argument("AgentConfig: requires input_min < input_max");
    }
  }
};

struct AgentStepResult {
  double control = 0.0;
  OptimizerResult optimization;
  /// Expected-free-energy decomposition at the chosen plan (also reported for
  /// the quadratic-cost agent when the belief admits it).
  std::optional<ObjectiveBreakdown<double>> breakdown;
};

/// Receding-horizon controller: filter the belief on each observation, then
/// re-optimize a length-T control sequence and apply its first element.
class Agent {
 public:
  explicit Agent(AgentConfig config) : config_(std::move(config)) {
    config_.validate();
    belief_.mean = config_.prior_mean;
    belief_.precision = config_.prior_precision;
    belief_.shape = config_.prior_shape;
    belief_.rate = config_.prior_rate;
    validate(belief_);
    state_ = DelayVector<double>::zero(config_.basis.delays);
  }

  /// Absorb one observation: conjugate update with the previously applied
  /// control (skipped for the very first observation, which precedes any
  /// control), then slide the delay window.
  void observe(double output) {
    if (last_control_) {
      const Eigen::VectorXd phi = expand(config_.basis, state_, *last_control_);
      belief_ = update(belief_, phi, output);
    }
    state_ = shift(state_, output, last_control_.value_or(0.0));
  }

  /// Solve the horizon problem from the current belief and delay state and
  /// commit to the first control of the plan.
  AgentStepResult plan() {
    const ControlProblem<double> problem = current_problem();
    ObjectiveEvaluator<double> evaluator(problem, config_.objective);
    const Eigen::VectorXd lower =
        Eigen::VectorXd::Constant(config_.horizon, config_.input_min);
    const Eigen::VectorXd upper =
        Eigen::VectorXd::Constant(config_.horizon, config_.input_max);

    AgentStepResult result;
    result.optimization = minimize(
        [&](const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
          return evaluator.value_and_gradient(u, grad);
        },
        lower, upper, config_.optimizer, warm_start());
    result.control = result.optimization.minimizer[0];
    if (belief_.shape > 1.0) {
      ObjectiveEvaluator<double> efe_eval(problem,
                                          ObjectiveKind::ExpectedFreeEnergy);
      result.breakdown = efe_eval.breakdown(result.optimization.minimizer);
    }
    last_control_ = result.control;
    last_plan_ = result.optimization.minimizer;
    return result;
  }

  AgentStepResult step(double output) {
    observe(output);
    return plan();
  }

  ControlProblem<double> current_problem() const {
    ControlProblem<double> problem;
    problem.horizon = config_.horizon;
    problem.input_min = config_.input_min;
    problem.input_max = config_.input_max;
    problem.control_penalty = config_.control_penalty;
    problem.goal = config_.goal;
    problem.basis = config_.basis;
    problem.belief = belief_;
    problem.state = state_;
    return problem;
  }

  const NormalGammaBelief<double>& belief() const { return belief_; }
  const DelayVector<double>& state() const { return state_; }
  const AgentConfig& config() const { return config_; }

 private:
  /// Previous plan shifted one step, last entry duplicated.
  std::optional<Eigen::VectorXd> warm_start() const {
    if (!last_plan_) return std::nullopt;
    Eigen::VectorXd warm = *last_plan_;
    const Index n = warm.size();
    if (n > 1) {
      warm.head(n - 1) = last_plan_->tail(n - 1);
    }
    return warm;
  }

  AgentConfig config_;
  NormalGammaBelief<double> belief_;
  DelayVector<double> state_;
  std::optional<double> last_control_;
  std::optional<Eigen::VectorXd> last_plan_;
};

}  // namespace narxmpc
