#include "narxmpc/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <variant>

#include "narxmpc/trace.hpp"

namespace narxmpc {
namespace {

using PlantVariant = std::variant<LinearArPlant, PendulumPlant>;

PlantVariant make_plant(const PlantConfig& config, std::uint64_t seed) {
  if (config.kind == PlantConfig::Kind::Linear) {
    LinearArPlant::Params p = config.linear;
    p.seed = seed;
    return LinearArPlant(p);
  }
  PendulumPlant::Params p = config.pendulum;
  p.seed = seed;
  return PendulumPlant(p);
}

Observation observe(PlantVariant& plant) {
  return std::visit([](auto& p) { return p.observe(); }, plant);
}

Observation step(PlantVariant& plant, double u) {
  return std::visit([&](auto& p) { return p.step(u); }, plant);
}

std::pair<double, double> true_state(const PlantVariant& plant) {
  return std::visit(
      [](const auto& p) -> std::pair<double, double> {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LinearArPlant>) {
          return {p.output(), 0.0};
        } else {
          return {p.angle(), p.velocity()};
        }
      },
      plant);
}

void fill_belief_digest(StepRecord& record, const NormalGammaBelief<double>& b) {
  record.belief = b;
  record.shape = b.shape;
  record.rate = b.rate;
  const Eigen::LLT<Eigen::MatrixXd> llt(b.precision);
  record.log_det_precision =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  record.mean_norm = b.mean.norm();
}

EpisodeSummary summarize(const std::vector<StepRecord>& records,
                         const ExperimentConfig& config) {
  EpisodeSummary summary;
  summary.steps = static_cast<long>(records.size());
  if (records.empty()) return summary;

  summary.first_control = records.front().u;
  summary.final_output = records.back().y_obs;
  summary.final_error = std::abs(summary.final_output - config.agent.goal.mean);

  const double band = config.episode.goal_band;
  const int hold = config.episode.goal_hold;
  int run = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (std::abs(records[i].y_obs - config.agent.goal.mean) < band) {
      ++run;
      if (run >= hold) {
        summary.first_success_step =
            records[i + 1 - static_cast<std::size_t>(hold)].k;
        summary.success = true;
        break;
      }
    } else {
      run = 0;
    }
  }
  for (const auto& r : records) {
    if (std::abs(r.u) > 0.1) {
      summary.first_excitation_step = r.k;
      break;
    }
  }
  return summary;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

EpisodeTrace run_experiment(const ExperimentConfig& config,
                            const std::optional<std::string>& out_dir,
                            std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = config;
  if (seed_override) cfg.episode.seed = *seed_override;

  PlantVariant plant = make_plant(cfg.plant, derive_seed(cfg.episode.seed, 1));
  Agent agent(cfg.agent);

  EpisodeTrace trace;
  trace.records.reserve(static_cast<std::size_t>(cfg.episode.length));

  std::optional<std::string> rollout_path;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    rollout_path = *out_dir + "/rollout_first_step.csv";
  }

  const double initial_observation = observe(plant).output;
  double y_prev = initial_observation;
  for (long k = 1; k <= cfg.episode.length; ++k) {
    agent.observe(y_prev);
    if (k >= 2) {
      fill_belief_digest(trace.records[static_cast<std::size_t>(k) - 2],
                         agent.belief());
    }
    const AgentStepResult planned = agent.plan();
    if (k == 1 && rollout_path) {
      const Rollout<double> first = rollout(agent.belief(), agent.state(),
                                            planned.optimization.minimizer,
                                            cfg.agent.basis);
      write_rollout_csv(*rollout_path, first, planned.optimization.minimizer);
    }

    const Observation obs = step(plant, planned.control);
    StepRecord record;
    record.k = k;
    std::tie(record.state0, record.state1) = true_state(plant);
    record.y_obs = obs.output;
    record.u = planned.control;
    record.objective = planned.optimization.value;
    if (planned.breakdown) {
      record.cross_entropy = planned.breakdown->cross_entropy_total;
      record.mutual_information = planned.breakdown->mutual_information_total;
      record.control_penalty = planned.breakdown->control_penalty_total;
    }
    trace.records.push_back(std::move(record));
    y_prev = obs.output;
  }
  if (cfg.episode.length >= 1) {
    agent.observe(y_prev);  // absorb the final observation into the filter
    fill_belief_digest(trace.records.back(), agent.belief());
  }

  trace.summary = summarize(trace.records, cfg);
  trace.summary.initial_observation = initial_observation;

  if (out_dir) {
    write_trace_csv(*out_dir + "/trace.csv", trace);
    write_belief_history_json(*out_dir + "/belief_history.json", trace);
    write_summary_json(*out_dir + "/summary.json", trace.summary);
  }
  return trace;
}

std::vector<LambdaSweepRow> sweep_lambda(const ExperimentConfig& config,
                                         const std::vector<double>& scales) {
  const Index dim = config.agent.basis.feature_dim();
  std::vector<LambdaSweepRow> rows;
  rows.reserve(scales.size());
  for (const double scale : scales) {
    if (!(scale > 0.0)) {
      throw std::invalid_argument("sweep_lambda: scales must be positive");
    }
    ExperimentConfig cfg = config;
    cfg.agent.prior_precision = scale * Eigen::MatrixXd::Identity(dim, dim);
    cfg.agent.objective = ObjectiveKind::ExpectedFreeEnergy;
    Agent agent(cfg.agent);

    const ControlProblem<double> problem = agent.current_problem();
    ObjectiveEvaluator<double> evaluator(problem,
                                         ObjectiveKind::ExpectedFreeEnergy);
    const Eigen::VectorXd lower =
        Eigen::VectorXd::Constant(cfg.agent.horizon, cfg.agent.input_min);
    const Eigen::VectorXd upper =
        Eigen::VectorXd::Constant(cfg.agent.horizon, cfg.agent.input_max);
    const OptimizerResult res = minimize(
        [&](const Eigen::VectorXd& u, Eigen::VectorXd& grad) {
          return evaluator.value_and_gradient(u, grad);
        },
        lower, upper, cfg.agent.optimizer);

    // Spread of the mutual-information term over the admissible first input.
    constexpr int kGrid = 201;
    double mi_min = 0.0, mi_max = 0.0;
    for (int i = 0; i < kGrid; ++i) {
      const double u = cfg.agent.input_min +
                       (cfg.agent.input_max - cfg.agent.input_min) * i /
                           (kGrid - 1);
      const Eigen::VectorXd phi =
          expand(cfg.agent.basis, agent.state(), u);
      const double mi = mutual_information_term(agent.belief(), phi);
      if (i == 0 || mi < mi_min) mi_min = mi;
      if (i == 0 || mi > mi_max) mi_max = mi;
    }

    rows.push_back({scale, res.minimizer[0], mi_max - mi_min});
  }
  return rows;
}

std::vector<ObjectiveCurveRow> objective_curve(const ExperimentConfig& config,
                                               double lo, double hi, int n) {
  if (n < 2 || !(lo < hi)) {
    throw std::invalid_argument("objective_curve: need lo < hi and n >= 2");
  }
  Agent agent(config.agent);
  ControlProblem<double> problem = agent.current_problem();
  problem.horizon = 1;
  const ObjectiveEvaluator<double> efe_eval(problem,
                                            ObjectiveKind::ExpectedFreeEnergy);
  const ObjectiveEvaluator<double> qcr_eval(problem,
                                            ObjectiveKind::QuadraticCost);

  std::vector<ObjectiveCurveRow> rows;
  rows.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd u(1);
  for (int i = 0; i < n; ++i) {
    u[0] = lo + (hi - lo) * i / (n - 1);
    const Eigen::VectorXd phi = expand(problem.basis, problem.state, u[0]);
    ObjectiveCurveRow row;
    row.u = u[0];
    row.efe = efe_eval.value(u);
    row.qcr = qcr_eval.value(u);
    row.cross_entropy =
        cross_entropy_term(predict(problem.belief, phi), problem.goal);
    row.mutual_information = mutual_information_term(problem.belief, phi);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace narxmpc
