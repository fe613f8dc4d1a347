#pragma once

#include <optional>
#include <string>
#include <vector>

#include "narxmpc/config.hpp"

namespace narxmpc {

/// One closed-loop step: applied control, resulting observation, the true
/// plant state, the objective decomposition of the chosen plan and a digest
/// of the belief after absorbing the observation.
struct StepRecord {
  long k = 0;
  double state0 = 0.0;  // true angle (pendulum) / true output (linear)
  double state1 = 0.0;  // true angular velocity (pendulum) / 0
  double y_obs = 0.0;
  double u = 0.0;
  double cross_entropy = 0.0;
  double mutual_information = 0.0;
  double control_penalty = 0.0;
  double objective = 0.0;
  // belief digest after this step's update
  double shape = 0.0;
  double rate = 0.0;
  double log_det_precision = 0.0;
  double mean_norm = 0.0;
  NormalGammaBelief<double> belief;
};

struct EpisodeSummary {
  long steps = 0;
  double initial_observation = 0.0;  // y_0, needed to replay the filter
  double first_control = 0.0;
  double final_output = 0.0;
  double final_error = 0.0;
  long first_success_step = -1;    // goal band held goal_hold consecutive steps
  long first_excitation_step = -1; // first |u| > 0.1
  bool success = false;
};

struct EpisodeTrace {
  std::vector<StepRecord> records;
  EpisodeSummary summary;
};

/// Run one closed-loop episode. When `out_dir` is given, writes trace.csv,
/// belief_history.json, summary.json and the first planned rollout under it.
EpisodeTrace run_experiment(const ExperimentConfig& config,
                            const std::optional<std::string>& out_dir = {},
                            std::optional<std::uint64_t> seed_override = {});

struct LambdaSweepRow {
  double scale = 0.0;
  double argmin_efe = 0.0;
  double mutual_information_range = 0.0;
};

/// First-step expected-free-energy argmin and mutual-information spread for
/// a family of prior precisions scale * I.
std::vector<LambdaSweepRow> sweep_lambda(const ExperimentConfig& config,
                                         const std::vector<double>& scales);

struct ObjectiveCurveRow {
  double u = 0.0;
  double efe = 0.0;
  double qcr = 0.0;
  double cross_entropy = 0.0;
  double mutual_information = 0.0;
};

/// Single-step objective values on a uniform control grid under the
/// configured prior belief and a zero-initialized delay state.
std::vector<ObjectiveCurveRow> objective_curve(const ExperimentConfig& config,
                                               double lo, double hi, int n);

/// Deterministically derive a sub-seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace narxmpc
