#pragma once

#include <string>

#include "narxmpc/experiment.hpp"
#include "narxmpc/prediction.hpp"

namespace narxmpc {

/// Schema narxmpc/trace/v1:
///   k,theta_true,omega_true,y_obs,u,ce,mi,penalty,objective,
///   alpha,beta,logdet_lambda,mu_norm
void write_trace_csv(const std::string& path, const EpisodeTrace& trace);

/// Schema narxmpc/rollout/v1: t,u,y_hat,nu,m,s2
void write_rollout_csv(const std::string& path, const Rollout<double>& rollout,
                       const Eigen::VectorXd& controls);

/// Per-step belief snapshots (mean, row-major precision, shape, rate).
void write_belief_history_json(const std::string& path,
                               const EpisodeTrace& trace);

void write_summary_json(const std::string& path, const EpisodeSummary& summary);

void write_lambda_sweep_csv(const std::string& path,
                            const std::vector<LambdaSweepRow>& rows);

void write_objective_curve_csv(const std::string& path,
                               const std::vector<ObjectiveCurveRow>& rows);

}  // namespace narxmpc
