#include "narxmpc/trace.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace narxmpc {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  return out;
}

/// Shortest round-trippable decimal representation, for byte-stable output.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json row_major_json(const Eigen::MatrixXd& m) {
  nlohmann::json a = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
  }
  return a;
}

}  // namespace

void write_trace_csv(const std::string& path, const EpisodeTrace& trace) {
  auto out = open_out(path);
  out << "# schema: narxmpc/trace/v1\n";
  out << "k,theta_true,omega_true,y_obs,u,ce,mi,penalty,objective,"
         "alpha,beta,logdet_lambda,mu_norm\n";
  for (const auto& r : trace.records) {
    out << r.k << ',' << fmt(r.state0) << ',' << fmt(r.state1) << ','
        << fmt(r.y_obs) << ',' << fmt(r.u) << ',' << fmt(r.cross_entropy) << ','
        << fmt(r.mutual_information) << ',' << fmt(r.control_penalty) << ','
        << fmt(r.objective) << ',' << fmt(r.shape) << ',' << fmt(r.rate) << ','
        << fmt(r.log_det_precision) << ',' << fmt(r.mean_norm) << '\n';
  }
}

void write_rollout_csv(const std::string& path, const Rollout<double>& rollout,
                       const Eigen::VectorXd& controls) {
  if (controls.size() != rollout.horizon()) {
    throw std::invalid_argument("write_rollout_csv: control length mismatch");
  }
  auto out = open_out(path);
  out << "# schema: narxmpc/rollout/v1\n";
  out << "t,u,y_hat,nu,m,s2\n";
  for (Index t = 0; t < rollout.horizon(); ++t) {
    const auto& p = rollout.predictions[static_cast<std::size_t>(t)];
    out << (t + 1) << ',' << fmt(controls[t]) << ',' << fmt(rollout.outputs[t])
        << ',' << fmt(p.dof) << ',' << fmt(p.location) << ','
        << fmt(p.scale_sq) << '\n';
  }
}

void write_belief_history_json(const std::string& path,
                               const EpisodeTrace& trace) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : trace.records) {
    history.push_back({{"k", r.k},
                       {"mu", to_json(r.belief.mean)},
                       {"lambda", row_major_json(r.belief.precision)},
                       {"alpha", r.belief.shape},
                       {"beta", r.belief.rate}});
  }
  open_out(path) << history.dump(2) << '\n';
}

void write_summary_json(const std::string& path, const EpisodeSummary& summary) {
  const nlohmann::json j = {
      {"steps", summary.steps},
      {"y0", summary.initial_observation},
      {"u1", summary.first_control},
      {"final_output", summary.final_output},
      {"final_error", summary.final_error},
      {"first_success_step", summary.first_success_step},
      {"first_excitation_step", summary.first_excitation_step},
      {"success", summary.success}};
  open_out(path) << j.dump(2) << '\n';
}

void write_lambda_sweep_csv(const std::string& path,
                            const std::vector<LambdaSweepRow>& rows) {
  auto out = open_out(path);
  out << "# schema: narxmpc/lambda-sweep/v1\n";
  out << "scale,argmin_efe,mi_range\n";
  for (const auto& r : rows) {
    out << fmt(r.scale) << ',' << fmt(r.argmin_efe) << ','
        << fmt(r.mutual_information_range) << '\n';
  }
}

void write_objective_curve_csv(const std::string& path,
                               const std::vector<ObjectiveCurveRow>& rows) {
  auto out = open_out(path);
  out << "# schema: narxmpc/objective-curve/v1\n";
  out << "u,J_efe,J_qcr,CE,MI\n";
  for (const auto& r : rows) {
    out << fmt(r.u) << ',' << fmt(r.efe) << ',' << fmt(r.qcr) << ','
        << fmt(r.cross_entropy) << ',' << fmt(r.mutual_information) << '\n';
  }
}

}  // namespace narxmpc
