#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "narxmpc/types.hpp"

namespace narxmpc {

/// Multi-start box-constrained minimization settings. Starts are a
/// deterministic lattice (midpoint and the all-lower/all-upper corners, plus
/// a warm start when supplied) topped up with seeded uniform draws.
struct OptimizerConfig {
  int num_starts = 8;
  int max_iterations = 200;
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct StartRecord {
  Eigen::VectorXd start;
  Eigen::VectorXd minimizer;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct OptimizerResult {
  Eigen::VectorXd minimizer;
  double value = 0.0;
  int iterations = 0;   // summed over starts
  bool converged = false;  // best start converged
  std::vector<StartRecord> starts;
};

namespace detail {

inline Eigen::VectorXd project_box(const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& upper) {
  return u.cwiseMax(lower).cwiseMin(upper);
}

/// Projected gradient descent with Armijo backtracking; accepted iterates
/// never increase the objective.
template <typename F>
StartRecord descend_from(F&& f, Eigen::VectorXd u, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper,
                         const OptimizerConfig& config) {
  StartRecord rec;
  rec.start = u;
  const Index n = u.size();
  Eigen::VectorXd grad(n), trial_grad(n);
  double fu = f(u, grad);
  if (!std::isfinite(fu) || !grad.allFinite()) {
    throw std::runtime_error("minimize: objective or gradient is not finite");
  }

  double step = 1.0;
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    rec.iterations = iter;
    const Eigen::VectorXd projected_step = project_box(u - grad, lower, upper) - u;
    if (projected_step.lpNorm<Eigen::Infinity>() < config.gradient_tolerance) {
      rec.converged = true;
      break;
    }

    bool accepted = false;
    double t = step;
    Eigen::VectorXd trial, displacement;
    double ft = fu;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      trial = project_box(u - t * grad, lower, upper);
      displacement = trial - u;
      if (displacement.isZero(0.0)) {
        t *= 0.5;
        continue;
      }
      ft = f(trial, trial_grad);
      if (!std::isfinite(ft) || !trial_grad.allFinite()) {
        throw std::runtime_error("minimize: objective or gradient is not finite");
      }
      if (ft <= fu + 1e-4 * grad.dot(displacement)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      break;  // no acceptable descent step left at this scale
    }

    u = trial;
    fu = ft;
    grad = trial_grad;
    step = std::min(t * 2.0, 1e6);
    if (displacement.lpNorm<Eigen::Infinity>() < config.step_tolerance) {
      break;
    }
  }

  rec.minimizer = u;
  rec.value = fu;
  return rec;
}

}  // namespace detail

/// Minimize a smooth objective with gradient over the box [lower, upper],
/// taking the best local minimum across starts. The callable is invoked as
/// f(u, grad) -> double with grad overwritten in place. Ties between starts
/// resolve to the lowest start index; a fixed seed gives bit-identical
/// results.
template <typename F>
OptimizerResult minimize(F&& f, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper,
                         const OptimizerConfig& config,
                         const std::optional<Eigen::VectorXd>& warm_start = {}) {
  const Index n = lower.size();
  if (upper.size() != n || n < 1) {
    throw std::invalid_argument("minimize: bad bound dimensions");
  }
  if (!((lower.array() < upper.array()).all())) {
    throw std::invalid_argument("minimize: requires lower < upper");
  }
  if (config.num_starts < 1) {
    throw std::invalid_argument("minimize: requires at least one start");
  }

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(static_cast<std::size_t>(config.num_starts) + 1);
  if (warm_start) {
    if (warm_start->size() != n) {
      throw std::invalid_argument("minimize: warm start dimension mismatch");
    }
    starts.push_back(detail::project_box(*warm_start, lower, upper));
  }
  starts.push_back(0.5 * (lower + upper));
  if (static_cast<int>(starts.size()) < config.num_starts) starts.push_back(lower);
  if (static_cast<int>(starts.size()) < config.num_starts) starts.push_back(upper);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(starts.size()) <
         config.num_starts + (warm_start ? 1 : 0)) {
    Eigen::VectorXd u(n);
    for (Index i = 0; i < n; ++i) {
      u[i] = lower[i] + (upper[i] - lower[i]) * unit(rng);
    }
    starts.push_back(std::move(u));
  }

  OptimizerResult result;
  result.starts.reserve(starts.size());
  int best = -1;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    StartRecord rec = detail::descend_from(f, starts[s], lower, upper, config);
    result.iterations += rec.iterations;
    result.starts.push_back(std::move(rec));
    if (best < 0 || result.starts[s].value < result.starts[best].value) {
      best = static_cast<int>(s);
    }
  }
  result.minimizer = result.starts[best].minimizer;
  result.value = result.starts[best].value;
  result.converged = result.starts[best].converged;
  return result;
}

}  // namespace narxmpc
