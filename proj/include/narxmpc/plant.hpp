#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace narxmpc {

struct Observation {
  double output = 0.0;
  long step = 0;
};

/// First-order linear autoregressive plant y_k = theta1 * y_{k-1} + theta2 * u_k,
/// observed noise-free by default.
class LinearArPlant {
 public:
  struct Params {
    double theta1 = 0.5;
    double theta2 = -0.5;
    double initial_output = 0.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;
  };

  explicit LinearArPlant(const Params& params)
      : params_(params), output_(params.initial_output), rng_(params.seed) {
    if (params.noise_std < 0.0) {
      throw std::invalid_argument("LinearArPlant: noise_std must be >= 0");
    }
  }

  /// Observation of the current state without advancing the dynamics.
  Observation observe() { return {output_ + noise(), step_}; }

  Observation step(double u) {
    output_ = params_.theta1 * output_ + params_.theta2 * u;
    ++step_;
    return observe();
  }

  double output() const { return output_; }
  long step_index() const { return step_; }

 private:
  double noise() {
    if (params_.noise_std == 0.0) return 0.0;
    return params_.noise_std * normal_(rng_);
  }

  Params params_;
  double output_;
  long step_ = 0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Damped point-mass pendulum with torque input,
///
///   angle_dd = (u - friction * angle_d - mass * gravity * length * sin(angle))
///              / (mass * length^2),
///
/// integrated with classical fourth-order Runge-Kutta at a fixed timestep.
/// The internal state is noise-free; observations are the (unwrapped) angle
/// plus Gaussian measurement noise.
class PendulumPlant {
 public:
  struct Params {
    double mass = 1.0;
    double length = 0.5;
    double friction = 0.01;
    double dt = 0.1;
    double gravity = 9.81;
    double noise_std = 0.001;
    double initial_angle = 0.0;
    double initial_velocity = 0.0;
    std::uint64_t seed = 0;
  };

  explicit PendulumPlant(const Params& params)
      : params_(params),
        angle_(params.initial_angle),
        velocity_(params.initial_velocity),
        rng_(params.seed) {
    if (params.dt <= 0.0) {
      throw std::invalid_argument("PendulumPlant: dt must be positive");
    }
    if (params.noise_std < 0.0) {
      throw std::invalid_argument("PendulumPlant: noise_std must be >= 0");
    }
  }

  Observation observe() { return {angle_ + noise(), step_}; }

  Observation step(double torque) {
    const double h = params_.dt;
    const double k1a = velocity_;
    const double k1v = acceleration(angle_, velocity_, torque);
    const double k2a = velocity_ + 0.5 * h * k1v;
    const double k2v = acceleration(angle_ + 0.5 * h * k1a, velocity_ + 0.5 * h * k1v, torque);
    const double k3a = velocity_ + 0.5 * h * k2v;
    const double k3v = acceleration(angle_ + 0.5 * h * k2a, velocity_ + 0.5 * h * k2v, torque);
    const double k4a = velocity_ + h * k3v;
    const double k4v = acceleration(angle_ + h * k3a, velocity_ + h * k3v, torque);
    angle_ += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
    velocity_ += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    ++step_;
    return observe();
  }

  double angle() const { return angle_; }
  double velocity() const { return velocity_; }

  /// Total mechanical energy relative to the hanging rest state.
  double energy() const {
    const auto& p = params_;
    return 0.5 * p.mass * p.length * p.length * velocity_ * velocity_ +
           p.mass * p.gravity * p.length * (1.0 - std::cos(angle_));
  }

 private:
  double acceleration(double angle, double velocity, double torque) const {
    const auto& p = params_;
    return (torque - p.friction * velocity -
            p.mass * p.gravity * p.length * std::sin(angle)) /
           (p.mass * p.length * p.length);
  }

  double noise() {
    if (params_.noise_std == 0.0) return 0.0;
    return params_.noise_std * normal_(rng_);
  }

  Params params_;
  double angle_;
  double velocity_;
  long step_ = 0;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace narxmpc
