#pragma once

#include <stdexcept>

#include "narxmpc/types.hpp"

namespace narxmpc {

/// Number of lagged outputs and lagged inputs kept in the regressor.
/// Together with the current input this gives a raw regressor of length
/// regressor_dim() = past_outputs + past_inputs + 1.
struct DelayConfig {
  Index past_outputs = 0;
  Index past_inputs = 0;

  Index regressor_dim() const { return past_outputs + past_inputs + 1; }
};

inline bool operator==(const DelayConfig& a, const DelayConfig& b) {
  return a.past_outputs == b.past_outputs && a.past_inputs == b.past_inputs;
}

/// Sliding window of past outputs and past inputs, newest first.
template <typename Scalar = double>
struct DelayVector {
  Vector<Scalar> past_outputs;  // y_{k-1}, y_{k-2}, ...
  Vector<Scalar> past_inputs;   // u_{k-1}, u_{k-2}, ...

  static DelayVector zero(const DelayConfig& config) {
    DelayVector x;
    x.past_outputs = Vector<Scalar>::Zero(config.past_outputs);
    x.past_inputs = Vector<Scalar>::Zero(config.past_inputs);
    return x;
  }

  DelayConfig config() const {
    return DelayConfig{past_outputs.size(), past_inputs.size()};
  }
};

/// Push a new output/input pair onto the window, dropping the oldest entries.
template <typename Scalar>
DelayVector<Scalar> shift(const DelayVector<Scalar>& x, Scalar new_output,
                          Scalar new_input) {
  DelayVector<Scalar> out = x;
  const Index ny = x.past_outputs.size();
  if (ny > 0) {
    out.past_outputs.tail(ny - 1) = x.past_outputs.head(ny - 1);
    out.past_outputs[0] = new_output;
  }
  const Index nu = x.past_inputs.size();
  if (nu > 0) {
    out.past_inputs.tail(nu - 1) = x.past_inputs.head(nu - 1);
    out.past_inputs[0] = new_input;
  }
  return out;
}

/// Polynomial basis expansion without cross-terms.
///
/// Feature ordering is fixed: intercept first (when enabled), then for each
/// power p = 1..degree the raw regressor entries in order
/// (y_{k-1}, ..., y_{k-My}, u_{k-1}, ..., u_{k-Mu}, u_k) raised to p.
struct PolyBasis {
  int degree = 1;
  bool include_intercept = true;
  bool cross_terms = false;  // declared but unsupported
  DelayConfig delays;

  Index feature_dim() const {
    return (include_intercept ? 1 : 0) + delays.regressor_dim() * degree;
  }

  void validate() const {
    if (degree < 1) {
      throw std::invalid_argument("PolyBasis: degree must be >= 1");
    }
    if (cross_terms) {
      throw std::invalid_argument("PolyBasis: cross_terms are not supported");
    }
    if (delays.past_outputs < 0 || delays.past_inputs < 0) {
      throw std::invalid_argument("PolyBasis: delay counts must be >= 0");
    }
  }
};

/// Raw regressor [past outputs; past inputs; current input], length M.
template <typename Scalar>
Vector<Scalar> regressor(const DelayVector<Scalar>& x, Scalar u) {
  Vector<Scalar> r(x.past_outputs.size() + x.past_inputs.size() + 1);
  r << x.past_outputs, x.past_inputs, u;
  return r;
}

/// phi(x_k, u_k): expand the delay vector and current input through the basis.
template <typename Scalar>
Vector<Scalar> expand(const PolyBasis& basis, const DelayVector<Scalar>& x,
                      Scalar u) {
  basis.validate();
  if (!(x.config() == basis.delays)) {
    throw std::invalid_argument(
        "expand: delay vector does not match the basis delay configuration");
  }
  const Vector<Scalar> r = regressor(x, u);
  const Index m = r.size();
  Vector<Scalar> phi(basis.feature_dim());
  Index offset = 0;
  if (basis.include_intercept) {
    phi[0] = Scalar(1);
    offset = 1;
  }
  Vector<Scalar> power = Vector<Scalar>::Ones(m);
  for (int p = 1; p <= basis.degree; ++p) {
    power.array() *= r.array();
    phi.segment(offset + (p - 1) * m, m) = power;
  }
  return phi;
}

}  // namespace narxmpc
