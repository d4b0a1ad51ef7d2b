// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/flowmatch/flowmatch.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowdub::flowmatch {

FlowSample sample_ot_path(const Array& x0, const Array& x1, double t) {
  if (!x0.same_shape(x1)) throw std::invalid_argument("sample_ot_path: shape mismatch");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("sample_ot_path: t outside [0,1]");
  FlowSample fs;
  fs.x0 = x0;
  fs.x1 = x1;
  fs.t = t;
  fs.x_t = Array::zeros(x0.shape());
  fs.u_t = Array::zeros(x0.shape());
  for (size_t i = 0; i < x0.numel(); ++i) {
    fs.x_t[i] = float((1.0 - t) * double(x0[i]) + t * double(x1[i]));
    fs.u_t[i] = float(double(x1[i]) - double(x0[i]));
  }
  fs.x_t.require_finite("sample_ot_path x_t");
  return fs;
}

Array cfg_combine(const Array& v_cond, const Array& v_uncond, double w) {
  if (!v_cond.same_shape(v_uncond)) throw std::invalid_argument("cfg_combine: shape mismatch");
  Array out = Array::zeros(v_cond.shape());
  for (size_t i = 0; i < out.numel(); ++i) {
    out[i] = float(double(v_uncond[i]) + w * (double(v_cond[i]) - double(v_uncond[i])));
  }
  out.require_finite("cfg_combine");
  return out;
}

Tape::Ref cfm_loss(Tape& tape, const TapeField& field, const std::vector<Array>& x1_batch,
                   Rng& rng) {
  if (x1_batch.empty()) throw std::invalid_argument("cfm_loss: empty batch");
  Tape::Ref sum{};
  bool first = true;
  for (size_t i = 0; i < x1_batch.size(); ++i) {
    const Array& x1 = x1_batch[i];
    Array x0 = Array::zeros(x1.shape());
    numkit::fill_normal(rng, x0);
    const double t = rng.uniform();
    FlowSample fs = sample_ot_path(x0, x1, t);
    Tape::Ref x_t = tape.input(std::move(fs.x_t));
    Tape::Ref pred = field(tape, x_t, t, i);
    tape.value(pred).require_finite("cfm_loss network output");
    Tape::Ref se = tape.squared_error(pred, tape.input(std::move(fs.u_t)));
    sum = first ? se : tape.add(sum, se);
    first = false;
  }
  if (x1_batch.size() == 1) return sum;
  Tape::Ref scale = tape.input(Array({1}, {float(1.0 / double(x1_batch.size()))}));
  return tape.mul(sum, scale);
}

Array ode_sample(const SampleField& field, const Array& x0, int steps, OdeMethod method,
                 const GuidanceSpec& guidance) {
  if (steps < 1) throw std::invalid_argument("ode_sample: steps must be >= 1");
  x0.require_finite("ode_sample x0");

  auto eval = [&](const Array& x, double t) -> Array {
    Array v_cond = field(x, t, true);
    if (guidance.scale == 1.0) return v_cond;
    Array v_uncond = field(x, t, false);
    return cfg_combine(v_cond, v_uncond, guidance.scale);
  };

  // State kept in float64 so step-size roundoff does not leak into the
  // endpoint; the field sees float32 snapshots.
  std::vector<double> state(x0.numel());
  for (size_t i = 0; i < state.size(); ++i) state[i] = double(x0[i]);

  auto snapshot = [&]() {
    Array x = Array::zeros(x0.shape());
    for (size_t i = 0; i < state.size(); ++i) x[i] = float(state[i]);
    return x;
  };
  auto check = [&](int step) {
    for (double v : state) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("ode_sample: non-finite state at step " + std::to_string(step));
      }
    }
  };

  const double h = 1.0 / double(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = double(k) * h;
    if (method == OdeMethod::euler) {
      Array v = eval(snapshot(), t);
      for (size_t i = 0; i < state.size(); ++i) state[i] += h * double(v[i]);
    } else {
      Array v1 = eval(snapshot(), t);
      std::vector<double> saved = state;
      for (size_t i = 0; i < state.size(); ++i) state[i] += 0.5 * h * double(v1[i]);
      Array v2 = eval(snapshot(), t + 0.5 * h);
      for (size_t i = 0; i < state.size(); ++i) state[i] = saved[i] + h * double(v2[i]);
    }
    check(k);
  }
  return snapshot();
}

}  // namespace flowdub::flowmatch
