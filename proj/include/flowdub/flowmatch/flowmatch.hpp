// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "flowdub/numkit/array.hpp"
#include "flowdub/numkit/rng.hpp"
#include "flowdub/numkit/tape.hpp"

namespace flowdub::flowmatch {

using numkit::Array;
using numkit::Rng;
using numkit::Tape;

// One conditional-flow training point on the straight optimal-transport
// path: x_t = (1-t) x0 + t x1, u_t = x1 - x0 (sigma_min = 0, so the path
// interpolates exactly to the data).
struct FlowSample {
  Array x0, x1, x_t, u_t;
  double t = 0.0;
};

FlowSample sample_ot_path(const Array& x0, const Array& x1, double t);

struct GuidanceSpec {
  double scale = 2.0;             // w; 1 means the guided field equals the conditional field
  double drop_probability = 0.0;  // training-time conditioning dropout
};

// Classifier-free guidance combination: v_uncond + w * (v_cond - v_uncond).
Array cfg_combine(const Array& v_cond, const Array& v_uncond, double w);

// Training-side field callable. Called exactly once per batch element, in
// batch order; `index` identifies the element so callers can attach
// per-sample conditions (and oracles can look up their targets).
using TapeField = std::function<Tape::Ref(Tape&, Tape::Ref x_t, double t, size_t index)>;

// Conditional flow-matching loss over a batch: per sample, x0 is standard
// normal per element and t uniform on (0,1); the result is the mean over
// the batch of per-sample mean squared error between the predicted field
// and u_t. Returns the scalar loss node (call tape.backward on it to train).
Tape::Ref cfm_loss(Tape& tape, const TapeField& field, const std::vector<Array>& x1_batch,
                   Rng& rng);

enum class OdeMethod { euler, midpoint };

// Sampling-side field callable; `conditional` false requests the
// unconditional (all sources dropped) prediction used by guidance.
using SampleField = std::function<Array(const Array& x, double t, bool conditional)>;

// Integrates dx/dt = v(x, t) from t=0 to t=1 on a uniform grid. The state
// is accumulated in float64; non-finite states abort with the step index.
Array ode_sample(const SampleField& field, const Array& x0, int steps, OdeMethod method,
                 const GuidanceSpec& guidance);

}  // namespace flowdub::flowmatch
