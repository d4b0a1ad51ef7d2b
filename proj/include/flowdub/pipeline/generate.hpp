// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "flowdub/dsp/spectral.hpp"
#include "flowdub/mof/mof.hpp"
#include "flowdub/pipeline/bundle.hpp"
#include "flowdub/pipeline/config.hpp"

namespace flowdub::pipeline {

struct GenerationRequest {
  std::string instruction;
  std::optional<numkit::Array> video_track;  // T_v x 4 control track
  std::optional<std::string> transcript;
  std::optional<dsp::Waveform> prompt;
  GenOptions opts;
};

// Module-activation counters per request; the routing invariants are
// asserted against these (v2a route activates only the V2A net, tts only
// the TTS net plus the fusion, v2s all three).
struct ActivationCounters {
  uint32_t gate_evals = 0;
  uint32_t mof_fusions = 0;
  uint32_t v2a_forwards = 0;
  uint32_t tts_forwards = 0;
};

struct GenerationResult {
  dsp::Waveform wav;
  dsp::MelSpec mel;  // mel of the route's final output
  mof::GateDecision gate;
  mof::Task route = mof::Task::v2a;
  ActivationCounters counters;
  nlohmann::ordered_json audit;
};

// Unified entry point: the MoF router picks the task from the instruction,
// validates that the routed inputs are present (UsageError naming the
// missing input otherwise), and runs the task's module chain. For v2s the
// V2A module samples first; the energy contour of its output is fused by
// MoF and injected into the TTS condition.
GenerationResult generate(const ModelBundle& bundle, const GenerationRequest& request);

}  // namespace flowdub::pipeline
