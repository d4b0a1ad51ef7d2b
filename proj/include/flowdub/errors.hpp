// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace flowdub {

// Caller-facing input problems (missing inputs for a route, bad flags);
// the CLI maps these to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated run preconditions (stage ordering, missing artifacts) and
// training failures; the CLI maps these to exit code 2.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
  uint32_t step;
  TrainingDiverged(uint32_t step_index, const std::string& what)
      : std::runtime_error("training diverged at step " + std::to_string(step_index) + ": " + what),
        step(step_index) {}
};

}  // namespace flowdub
