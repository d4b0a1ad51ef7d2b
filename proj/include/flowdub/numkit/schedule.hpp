// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>

namespace flowdub::numkit {

// Piecewise-linear learning-rate schedule: 0 -> peak over warmup_steps,
// then peak -> final over the remaining steps. Continuous, peaks exactly
// at warmup_steps. clip_norm rides along because every stage that owns a
// schedule also owns a gradient clip.
struct Schedule {
  double peak_lr = 1e-4;
  double final_lr = 1e-6;
  uint32_t warmup_steps = 1000;
  uint32_t total_steps = 2000;
  double clip_norm = 0.2;

  void validate() const {
    if (peak_lr <= 0.0) throw std::invalid_argument("Schedule: peak_lr must be > 0");
    if (final_lr < 0.0) throw std::invalid_argument("Schedule: final_lr must be >= 0");
    if (total_steps <= warmup_steps) {
      throw std::invalid_argument("Schedule: total_steps must exceed warmup_steps");
    }
    if (clip_norm <= 0.0) throw std::invalid_argument("Schedule: clip_norm must be > 0");
  }
};

inline double lr_at_step(const Schedule& sched, uint32_t step) {
  sched.validate();
  if (step > sched.total_steps) {
    throw std::out_of_range("lr_at_step: step out of range");
  }
  if (step <= sched.warmup_steps) {
    if (sched.warmup_steps == 0) return sched.peak_lr;
    return sched.peak_lr * double(step) / double(sched.warmup_steps);
  }
  const double frac = double(step - sched.warmup_steps) / double(sched.total_steps - sched.warmup_steps);
  return sched.peak_lr + (sched.final_lr - sched.peak_lr) * frac;
}

}  // namespace flowdub::numkit
