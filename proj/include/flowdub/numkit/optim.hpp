// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowdub/numkit/array.hpp"
#include "flowdub/numkit/tape.hpp"

namespace flowdub::numkit {

struct AdamConfig {
  // Defaults are an implementation choice, configurable per stage.
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW); 0 reproduces plain Adam
};

// Named parameters with per-parameter Adam moments and a shared step
// counter. Single writer; the step counter increases by exactly 1 per
// adam_step call.
class ParamStore {
 public:
  void insert(const std::string& name, Array value);
  void insert_with_state(const std::string& name, Array value, Array m, Array v);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Array& value(const std::string& name) const;
  Array& value(const std::string& name);
  const Array& moment_m(const std::string& name) const;
  const Array& moment_v(const std::string& name) const;

  uint64_t step() const { return step_; }
  void set_step(uint64_t s) { step_ = s; }

  std::vector<std::string> names() const;  // sorted
  size_t size() const { return entries_.size(); }

  friend void adam_step(ParamStore&, const GradMap&, double, const AdamConfig&);

 private:
  struct Entry {
    Array value, m, v;
  };
  const Entry& entry(const std::string& name) const;
  std::map<std::string, Entry> entries_;
  uint64_t step_ = 0;
};

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm. Norms within 1e-6 relative of max_norm are left untouched so
// the operation is bitwise idempotent.
void clip_global_norm(GradMap& grads, double max_norm);

double global_norm(const GradMap& grads);

// Standard Adam/AdamW with bias correction; the step counter is incremented
// before correction. Only parameters named in `grads` are updated.
void adam_step(ParamStore& params, const GradMap& grads, double lr, const AdamConfig& cfg);

}  // namespace flowdub::numkit
