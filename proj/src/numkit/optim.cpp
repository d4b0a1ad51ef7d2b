// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/numkit/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace flowdub::numkit {

void ParamStore::insert(const std::string& name, Array value) {
  if (entries_.count(name)) {
    throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  }
  Entry e;
  e.m = Array::zeros(value.shape());
  e.v = Array::zeros(value.shape());
  e.value = std::move(value);
  entries_.emplace(name, std::move(e));
}

void ParamStore::insert_with_state(const std::string& name, Array value, Array m, Array v) {
  if (!m.same_shape(value) || !v.same_shape(value)) {
    throw std::invalid_argument("ParamStore: moment shape mismatch for " + name);
  }
  if (entries_.count(name)) {
    throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  }
  entries_.emplace(name, Entry{std::move(value), std::move(m), std::move(v)});
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::invalid_argument("ParamStore: unknown parameter " + name);
  }
  return it->second;
}

const Array& ParamStore::value(const std::string& name) const { return entry(name).value; }

Array& ParamStore::value(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw std::invalid_argument("ParamStore: unknown parameter " + name);
  }
  return it->second.value;
}

const Array& ParamStore::moment_m(const std::string& name) const { return entry(name).m; }
const Array& ParamStore::moment_v(const std::string& name) const { return entry(name).v; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

double global_norm(const GradMap& grads) {
  double acc = 0.0;
  for (const auto& [name, g] : grads) {
    g.require_finite("gradient " + name);
    acc += sum_squares(g);
  }
  return std::sqrt(acc);
}

void clip_global_norm(GradMap& grads, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("clip_global_norm: max_norm must be > 0");
  const double norm = global_norm(grads);
  // Snap tolerance keeps clip(clip(g)) bitwise equal to clip(g).
  if (norm <= max_norm * (1.0 + 1e-6)) return;
  const double scale = max_norm / norm;
  for (auto& [name, g] : grads) {
    for (size_t i = 0; i < g.numel(); ++i) g[i] = float(double(g[i]) * scale);
  }
}

void adam_step(ParamStore& params, const GradMap& grads, double lr, const AdamConfig& cfg) {
  params.step_ += 1;
  const double t = double(params.step_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    auto it = params.entries_.find(name);
    if (it == params.entries_.end()) {
      throw std::invalid_argument("adam_step: gradient for unknown parameter " + name);
    }
    auto& e = it->second;
    if (!g.same_shape(e.value)) {
      throw std::invalid_argument("adam_step: shape mismatch for " + name);
    }
    for (size_t i = 0; i < g.numel(); ++i) {
      const double gi = double(g[i]);
      const double m = cfg.beta1 * double(e.m[i]) + (1.0 - cfg.beta1) * gi;
      const double v = cfg.beta2 * double(e.v[i]) + (1.0 - cfg.beta2) * gi * gi;
      e.m[i] = float(m);
      e.v[i] = float(v);
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      const double p = double(e.value[i]);
      e.value[i] = float(p - lr * (mhat / (std::sqrt(vhat) + cfg.eps)) - lr * cfg.weight_decay * p);
    }
  }
}

}  // namespace flowdub::numkit
