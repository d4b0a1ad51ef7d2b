// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/mof/mof.hpp"

#include <cmath>
#include <stdexcept>

#include "flowdub/numkit/rng.hpp"

namespace flowdub::mof {

using numkit::Rng;
using numkit::mix_seed;

const char* task_name(Task t) {
  switch (t) {
    case Task::v2a:
      return "v2a";
    case Task::v2s:
      return "v2s";
    case Task::tts:
      return "tts";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  if (name == "v2a") return Task::v2a;
  if (name == "v2s") return Task::v2s;
  if (name == "tts") return Task::tts;
  throw std::invalid_argument("unknown task name: " + name);
}

ParamStore init_gate(uint64_t seed, const std::string& prefix) {
  ParamStore store;
  auto mat = [&](const std::string& name, uint32_t rows, uint32_t cols) {
    Rng rng(mix_seed(seed, name));
    Array w = Array::zeros({rows, cols});
    const double bound = 1.0 / std::sqrt(double(rows));
    numkit::fill_uniform(rng, w, -bound, bound);
    store.insert(name, std::move(w));
  };
  mat(prefix + "/l1/w", condnet::kInstrDim, 32);
  store.insert(prefix + "/l1/b", Array::zeros({32}));
  mat(prefix + "/l2/w", 32, uint32_t(kNumTasks));
  store.insert(prefix + "/l2/b", Array::zeros({uint32_t(kNumTasks)}));
  return store;
}

Tape::Ref gate_logits(Tape& tape, const condnet::Binder& bind, Tape::Ref emb,
                      const std::string& prefix) {
  Tape::Ref h = tape.tanh_(tape.affine(emb, bind(tape, prefix + "/l1/w"), bind(tape, prefix + "/l1/b")));
  return tape.affine(h, bind(tape, prefix + "/l2/w"), bind(tape, prefix + "/l2/b"));
}

GateDecision gate_probs(const ParamStore& gate, const Array& instr_emb, const std::string& prefix) {
  if (instr_emb.rank() != 2 || instr_emb.rows() != 1 || instr_emb.cols() != condnet::kInstrDim) {
    throw std::invalid_argument("gate_probs: expected a [1 x 64] instruction embedding");
  }
  Tape tape;
  Tape::Ref emb = tape.input(instr_emb);
  Tape::Ref probs = tape.softmax(gate_logits(tape, condnet::input_binder(gate), emb, prefix));
  const Array& p = tape.value(probs);
  GateDecision d;
  int best = 0;
  for (int k = 0; k < kNumTasks; ++k) {
    d.probs[size_t(k)] = double(p[size_t(k)]);
    if (d.probs[size_t(k)] > d.probs[size_t(best)]) best = k;  // lowest index wins ties
  }
  d.route = Task(best);
  return d;
}

AudioKnowledge route(const GateDecision& decision, const std::vector<float>* v2a_feature,
                     RouteMode mode, size_t empty_width) {
  double g_v2s = decision.probs[size_t(Task::v2s)];
  double g_tts = decision.probs[size_t(Task::tts)];
  if (mode == RouteMode::hard) {
    g_v2s = decision.route == Task::v2s ? 1.0 : 0.0;
    g_tts = decision.route == Task::tts ? 1.0 : 0.0;
  }
  AudioKnowledge out;
  if (g_v2s > 0.0) {
    if (v2a_feature == nullptr || v2a_feature->empty()) {
      throw std::invalid_argument("route: v2a feature required while G_v2s > 0");
    }
    out.feature.resize(v2a_feature->size());
    if (g_v2s == 1.0) {
      out.feature = *v2a_feature;  // bitwise pass-through at the hard v2s route
    } else {
      for (size_t i = 0; i < out.feature.size(); ++i) {
        out.feature[i] = float(g_v2s * double((*v2a_feature)[i]));
      }
    }
    out.is_empty = false;
    return out;
  }
  // G_tts * empty feature (or a fully inactive fusion) stays empty.
  (void)g_tts;
  const size_t width = v2a_feature != nullptr ? v2a_feature->size() : empty_width;
  out.feature.assign(width, 0.0f);
  out.is_empty = true;
  return out;
}

double gating_loss(const std::vector<std::array<double, 3>>& probs, const std::vector<int>& labels,
                   bool* clamped) {
  if (probs.empty() || probs.size() != labels.size()) {
    throw std::invalid_argument("gating_loss: batch size mismatch");
  }
  if (clamped != nullptr) *clamped = false;
  double acc = 0.0;
  for (size_t n = 0; n < probs.size(); ++n) {
    const int label = labels[n];
    if (label < 0 || label >= kNumTasks) throw std::invalid_argument("gating_loss: bad label");
    double p = probs[n][size_t(label)];
    if (p < 1e-12) {
      p = 1e-12;
      if (clamped != nullptr) *clamped = true;
    }
    acc -= std::log(p);
  }
  return acc / double(probs.size());
}

}  // namespace flowdub::mof
