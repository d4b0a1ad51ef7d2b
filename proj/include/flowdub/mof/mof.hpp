// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "flowdub/condnet/condnet.hpp"
#include "flowdub/numkit/optim.hpp"
#include "flowdub/numkit/tape.hpp"

namespace flowdub::mof {

using numkit::Array;
using numkit::ParamStore;
using numkit::Tape;

// Task routes, in probability-vector order.
enum class Task : int { v2a = 0, v2s = 1, tts = 2 };
constexpr int kNumTasks = 3;
const char* task_name(Task t);
Task task_from_name(const std::string& name);  // throws on unknown

// Softmax probabilities over the three tasks plus the argmax route
// (lowest index wins ties).
struct GateDecision {
  std::array<double, 3> probs{};
  Task route = Task::v2a;
};

// Either a V2A-derived per-frame feature or the empty feature (all zeros).
struct AudioKnowledge {
  std::vector<float> feature;
  bool is_empty = true;  // empty feature: the TTS route carries no audio knowledge
};

ParamStore init_gate(uint64_t seed, const std::string& prefix = "mof");

// Two-layer perceptron 64 -> 32 -> 3 with softmax output (inference path).
GateDecision gate_probs(const ParamStore& gate, const Array& instr_emb,
                        const std::string& prefix = "mof");

// Training graph: instruction embeddings [N x 64] -> logits [N x 3].
Tape::Ref gate_logits(Tape& tape, const condnet::Binder& bind, Tape::Ref emb,
                      const std::string& prefix = "mof");

enum class RouteMode { soft, hard };

// Gated fusion over the two speech-producing routes:
//   out = G_v2s * v2a_feature + G_tts * empty.
// Hard mode uses one-hot weights from the argmax route. A missing
// v2a_feature while G_v2s > 0 is an error; zero-weight fusion yields the
// empty feature of the given width.
AudioKnowledge route(const GateDecision& decision, const std::vector<float>* v2a_feature,
                     RouteMode mode, size_t empty_width = 0);

// Multi-class cross-entropy over given probabilities. Probabilities at the
// true class below 1e-12 are clamped and reported through `clamped`.
double gating_loss(const std::vector<std::array<double, 3>>& probs, const std::vector<int>& labels,
                   bool* clamped = nullptr);

}  // namespace flowdub::mof
