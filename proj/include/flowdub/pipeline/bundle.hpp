// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "flowdub/condnet/condnet.hpp"
#include "flowdub/numkit/checkpoint.hpp"
#include "flowdub/numkit/optim.hpp"

namespace flowdub::pipeline {

// All model state under one directory:
//   encoders.fdck  fixed featurizers
//   v2a.fdck       V2A field net (+ Adam moments, step)
//   tts.fdck       TTS field net (stage 2, finetuned in place by stage 4)
//   mof.fdck       gating MLP
//   meta.json      stage provenance, seeds, config hashes
// Loading a bundle restores bitwise-identical inference outputs.
class ModelBundle {
 public:
  static constexpr const char* kEncodersFile = "encoders.fdck";
  static constexpr const char* kV2aFile = "v2a.fdck";
  static constexpr const char* kTtsFile = "tts.fdck";
  static constexpr const char* kMofFile = "mof.fdck";
  static constexpr const char* kMetaFile = "meta.json";

  struct StageRecord {
    bool completed = false;
    uint32_t updates = 0;
    uint64_t config_hash = 0;
  };

  std::filesystem::path dir;
  uint64_t seed = 42;
  condnet::EncoderSet encoders;
  std::optional<numkit::ParamStore> v2a;
  std::optional<numkit::ParamStore> tts;
  std::optional<numkit::ParamStore> mof_gate;
  std::map<int, StageRecord> stages;

  bool stage_done(int stage) const {
    auto it = stages.find(stage);
    return it != stages.end() && it->second.completed;
  }

  // Loads whatever exists under `dir`; `dir` must contain meta.json.
  static ModelBundle load(const std::filesystem::path& dir);
  // Creates a fresh bundle directory with encoders derived from `seed`.
  static ModelBundle create(const std::filesystem::path& dir, uint64_t seed);

  void save_meta() const;
  void save_module(int stage) const;  // writes the module file a stage owns

  condnet::FieldNetConfig field_config() const { return condnet::FieldNetConfig{}; }
};

}  // namespace flowdub::pipeline
