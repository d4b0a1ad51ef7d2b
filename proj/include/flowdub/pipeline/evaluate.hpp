// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowdub/pipeline/bundle.hpp"
#include "flowdub/pipeline/config.hpp"
#include "flowdub/synthdata/synthdata.hpp"

namespace flowdub::pipeline {

struct EvalOptions {
  uint64_t seed = 42;
  int max_threads = 0;  // 0: min(hardware, 8); FLOWDUB_THREADS caps it
  GenOptions gen;
};

struct ClipScore {
  uint32_t id = 0;
  double mcd = 0.0;
  double mcd_sl = 0.0;
  double energy_corr = 0.0;
  uint32_t frames_ref = 0;
  uint32_t frames_gen = 0;
};

struct EvalReport {
  // "v2s" for a stage-4 bundle; "tts-zeroshot" for a pre-stage-4 bundle
  // (the TTS model scored on the V2S task, the no-visual-guidance baseline).
  std::string mode;
  std::vector<ClipScore> lines;
  double mean_mcd = 0.0;
  double mean_mcd_sl = 0.0;
  double mean_energy_corr = 0.0;
};

// Scores the bundle's dubbing output against ground truth over the test
// split. Parallel across clips; per-clip seeds make the report independent
// of the thread count.
EvalReport evaluate_bundle(const ModelBundle& bundle, const synthdata::Manifest& manifest,
                           const std::filesystem::path& corpus_dir, const EvalOptions& opts);

// JSON-lines report (one object per pair) plus "<path>.summary.json".
void write_report(const std::filesystem::path& path, const EvalReport& report);

}  // namespace flowdub::pipeline
