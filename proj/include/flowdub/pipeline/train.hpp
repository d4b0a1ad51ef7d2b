// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowdub/numkit/rng.hpp"
#include "flowdub/pipeline/bundle.hpp"
#include "flowdub/pipeline/config.hpp"
#include "flowdub/synthdata/synthdata.hpp"

namespace flowdub::pipeline {

struct TrainResult {
  int stage = 0;
  uint32_t steps_run = 0;
  double initial_loss = 0.0;        // mean loss over the first 50 steps
  double final_loss = 0.0;          // mean loss over the last 50 steps
  double heldout_accuracy = -1.0;   // stage 3 only
  std::vector<double> loss_curve;   // one entry per optimizer step
  std::filesystem::path checkpoint;
};

// Runs one training stage against the corpus under `manifest_path`'s
// directory, updating the bundle at `out_dir` in place. Stage N requires
// the stage N-1 artifacts (except stage 3, which needs only stage 1);
// violations raise PreconditionError. With `resume`, training continues
// from the stored step counter without reinitializing Adam moments.
TrainResult train_stage(const StageConfig& cfg, const std::filesystem::path& manifest_path,
                        const std::filesystem::path& out_dir, bool resume = false);

// Per-source conditioning drops for one stage-4 sample. Exposed so the
// empirical drop frequency is testable against the configured probability.
struct DropMask {
  bool mof_feature = false;
  bool transcript = false;
  bool prompt = false;
};
DropMask draw_drop_mask(numkit::Rng& rng, double p);

// Per-clip features the trainers consume (latent mel plus conditioning).
struct ClipFeatures {
  uint32_t frames = 0;
  numkit::Array latent;     // [T x 80]
  numkit::Array video_emb;  // [T x 64]
  numkit::Array text_emb;   // [T x 64]
  numkit::Array prompt_emb; // [1 x 64]
  std::vector<float> energy;  // [T], ground-truth contour
};

ClipFeatures load_clip_features(const condnet::EncoderSet& enc,
                                const std::filesystem::path& corpus_dir,
                                const synthdata::Manifest& manifest,
                                const synthdata::ManifestEntry& entry);

}  // namespace flowdub::pipeline
