// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowdub/dsp/spectral.hpp"
#include "flowdub/numkit/optim.hpp"
#include "flowdub/numkit/tape.hpp"

namespace flowdub::condnet {

using numkit::Array;
using numkit::ParamStore;
using numkit::Tape;

constexpr uint32_t kCondDim = 64;
constexpr uint32_t kInstrBuckets = 256;
constexpr uint32_t kInstrDim = 64;
constexpr uint32_t kTimeDim = 16;
constexpr double kVideoFps = 25.0;

// Transcript vocabulary: tones A..H plus silence '_' (also the padding
// filler).
constexpr const char* kVocabulary = "ABCDEFGH_";
constexpr char kFiller = '_';
int token_index(char token);  // throws on unknown token

// Conditioning sources for one sample, every per-frame sequence aligned to
// the mel frame count. An absent source means "dropped": the field net
// substitutes its learned null embedding, so a Condition with every source
// absent is the fully unconditional input.
struct Condition {
  uint32_t frames = 0;
  std::optional<Array> video_emb;   // [T x 64]
  std::optional<Array> text_emb;    // [T x 64]
  std::optional<Array> prompt_emb;  // [1 x 64]
  std::optional<std::vector<float>> energy;  // [T], values in [0,1]

  static Condition all_null(uint32_t frames) {
    Condition c;
    c.frames = frames;
    return c;
  }
  bool fully_unconditional() const {
    return !video_emb && !text_emb && !prompt_emb && !energy;
  }
};

// Fixed (never trained) featurizers. All the learning happens downstream in
// the field nets and the gating MLP; a deterministic projection in front of
// a trainable first layer loses no expressiveness at these widths.
struct EncoderSet {
  Array video_w, video_b;    // 4 x 64, 64
  Array token_table;         // 9 x 64
  Array prompt_w, prompt_b;  // 80 x 64, 64
  Array instr_w, instr_b;    // 256 x 64, 64

  static EncoderSet init(uint64_t seed);
  std::map<std::string, Array> to_map() const;
  static EncoderSet from_map(const std::map<std::string, Array>& m);
};

// Video control track (T_v x K) -> per-mel-frame embedding, linear
// resampling in index space followed by affine + tanh.
Array encode_video(const EncoderSet& enc, const Array& track, uint32_t target_frames);

// Tokens embedded per frame, right-padded with the filler to target_frames.
Array encode_text(const EncoderSet& enc, const std::string& transcript, uint32_t target_frames);

// Bag-of-words hashing encoder: lowercase, whitespace-tokenize, hash into
// 256 buckets, average the bucket one-hots, affine-project to 64 dims.
Array encode_instruction(const EncoderSet& enc, const std::string& instruction);

// Mel spectrogram -> temporal mean-pool -> affine projection.
Array encode_prompt(const EncoderSet& enc, const dsp::Waveform& prompt);

// Appends an energy contour as one conditioning channel per frame,
// linearly resampling when the contour length differs from the frame count.
Condition inject_energy(Condition cond, const dsp::EnergyContour& e);
std::vector<float> resample_linear(const std::vector<float>& values, uint32_t target_len);

// Conditioned vector-field predictor: per-source input projections summed
// into a hidden state, N residual blocks with a gated (tanh * sigmoid)
// nonlinearity, output projection back to mel bins. Dropped sources enter
// through learned null embeddings broadcast across frames.
struct FieldNetConfig {
  uint32_t mel_bins = 80;
  uint32_t hidden = 64;
  uint32_t blocks = 4;
  uint32_t time_dim = kTimeDim;
  uint32_t cond_dim = kCondDim;
};

// Resolves a parameter name to a tape node; one binder per tape.
using Binder = std::function<Tape::Ref(Tape&, const std::string&)>;

// Binder over trainable parameters (registers tape params, caches refs).
Binder param_binder(const ParamStore& store);
// Binder that feeds values as plain inputs (inference, frozen nets).
Binder input_binder(const ParamStore& store);

ParamStore init_field_net(uint64_t seed, const FieldNetConfig& cfg, const std::string& prefix);
std::vector<std::string> field_net_param_names(const FieldNetConfig& cfg, const std::string& prefix);

Tape::Ref field_forward(Tape& tape, const Binder& bind, const FieldNetConfig& cfg,
                        const std::string& prefix, Tape::Ref x_t, double t, const Condition& cond);

// Convenience single-shot forward (builds a private tape).
Array field_forward_value(const ParamStore& params, const FieldNetConfig& cfg,
                          const std::string& prefix, const Array& x_t, double t,
                          const Condition& cond);

std::vector<float> time_embedding(double t, uint32_t dim);

}  // namespace flowdub::condnet
