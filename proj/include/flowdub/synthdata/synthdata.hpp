// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdub/dsp/wav.hpp"
#include "flowdub/numkit/array.hpp"

namespace flowdub::synthdata {

using numkit::Array;

constexpr int kNumSpeakers = 4;
constexpr int kNumTones = 8;
constexpr double kVideoFps = 25.0;

// Base frequency of tone token 'A' + k quarter-octaves.
double token_frequency(int tone_index);
// Per-speaker harmonic amplitude profiles (4 harmonics, sum 1).
const std::array<std::array<double, 4>, kNumSpeakers>& speaker_timbres();

// One synthetic audiovisual sample. The waveform is a sum of harmonics
// whose amplitude envelope equals the video track's amplitude dimension,
// and transcript tokens map bijectively to per-segment base frequencies
// (equal-duration segments).
struct ClipSpec {
  double duration = 1.0;  // seconds, [0.5, 2.0]
  int speaker = 0;
  std::string transcript;  // tokens over A..H and '_' (silence)
};

struct SynClip {
  uint32_t id = 0;
  Array video_track;  // T_v x 4: amplitude, base-frequency index, timbre id, onset
  dsp::Waveform wav;
  std::string transcript;
  int speaker = 0;
  double duration = 0.0;
};

SynClip make_clip(uint64_t seed, const ClipSpec& spec);

// Fixed per-speaker reference audio used as the speaker prompt.
dsp::Waveform speaker_reference(int speaker);

struct ManifestEntry {
  uint32_t id = 0;
  std::string wav_path;
  std::string track_path;
  std::string transcript;
  int speaker = 0;
  std::string split;  // train | val | test
  double duration = 0.0;
};

struct Manifest {
  uint64_t corpus_seed = 0;
  std::vector<ManifestEntry> clips;
  std::array<std::string, kNumSpeakers> speaker_refs;
  std::string instructions_train = "instructions_train.jsonl";
  std::string instructions_heldout = "instructions_heldout.jsonl";

  std::vector<const ManifestEntry*> split_entries(const std::string& split) const;
};

// Generates clips, per-speaker references, the labeled instruction files,
// and the manifest, all under out_dir. 80/10/10 split by id. Regeneration
// from the same seed reproduces byte-identical files.
Manifest make_corpus(uint64_t seed, uint32_t n_clips, const std::filesystem::path& out_dir);

void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

// Video track file: magic "FDVT", u32 T_v, u32 K, f32 payload.
void save_video_track(const std::filesystem::path& path, const Array& track);
Array load_video_track(const std::filesystem::path& path);

struct LabeledInstruction {
  std::string text;
  int label = 0;  // mof::Task order: v2a=0, v2s=1, tts=2
};

struct InstructionSet {
  std::vector<LabeledInstruction> train;    // 100
  std::vector<LabeledInstruction> heldout;  // 20, disjoint templates
};

// 3 task families x 40 paraphrase templates; the seed picks which
// templates are held out (balanced across families).
InstructionSet make_instruction_set(uint64_t seed);

// Canonical instruction per task (members of the template set).
const char* canonical_instruction(int label);

void save_instructions(const std::filesystem::path& path, const std::vector<LabeledInstruction>& set);
std::vector<LabeledInstruction> load_instructions(const std::filesystem::path& path);

}  // namespace flowdub::synthdata
