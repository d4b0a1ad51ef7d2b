// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace flowdub::dsp {

constexpr uint32_t kSampleRate = 16000;

// Mono PCM audio in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  uint32_t sample_rate = kSampleRate;

  double duration() const { return double(samples.size()) / double(sample_rate); }
  void validate() const;  // finite, |s| <= 1 + 1e-6
};

// PCM16 mono RIFF.
void write_wav(const std::filesystem::path& path, const Waveform& w);
Waveform read_wav(const std::filesystem::path& path);

}  // namespace flowdub::dsp
