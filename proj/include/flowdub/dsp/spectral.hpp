// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <filesystem>
#include <vector>

#include "flowdub/dsp/wav.hpp"
#include "flowdub/numkit/array.hpp"

namespace flowdub::dsp {

using numkit::Array;

constexpr uint32_t kNFft = 1024;
constexpr uint32_t kWin = 1024;
constexpr uint32_t kHop = 256;
constexpr uint32_t kMelBins = 80;
constexpr double kFMin = 0.0;
constexpr double kFMax = 8000.0;
constexpr double kMelFloor = 1e-5;

// Center-free framing: frame t covers samples [t*hop, t*hop + win).
inline uint32_t frame_count(size_t samples, uint32_t win, uint32_t hop) {
  return uint32_t(1 + (samples - win) / hop);
}

// Complex STFT held in float64; frames x (n_fft/2 + 1) bins.
struct Spectrogram {
  uint32_t frames = 0;
  uint32_t bins = 0;
  std::vector<std::complex<double>> data;  // row-major

  std::complex<double>& at(uint32_t t, uint32_t f) { return data[size_t(t) * bins + f]; }
  std::complex<double> at(uint32_t t, uint32_t f) const { return data[size_t(t) * bins + f]; }
};

// Log-mel magnitudes, frames x kMelBins, natural log, floored at kMelFloor.
struct MelSpec {
  Array frames;  // [T x 80] float32
  uint32_t hop_length = kHop;
  uint32_t win_length = kWin;

  uint32_t frame_count() const { return frames.rows(); }
};

// Per-frame RMS, min-max normalized to [0,1] per utterance (an all-equal
// contour maps to all zeros).
struct EnergyContour {
  std::vector<float> values;
  size_t size() const { return values.size(); }
};

Spectrogram stft(const Waveform& w, uint32_t win, uint32_t hop);
Array magnitudes(const Spectrogram& s);  // [T x bins] float32

// Least-squares inverse STFT (Hann-weighted overlap-add). A coverage floor
// above 1e-10 attenuates edge samples whose summed squared window weight is
// smaller than the floor instead of amplifying them.
Waveform istft_lse(const Spectrogram& s, uint32_t win, uint32_t hop, size_t out_samples,
                   double coverage_floor = 1e-10);

// 80-row triangular filterbank on FFT bin frequencies, each row normalized
// to sum 1. Shared immutable instance for the fixed config.
const Array& mel_filterbank();
// Center frequencies of the mel filters, Hz.
const std::vector<double>& mel_center_frequencies();

MelSpec mel_spectrogram(const Waveform& w);
EnergyContour energy_contour(const Waveform& w, uint32_t win, uint32_t hop);

struct GriffinLimResult {
  Waveform wav;
  // Spectral-convergence residual after each iteration, non-increasing.
  std::vector<double> residuals;
};

// Mel -> linear magnitude via clamped pseudo-inverse of the filterbank,
// then classic Griffin-Lim phase estimation (zero-phase init).
GriffinLimResult griffin_lim(const MelSpec& m, int iters);

// MelSpec file: magic "FDMS", u32 T, u32 B, f32 payload row-major.
void save_melspec(const std::filesystem::path& path, const MelSpec& m);
MelSpec load_melspec(const std::filesystem::path& path);

// Internal FFT, exposed for tests. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace flowdub::dsp
