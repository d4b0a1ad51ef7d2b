// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "flowdub/dsp/spectral.hpp"
#include "flowdub/dsp/wav.hpp"
#include "flowdub/numkit/rng.hpp"
#include "support/oracles.hpp"

using namespace flowdub;
using dsp::Waveform;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

Waveform sine(double freq, double seconds, double amplitude) {
  Waveform w;
  const auto n = size_t(std::llround(seconds * dsp::kSampleRate));
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    w.samples[i] = float(amplitude * std::sin(2.0 * kPi * freq * double(i) / dsp::kSampleRate));
  }
  return w;
}

}  // namespace

TEST_CASE("fft matches the reference DFT") {
  numkit::Rng rng(3);
  std::vector<double> x(256);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  std::vector<std::complex<double>> buf(x.size());
  for (size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  dsp::fft_inplace(buf, false);
  auto ref = testing::reference_dft(x);
  for (size_t k = 0; k < x.size(); ++k) {
    CHECK(std::abs(buf[k] - ref[k]) < 1e-9);
  }
}

TEST_CASE("stft: all-zero input gives all-zero magnitudes") {
  Waveform w;
  w.samples.assign(4096, 0.0f);
  auto s = dsp::stft(w, dsp::kWin, dsp::kHop);
  for (const auto& c : s.data) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("stft: input shorter than one window is an error") {
  Waveform w;
  w.samples.assign(512, 0.0f);
  CHECK_THROWS_AS(dsp::stft(w, dsp::kWin, dsp::kHop), std::invalid_argument);
}

TEST_CASE("stft: bin-center sine concentrates in one bin") {
  // Bin 32 of a 1024-point FFT at 16 kHz is exactly 500 Hz.
  const double freq = 32.0 * dsp::kSampleRate / dsp::kNFft;
  Waveform w = sine(freq, 0.5, 0.8);
  auto s = dsp::stft(w, dsp::kWin, dsp::kHop);
  for (uint32_t t = 0; t < s.frames; ++t) {
    uint32_t argmax = 0;
    double peak = 0.0;
    for (uint32_t f = 0; f < s.bins; ++f) {
      const double m = std::abs(s.at(t, f));
      if (m > peak) {
        peak = m;
        argmax = f;
      }
    }
    CHECK(argmax == 32);
    // With a Hann window only the two mainlobe neighbours carry energy;
    // everything two or more bins away stays under 1% of the peak.
    for (uint32_t f = 0; f < s.bins; ++f) {
      if (f + 2 <= argmax || f >= argmax + 2) {
        CHECK(std::abs(s.at(t, f)) < 0.01 * peak);
      }
    }
  }
}

TEST_CASE("stft frames match a reference DFT of the windowed frame") {
  numkit::Rng rng(17);
  Waveform w;
  w.samples.resize(2048);
  for (auto& v : w.samples) v = float(rng.uniform(-0.9, 0.9));
  auto s = dsp::stft(w, dsp::kWin, dsp::kHop);
  // Oracle: direct O(n^2) DFT of the Hann-windowed samples of frame 2.
  const uint32_t t = 2;
  std::vector<double> frame(dsp::kWin);
  for (uint32_t i = 0; i < dsp::kWin; ++i) {
    const double win = 0.5 - 0.5 * std::cos(2.0 * kPi * double(i) / double(dsp::kWin));
    frame[i] = double(w.samples[size_t(t) * dsp::kHop + i]) * win;
  }
  auto ref = testing::reference_dft(frame);
  for (uint32_t f = 0; f < s.bins; ++f) {
    CHECK(std::abs(s.at(t, f) - ref[f]) < 1e-6);
  }
}

TEST_CASE("stft Parseval: full-spectrum energy equals N x windowed energy") {
  numkit::Rng rng(11);
  Waveform w;
  w.samples.resize(3000);
  for (auto& v : w.samples) v = float(rng.uniform(-0.9, 0.9));
  auto s = dsp::stft(w, dsp::kWin, dsp::kHop);
  for (uint32_t t = 0; t < s.frames; ++t) {
    double spec = std::norm(s.at(t, 0)) + std::norm(s.at(t, s.bins - 1));
    for (uint32_t f = 1; f + 1 < s.bins; ++f) spec += 2.0 * std::norm(s.at(t, f));
    double time = 0.0;
    for (uint32_t i = 0; i < dsp::kWin; ++i) {
      const double win = 0.5 - 0.5 * std::cos(2.0 * kPi * double(i) / double(dsp::kWin));
      const double v = double(w.samples[size_t(t) * dsp::kHop + i]) * win;
      time += v * v;
    }
    CHECK(spec == doctest::Approx(double(dsp::kWin) * time).epsilon(1e-5));
  }
}

TEST_CASE("mel filterbank rows sum to one") {
  const auto& fb = dsp::mel_filterbank();
  REQUIRE(fb.rows() == 80);
  for (uint32_t j = 0; j < fb.rows(); ++j) {
    double sum = 0.0;
    for (uint32_t f = 0; f < fb.cols(); ++f) sum += double(fb.at(j, f));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("mel_spectrogram: silence hits the log floor everywhere") {
  Waveform w;
  w.samples.assign(4096, 0.0f);
  auto m = dsp::mel_spectrogram(w);
  const float floor_log = float(std::log(1e-5));
  for (size_t i = 0; i < m.frames.numel(); ++i) CHECK(m.frames[i] == floor_log);
}

TEST_CASE("mel_spectrogram: 440 Hz sine peaks in the filter containing 440 Hz") {
  Waveform w = sine(440.0, 0.5, 0.7);
  auto m = dsp::mel_spectrogram(w);
  const auto& centers = dsp::mel_center_frequencies();
  for (uint32_t t = 0; t < m.frame_count(); ++t) {
    uint32_t argmax = 0;
    for (uint32_t j = 1; j < 80; ++j) {
      if (m.frames.at(t, j) > m.frames.at(t, argmax)) argmax = j;
    }
    // The winning filter's triangular support (neighbour centre to
    // neighbour centre) must contain 440 Hz.
    const double lo = argmax > 0 ? centers[argmax - 1] : 0.0;
    const double hi = argmax + 1 < centers.size() ? centers[argmax + 1] : 8000.0;
    CHECK(lo < 440.0);
    CHECK(hi > 440.0);
  }
}

TEST_CASE("mel_spectrogram shift covariance at hop granularity") {
  numkit::Rng rng(5);
  Waveform w;
  w.samples.resize(4096);
  for (auto& v : w.samples) v = float(rng.uniform(-0.9, 0.9));
  Waveform shifted;
  shifted.samples.assign(w.samples.begin() + dsp::kHop, w.samples.end());
  auto a = dsp::mel_spectrogram(w);
  auto b = dsp::mel_spectrogram(shifted);
  REQUIRE(b.frame_count() + 1 == a.frame_count());
  for (uint32_t t = 0; t < b.frame_count(); ++t) {
    for (uint32_t j = 0; j < 80; ++j) {
      CHECK(b.frames.at(t, j) == doctest::Approx(a.frames.at(t + 1, j)).epsilon(1e-6));
    }
  }
}

TEST_CASE("energy_contour") {
  SUBCASE("constant sine: interior pre-normalization RMS is A/sqrt(2)") {
    const double amplitude = 0.6;
    Waveform w = sine(500.0, 0.5, amplitude);
    // Oracle: direct per-frame RMS.
    const uint32_t frames = dsp::frame_count(w.samples.size(), dsp::kWin, dsp::kHop);
    for (uint32_t t = 1; t + 1 < frames; ++t) {
      double acc = 0.0;
      for (uint32_t i = 0; i < dsp::kWin; ++i) {
        const double v = double(w.samples[size_t(t) * dsp::kHop + i]);
        acc += v * v;
      }
      CHECK(std::sqrt(acc / dsp::kWin) ==
            doctest::Approx(amplitude / std::sqrt(2.0)).epsilon(1e-3));
    }
    auto e = dsp::energy_contour(w, dsp::kWin, dsp::kHop);
    CHECK(e.size() == frames);
  }
  SUBCASE("silence maps to the zero vector") {
    Waveform w;
    w.samples.assign(4096, 0.0f);
    auto e = dsp::energy_contour(w, dsp::kWin, dsp::kHop);
    for (float v : e.values) CHECK(v == 0.0f);
  }
  SUBCASE("linear amplitude ramp gives a strictly increasing contour") {
    Waveform w;
    const size_t n = 16000;
    w.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double ramp = double(i) / double(n);
      w.samples[i] = float(ramp * 0.9 * std::sin(2.0 * kPi * 500.0 * double(i) / dsp::kSampleRate));
    }
    auto e = dsp::energy_contour(w, dsp::kWin, dsp::kHop);
    for (size_t t = 1; t + 1 < e.size(); ++t) {
      CHECK(e.values[t] < e.values[t + 1]);
    }
  }
  SUBCASE("empty waveform is an error") {
    Waveform w;
    CHECK_THROWS_AS(dsp::energy_contour(w, dsp::kWin, dsp::kHop), std::invalid_argument);
  }
}

TEST_CASE("framing agreement between mel_spectrogram and energy_contour") {
  numkit::Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Waveform w;
    w.samples.resize(1024 + rng.below(20000));
    for (auto& v : w.samples) v = float(rng.uniform(-0.5, 0.5));
    auto m = dsp::mel_spectrogram(w);
    auto e = dsp::energy_contour(w, dsp::kWin, dsp::kHop);
    CHECK(m.frame_count() == e.size());
  }
}

TEST_CASE("griffin_lim") {
  SUBCASE("all-floor mel reconstructs to near silence") {
    dsp::MelSpec m;
    m.frames = numkit::Array::full({20, 80}, float(std::log(1e-5)));
    auto r = dsp::griffin_lim(m, 8);
    double acc = 0.0;
    for (float v : r.wav.samples) acc += double(v) * double(v);
    CHECK(std::sqrt(acc / double(r.wav.samples.size())) < 1e-3);
  }
  SUBCASE("residuals are monotonically non-increasing") {
    Waveform w = sine(440.0, 0.6, 0.6);
    auto m = dsp::mel_spectrogram(w);
    auto r = dsp::griffin_lim(m, 30);
    for (size_t i = 1; i < r.residuals.size(); ++i) {
      CHECK(r.residuals[i] <= r.residuals[i - 1] + 1e-7);
    }
  }
  SUBCASE("spectral convergence on a synthetic tone") {
    Waveform w = sine(440.0, 0.6, 0.6);
    auto m = dsp::mel_spectrogram(w);
    auto r = dsp::griffin_lim(m, 60);
    CHECK(r.residuals.back() <= 0.15);
  }
  SUBCASE("440 Hz sine round-trips to a 440 Hz dominant frequency") {
    Waveform w = sine(440.0, 0.6, 0.6);
    auto m = dsp::mel_spectrogram(w);
    auto r = dsp::griffin_lim(m, 60);
    // FFT peak of a mid-signal window, one-bin tolerance (15.6 Hz).
    REQUIRE(r.wav.samples.size() >= 3 * size_t(dsp::kWin));
    std::vector<std::complex<double>> buf(dsp::kWin);
    for (uint32_t i = 0; i < dsp::kWin; ++i) buf[i] = double(r.wav.samples[dsp::kWin + i]);
    dsp::fft_inplace(buf, false);
    uint32_t argmax = 1;
    for (uint32_t f = 1; f < dsp::kWin / 2; ++f) {
      if (std::abs(buf[f]) > std::abs(buf[argmax])) argmax = f;
    }
    const double peak_freq = double(argmax) * dsp::kSampleRate / double(dsp::kNFft);
    CHECK(std::fabs(peak_freq - 440.0) <= double(dsp::kSampleRate) / double(dsp::kNFft) + 1e-9);
  }
  SUBCASE("iters must be >= 1") {
    dsp::MelSpec m;
    m.frames = numkit::Array::full({4, 80}, -5.0f);
    CHECK_THROWS_AS(dsp::griffin_lim(m, 0), std::invalid_argument);
  }
}

TEST_CASE("wav io round trip") {
  const fs::path dir = fs::temp_directory_path() / "flowdub_dsp_test";
  fs::create_directories(dir);
  Waveform w = sine(440.0, 0.3, 0.5);
  dsp::write_wav(dir / "t.wav", w);
  Waveform r = dsp::read_wav(dir / "t.wav");
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate == w.sample_rate);
  for (size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::fabs(r.samples[i] - w.samples[i]) <= 1.0f / 32767.0f);
  }
  fs::remove_all(dir);
}

TEST_CASE("melspec file round trip") {
  const fs::path dir = fs::temp_directory_path() / "flowdub_dsp_test2";
  fs::create_directories(dir);
  Waveform w = sine(300.0, 0.3, 0.5);
  auto m = dsp::mel_spectrogram(w);
  dsp::save_melspec(dir / "m.fdms", m);
  auto r = dsp::load_melspec(dir / "m.fdms");
  CHECK(numkit::bitwise_equal(r.frames, m.frames));
  fs::remove_all(dir);
}
