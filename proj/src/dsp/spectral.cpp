// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/dsp/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace flowdub::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> hann_window(uint32_t n) {
  std::vector<double> w(n);
  for (uint32_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * double(i) / double(n));
  }
  return w;
}

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Mel power -> linear power by non-negative least squares against the
// filterbank. The NNLS runs over a dictionary of Hann-mainlobe power
// kernels at integer and half-bin centers rather than raw bins: basic NNLS
// solutions are sparse, so the reconstructed spectrum becomes a comb of
// realizable tone mainlobes instead of the min-norm triangle smear (which
// stalls Griffin-Lim around 0.2 spectral convergence).
struct MelInversion {
  static constexpr uint32_t kShifts = 4;  // sub-bin centers at 0, 1/4, 1/2, 3/4
  uint32_t bins = 0;                      // 513
  uint32_t columns = 0;                   // kShifts * bins
  int kernel_halfwidth = 2;
  std::vector<double> kernels;  // [kShifts][2*halfwidth+1] power profiles, peak-normalized
  std::vector<double> a;        // FB * K dictionary, [80 x columns]

  // Kernel column c: base bin c / kShifts, sub-bin shift (c % kShifts) / kShifts.
  double kernel_at(uint32_t column, int bin) const {
    const int shift = int(column % kShifts);
    const int center = int(column / kShifts);
    const int off = bin - center;
    const int k = off + kernel_halfwidth;
    if (k < 0 || k > 2 * kernel_halfwidth) return 0.0;
    return kernels[size_t(shift) * (2 * size_t(kernel_halfwidth) + 1) + size_t(k)];
  }
};

const MelInversion& mel_inversion() {
  static const MelInversion inv = [] {
    const Array& fb = mel_filterbank();
    MelInversion out;
    out.bins = fb.cols();
    out.columns = MelInversion::kShifts * out.bins;
    const int hw = out.kernel_halfwidth;
    const int klen = 2 * hw + 1;

    // Sampled Hann mainlobe power profiles for a tone at bin offset delta,
    // computed from a DFT of the windowed complex exponential.
    const auto window = hann_window(kWin);
    out.kernels.assign(MelInversion::kShifts * size_t(klen), 0.0);
    for (uint32_t shift = 0; shift < MelInversion::kShifts; ++shift) {
      const double delta = double(shift) / double(MelInversion::kShifts);
      const double center = 100.0 + delta;  // far from DC and Nyquist
      std::vector<std::complex<double>> buf(kWin);
      for (uint32_t i = 0; i < kWin; ++i) {
        const double ang = 2.0 * kPi * center * double(i) / double(kWin);
        buf[i] = window[i] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      fft_inplace(buf, false);
      double peak = 0.0;
      for (int k = 0; k < klen; ++k) {
        const double p = std::norm(buf[size_t(100 + k - hw)]);
        out.kernels[size_t(shift) * size_t(klen) + size_t(k)] = p;
        peak = std::max(peak, p);
      }
      for (int k = 0; k < klen; ++k) out.kernels[size_t(shift) * size_t(klen) + size_t(k)] /= peak;
    }

    // Dictionary response through the filterbank: a[j][c] = sum_f fb[j][f] k_c[f].
    out.a.assign(size_t(fb.rows()) * out.columns, 0.0);
    for (uint32_t j = 0; j < fb.rows(); ++j) {
      for (uint32_t c = 0; c < out.columns; ++c) {
        const int center = int(c / MelInversion::kShifts);
        double acc = 0.0;
        for (int off = -hw; off <= hw; ++off) {
          const int f = center + off;
          if (f < 0 || f >= int(out.bins)) continue;
          acc += double(fb.at(j, uint32_t(f))) * out.kernel_at(c, f);
        }
        out.a[size_t(j) * out.columns + c] = acc;
      }
    }
    return out;
  }();
  return inv;
}

// Lawson-Hanson NNLS with incremental Cholesky on the active set.
// Minimizes ||A q - b|| subject to q >= 0 for the 80 x columns dictionary.
void nnls_solve(const MelInversion& inv, const std::vector<double>& b, std::vector<double>& q) {
  const uint32_t m = kMelBins;
  const uint32_t n = inv.columns;
  const double* A = inv.a.data();
  q.assign(n, 0.0);

  double bmax = 0.0;
  for (double v : b) bmax = std::max(bmax, std::fabs(v));
  if (bmax <= 0.0) return;
  const double tol = 1e-10 * bmax;

  std::vector<double> resid(b);
  std::vector<int> active;           // passive set (selected columns)
  std::vector<char> state(n, 0);     // 0 free, 1 active, 2 rejected
  std::vector<double> L;             // lower Cholesky of the active Gram, row-major kmax x kmax
  std::vector<double> c_active;      // A_active^T b
  const size_t kmax = size_t(m) + 8;
  L.assign(kmax * kmax, 0.0);

  auto col_dot = [&](int ca, int cb) {
    double s = 0.0;
    for (uint32_t i = 0; i < m; ++i) s += A[size_t(i) * n + size_t(ca)] * A[size_t(i) * n + size_t(cb)];
    return s;
  };

  std::vector<double> z, y;
  for (int outer = 0; outer < int(2 * m) + 64; ++outer) {
    // Most negative gradient among free columns.
    int best = -1;
    double wmax = tol;
    for (uint32_t c = 0; c < n; ++c) {
      if (state[c] != 0) continue;
      double s = 0.0;
      for (uint32_t i = 0; i < m; ++i) s += A[size_t(i) * n + c] * resid[i];
      if (s > wmax) {
        wmax = s;
        best = int(c);
      }
    }
    if (best < 0) break;

    // Extend the Cholesky factor with the candidate column.
    {
      const size_t k = active.size();
      if (k + 1 > kmax) break;
      double diag = col_dot(best, best);
      std::vector<double> row(k);
      for (size_t i = 0; i < k; ++i) row[i] = col_dot(best, active[i]);
      for (size_t i = 0; i < k; ++i) {
        double s = row[i];
        for (size_t p = 0; p < i; ++p) s -= L[k * kmax + p] * L[i * kmax + p];
        L[k * kmax + i] = s / L[i * kmax + i];
      }
      double s = diag;
      for (size_t p = 0; p < k; ++p) s -= L[k * kmax + p] * L[k * kmax + p];
      if (s <= 1e-12 * std::max(diag, 1e-300)) {
        state[size_t(best)] = 2;  // numerically dependent on the active set
        continue;
      }
      L[k * kmax + k] = std::sqrt(s);
      active.push_back(best);
      state[size_t(best)] = 1;
      double cb = 0.0;
      for (uint32_t i = 0; i < m; ++i) cb += A[size_t(i) * n + size_t(best)] * b[i];
      c_active.push_back(cb);
    }

    // Inner loop: least squares on the active set, prune negatives.
    while (!active.empty()) {
      const size_t k = active.size();
      y.assign(k, 0.0);
      z.assign(k, 0.0);
      for (size_t i = 0; i < k; ++i) {
        double s = c_active[i];
        for (size_t p = 0; p < i; ++p) s -= L[i * kmax + p] * y[p];
        y[i] = s / L[i * kmax + i];
      }
      for (size_t ii = k; ii-- > 0;) {
        double s = y[ii];
        for (size_t p = ii + 1; p < k; ++p) s -= L[p * kmax + ii] * z[p];
        z[ii] = s / L[ii * kmax + ii];
      }
      bool feasible = true;
      for (double v : z) {
        if (v <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        for (size_t i = 0; i < k; ++i) q[size_t(active[i])] = z[i];
        break;
      }
      double alpha = 1.0;
      for (size_t i = 0; i < k; ++i) {
        if (z[i] <= 0.0) {
          const double qi = q[size_t(active[i])];
          alpha = std::min(alpha, qi / (qi - z[i]));
        }
      }
      for (size_t i = 0; i < k; ++i) {
        const auto idx = size_t(active[i]);
        q[idx] += alpha * (z[i] - q[idx]);
      }
      // Drop zeroed columns and re-factorize (removals are rare).
      std::vector<int> keep;
      for (size_t i = 0; i < k; ++i) {
        if (q[size_t(active[i])] > 1e-14 * bmax) {
          keep.push_back(active[i]);
        } else {
          q[size_t(active[i])] = 0.0;
          state[size_t(active[i])] = 0;
        }
      }
      active = std::move(keep);
      c_active.assign(active.size(), 0.0);
      for (size_t i = 0; i < active.size(); ++i) {
        double cb = 0.0;
        for (uint32_t r = 0; r < m; ++r) cb += A[size_t(r) * n + size_t(active[i])] * b[r];
        c_active[i] = cb;
        for (size_t j = 0; j <= i; ++j) {
          double s = col_dot(active[i], active[j]);
          for (size_t p = 0; p < j; ++p) s -= L[i * kmax + p] * L[j * kmax + p];
          L[i * kmax + j] = j == i ? std::sqrt(std::max(s, 1e-300)) : s / L[j * kmax + j];
        }
      }
    }

    // resid = b - A q over the active set.
    for (uint32_t i = 0; i < m; ++i) {
      double s = b[i];
      for (int cidx : active) s -= A[size_t(i) * n + size_t(cidx)] * q[size_t(cidx)];
      resid[i] = s;
    }
  }
}

struct SpectralPeak {
  double position;  // fractional bin
  double power;
};

// Per-frame mel power -> linear magnitude. Active kernels closer than one
// bin are merged into their power-weighted centroid: two overlapping tone
// kernels would beat across frames, which no stationary magnitude target
// can represent. The merged peak list feeds the phase initialization.
void invert_mel_frame(const MelInversion& inv, const std::vector<double>& mel_power,
                      double* mag_out, std::vector<SpectralPeak>& peaks) {
  std::vector<double> q;
  nnls_solve(inv, mel_power, q);
  const int hw = inv.kernel_halfwidth;
  const double shifts = double(MelInversion::kShifts);

  using Peak = SpectralPeak;
  peaks.clear();
  for (uint32_t c = 0; c < inv.columns; ++c) {
    if (q[c] <= 0.0) continue;
    const double pos = double(c) / shifts;
    if (!peaks.empty() && pos - peaks.back().position <= 1.0) {
      Peak& p = peaks.back();
      const double total = p.power + q[c];
      p.position = (p.position * p.power + pos * q[c]) / total;
      p.power = total;
    } else {
      peaks.push_back({pos, q[c]});
    }
  }

  for (uint32_t f = 0; f < inv.bins; ++f) mag_out[f] = 0.0;
  for (Peak& p : peaks) {
    const auto c = uint32_t(std::clamp(std::llround(p.position * shifts), 0ll,
                                       (long long)(inv.columns - 1)));
    p.position = double(c) / shifts;  // snapped: rendering and phase init agree
    const int center = int(c / MelInversion::kShifts);
    for (int off = -hw; off <= hw; ++off) {
      const int f = center + off;
      if (f < 0 || f >= int(inv.bins)) continue;
      mag_out[f] += inv.kernel_at(c, f) * p.power;
    }
  }
  for (uint32_t f = 0; f < inv.bins; ++f) mag_out[f] = std::sqrt(std::max(0.0, mag_out[f]));
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("fft_inplace: size must be a power of two");
  }
  // Bit reversal.
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * kPi / double(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= double(n);
  }
}

Spectrogram stft(const Waveform& w, uint32_t win, uint32_t hop) {
  if (w.samples.size() < win) {
    throw std::invalid_argument("stft: input shorter than one window");
  }
  const auto window = hann_window(win);
  Spectrogram s;
  s.frames = frame_count(w.samples.size(), win, hop);
  s.bins = win / 2 + 1;
  s.data.resize(size_t(s.frames) * s.bins);
  std::vector<std::complex<double>> buf(win);
  for (uint32_t t = 0; t < s.frames; ++t) {
    const float* frame = w.samples.data() + size_t(t) * hop;
    for (uint32_t i = 0; i < win; ++i) buf[i] = double(frame[i]) * window[i];
    fft_inplace(buf, false);
    for (uint32_t f = 0; f < s.bins; ++f) s.at(t, f) = buf[f];
  }
  return s;
}

Array magnitudes(const Spectrogram& s) {
  Array out = Array::zeros({s.frames, s.bins});
  for (size_t i = 0; i < s.data.size(); ++i) out[i] = float(std::abs(s.data[i]));
  out.require_finite("stft magnitudes");
  return out;
}

Waveform istft_lse(const Spectrogram& s, uint32_t win, uint32_t hop, size_t out_samples,
                   double coverage_floor) {
  const auto window = hann_window(win);
  std::vector<double> num(out_samples, 0.0);
  std::vector<double> den(out_samples, 0.0);
  std::vector<std::complex<double>> buf(win);
  for (uint32_t t = 0; t < s.frames; ++t) {
    for (uint32_t f = 0; f < s.bins; ++f) buf[f] = s.at(t, f);
    for (uint32_t f = s.bins; f < win; ++f) buf[f] = std::conj(s.at(t, win - f));
    fft_inplace(buf, true);
    const size_t base = size_t(t) * hop;
    for (uint32_t i = 0; i < win && base + i < out_samples; ++i) {
      num[base + i] += window[i] * buf[i].real();
      den[base + i] += window[i] * window[i];
    }
  }
  const double floor_den = std::max(coverage_floor, 1e-10);
  Waveform w;
  w.samples.resize(out_samples);
  for (size_t i = 0; i < out_samples; ++i) {
    w.samples[i] = den[i] > 1e-10 ? float(num[i] / std::max(den[i], floor_den)) : 0.0f;
  }
  return w;
}

const Array& mel_filterbank() {
  static const Array fb = [] {
    const uint32_t bins = kNFft / 2 + 1;
    const double mel_lo = hz_to_mel(kFMin);
    const double mel_hi = hz_to_mel(kFMax);
    std::vector<double> edges(kMelBins + 2);
    for (uint32_t i = 0; i < kMelBins + 2; ++i) {
      edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(i) / double(kMelBins + 1));
    }
    std::vector<double> weights(size_t(kMelBins) * bins, 0.0);
    for (uint32_t j = 0; j < kMelBins; ++j) {
      const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
      double row_sum = 0.0;
      for (uint32_t f = 0; f < bins; ++f) {
        const double freq = double(f) * double(kSampleRate) / double(kNFft);
        double v = 0.0;
        if (freq > lo && freq < hi) {
          v = freq <= mid ? (freq - lo) / (mid - lo) : (hi - freq) / (hi - mid);
        }
        weights[size_t(j) * bins + f] = v;
        row_sum += v;
      }
      if (row_sum <= 0.0) throw std::runtime_error("mel_filterbank: empty filter row");
      for (uint32_t f = 0; f < bins; ++f) weights[size_t(j) * bins + f] /= row_sum;
    }
    std::vector<float> data(weights.size());
    for (size_t i = 0; i < weights.size(); ++i) data[i] = float(weights[i]);
    return Array({kMelBins, bins}, std::move(data));
  }();
  return fb;
}

const std::vector<double>& mel_center_frequencies() {
  static const std::vector<double> centers = [] {
    const double mel_lo = hz_to_mel(kFMin);
    const double mel_hi = hz_to_mel(kFMax);
    std::vector<double> c(kMelBins);
    for (uint32_t j = 0; j < kMelBins; ++j) {
      c[j] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(j + 1) / double(kMelBins + 1));
    }
    return c;
  }();
  return centers;
}

MelSpec mel_spectrogram(const Waveform& w) {
  const Spectrogram s = stft(w, kWin, kHop);
  const Array& fb = mel_filterbank();
  const uint32_t bins = s.bins;
  MelSpec m;
  m.frames = Array::zeros({s.frames, kMelBins});
  std::vector<double> power(bins);
  for (uint32_t t = 0; t < s.frames; ++t) {
    for (uint32_t f = 0; f < bins; ++f) power[f] = std::norm(s.at(t, f));
    for (uint32_t j = 0; j < kMelBins; ++j) {
      const float* frow = fb.data() + size_t(j) * bins;
      double acc = 0.0;
      for (uint32_t f = 0; f < bins; ++f) acc += double(frow[f]) * power[f];
      m.frames.data()[size_t(t) * kMelBins + j] = float(std::log(acc > kMelFloor ? acc : kMelFloor));
    }
  }
  m.frames.require_finite("mel_spectrogram");
  return m;
}

EnergyContour energy_contour(const Waveform& w, uint32_t win, uint32_t hop) {
  if (w.samples.empty()) throw std::invalid_argument("energy_contour: empty waveform");
  if (w.samples.size() < win) {
    throw std::invalid_argument("energy_contour: input shorter than one window");
  }
  const uint32_t frames = frame_count(w.samples.size(), win, hop);
  std::vector<double> rms(frames);
  for (uint32_t t = 0; t < frames; ++t) {
    const float* frame = w.samples.data() + size_t(t) * hop;
    double acc = 0.0;
    for (uint32_t i = 0; i < win; ++i) acc += double(frame[i]) * double(frame[i]);
    rms[t] = std::sqrt(acc / double(win));
  }
  double lo = rms[0], hi = rms[0];
  for (double v : rms) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EnergyContour e;
  e.values.resize(frames);
  const double span = hi - lo;
  for (uint32_t t = 0; t < frames; ++t) {
    e.values[t] = span > 1e-12 ? float((rms[t] - lo) / span) : 0.0f;
  }
  return e;
}

GriffinLimResult griffin_lim(const MelSpec& m, int iters) {
  if (iters < 1) throw std::invalid_argument("griffin_lim: iters must be >= 1");
  m.frames.require_finite("griffin_lim input");
  const uint32_t T = m.frames.rows();
  const uint32_t bins = kNFft / 2 + 1;
  const MelInversion& inv = mel_inversion();

  // Mel log power -> linear magnitude (NNLS against the filterbank).
  std::vector<double> mag(size_t(T) * bins, 0.0);
  std::vector<double> melpow(kMelBins);
  std::vector<std::vector<SpectralPeak>> frame_peaks(T);
  for (uint32_t t = 0; t < T; ++t) {
    for (uint32_t j = 0; j < kMelBins; ++j) melpow[j] = std::exp(double(m.frames.at(t, j)));
    invert_mel_frame(inv, melpow, mag.data() + size_t(t) * bins, frame_peaks[t]);
  }
  double mag_norm_sq = 0.0;
  for (double v : mag) mag_norm_sq += v * v;
  const double mag_norm = std::sqrt(mag_norm_sq);

  const size_t out_samples = size_t(T - 1) * m.hop_length + m.win_length;
  Spectrogram s;
  s.frames = T;
  s.bins = bins;
  s.data.resize(size_t(T) * bins);
  // Deterministic phase init: each bin starts with the per-frame phase
  // advance of its nearest reconstructed peak (2 pi f_peak hop / N per
  // hop). Zero phase is a fixed point of the wrong basin for peaks that
  // sit between bins.
  for (uint32_t t = 0; t < T; ++t) {
    const auto& peaks = frame_peaks[t];
    for (uint32_t f = 0; f < bins; ++f) {
      double omega = double(f);
      double best = 1e18;
      for (const SpectralPeak& p : peaks) {
        const double d = std::fabs(p.position - double(f));
        if (d < best) {
          best = d;
          omega = p.position;
        }
      }
      const double phi = 2.0 * kPi * omega * double(m.hop_length) * double(t) / double(kNFft);
      s.data[size_t(t) * bins + f] = std::polar(mag[size_t(t) * bins + f], phi);
    }
  }

  GriffinLimResult result;
  Waveform x;
  for (int it = 0; it < iters; ++it) {
    x = istft_lse(s, m.win_length, m.hop_length, out_samples);
    Spectrogram rs = stft(x, m.win_length, m.hop_length);
    double diff_sq = 0.0;
    for (size_t i = 0; i < rs.data.size(); ++i) {
      const double a = std::abs(rs.data[i]);
      const double d = a - mag[i];
      diff_sq += d * d;
      // Keep target magnitude, adopt estimated phase.
      s.data[i] = a > 0.0 ? rs.data[i] * (mag[i] / a) : std::complex<double>(mag[i], 0.0);
    }
    result.residuals.push_back(mag_norm > 0.0 ? std::sqrt(diff_sq) / mag_norm : 0.0);
  }
  // Final synthesis: the clip head/tail samples sit under near-zero window
  // coverage, where the exact least-squares inverse amplifies arbitrarily.
  // Flooring the coverage there only attenuates those edge samples.
  x = istft_lse(s, m.win_length, m.hop_length, out_samples, 1e-2);

  float peak = 0.0f;
  for (float v : x.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 1.0f) {
    const double scale = 0.999 / double(peak);
    for (float& v : x.samples) v = float(double(v) * scale);
  }
  x.validate();
  result.wav = std::move(x);
  return result;
}

void save_melspec(const std::filesystem::path& path, const MelSpec& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("save_melspec: cannot open " + path.string());
  os.write("FDMS", 4);
  const uint32_t t = m.frames.rows(), b = m.frames.cols();
  os.write(reinterpret_cast<const char*>(&t), 4);
  os.write(reinterpret_cast<const char*>(&b), 4);
  os.write(reinterpret_cast<const char*>(m.frames.data()), std::streamsize(m.frames.numel() * 4));
  if (!os) throw std::runtime_error("save_melspec: write failure");
}

MelSpec load_melspec(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_melspec: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "FDMS", 4) != 0) throw std::runtime_error("load_melspec: bad magic");
  uint32_t t = 0, b = 0;
  is.read(reinterpret_cast<char*>(&t), 4);
  is.read(reinterpret_cast<char*>(&b), 4);
  std::vector<float> data(size_t(t) * b);
  is.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size() * 4));
  if (!is) throw std::runtime_error("load_melspec: truncated");
  MelSpec m;
  m.frames = Array({t, b}, std::move(data));
  return m;
}

}  // namespace flowdub::dsp
