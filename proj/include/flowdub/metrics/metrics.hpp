// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "flowdub/dsp/spectral.hpp"
#include "flowdub/numkit/array.hpp"

namespace flowdub::metrics {

using numkit::Array;

// T x 13 mel-cepstral coefficients c1..c13 (c0 excluded).
struct CepstraTrack {
  Array coeffs;
  uint32_t frames() const { return coeffs.rows(); }
};

// Monotone alignment path from (0,0) to (Ta-1, Tb-1), steps in
// {(1,0),(0,1),(1,1)}.
struct DtwPath {
  std::vector<std::pair<uint32_t, uint32_t>> points;
  double cost = 0.0;
};

// Orthonormal DCT-II over the 80-bin mel axis, keeping coefficients 1..13.
CepstraTrack mfcc(const dsp::MelSpec& m);

// Minimal-cost monotone alignment under Euclidean frame distance with
// uniform step weights. Among minimum-cost paths the one with the most
// diagonal steps is selected (this makes the path length symmetric in the
// argument order), with remaining ties broken (1,1), then (1,0), then (0,1)
// during backtracking.
DtwPath dtw_align(const Array& a, const Array& b);
inline DtwPath dtw_align(const CepstraTrack& a, const CepstraTrack& b) {
  return dtw_align(a.coeffs, b.coeffs);
}

// MCD in dB: (10/ln10) * sqrt(2) * mean over DTW-aligned pairs of ||ca - cb||.
double mcd(const CepstraTrack& a, const CepstraTrack& b);

// MCD scaled by the duration mismatch penalty max(Ta,Tb)/min(Ta,Tb).
double mcd_sl(const CepstraTrack& a, const CepstraTrack& b);

// Pearson correlation over DTW-aligned contour values (direct pairing when
// lengths match); 0 when either side is constant.
double energy_corr(const dsp::EnergyContour& a, const dsp::EnergyContour& b);

}  // namespace flowdub::metrics
