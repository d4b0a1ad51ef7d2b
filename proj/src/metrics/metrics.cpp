// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowdub::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint32_t kKeep = 13;
const double kMcdConst = (10.0 / std::log(10.0)) * std::sqrt(2.0);

double frame_distance(const Array& a, uint32_t i, const Array& b, uint32_t j) {
  const uint32_t d = a.cols();
  const float* ra = a.data() + size_t(i) * d;
  const float* rb = b.data() + size_t(j) * d;
  double acc = 0.0;
  for (uint32_t k = 0; k < d; ++k) {
    const double diff = double(ra[k]) - double(rb[k]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

}  // namespace

CepstraTrack mfcc(const dsp::MelSpec& m) {
  m.frames.require_finite("mfcc input");
  const uint32_t T = m.frames.rows();
  const uint32_t B = m.frames.cols();
  if (B != dsp::kMelBins) throw std::invalid_argument("mfcc: expected 80 mel bins");
  CepstraTrack out;
  out.coeffs = Array::zeros({T, kKeep});
  const double scale = std::sqrt(2.0 / double(B));
  for (uint32_t t = 0; t < T; ++t) {
    const float* row = m.frames.data() + size_t(t) * B;
    for (uint32_t k = 1; k <= kKeep; ++k) {
      double acc = 0.0;
      for (uint32_t b = 0; b < B; ++b) {
        acc += double(row[b]) * std::cos(kPi * (double(b) + 0.5) * double(k) / double(B));
      }
      out.coeffs.data()[size_t(t) * kKeep + (k - 1)] = float(scale * acc);
    }
  }
  return out;
}

DtwPath dtw_align(const Array& a, const Array& b) {
  const uint32_t ta = a.rows(), tb = b.rows();
  if (ta == 0 || tb == 0 || a.numel() == 0 || b.numel() == 0) {
    throw std::invalid_argument("dtw_align: empty track");
  }
  if (a.cols() != b.cols()) throw std::invalid_argument("dtw_align: dimension mismatch");

  // DP over (cost, -diag_count) lexicographically. Maximizing diagonal
  // steps among optimal paths fixes the path length independently of the
  // argument order, which keeps mcd symmetric. Parent pointers record the
  // tie-break choice ((1,1), then (1,0), then (0,1)) for the backtrack.
  std::vector<double> cost(size_t(ta) * tb);
  std::vector<int32_t> diag(size_t(ta) * tb);
  enum : uint8_t { kStart = 0, kDiag = 1, kUp = 2, kLeft = 3 };
  std::vector<uint8_t> parent(size_t(ta) * tb, kStart);
  auto idx = [tb](uint32_t i, uint32_t j) { return size_t(i) * tb + j; };

  for (uint32_t i = 0; i < ta; ++i) {
    for (uint32_t j = 0; j < tb; ++j) {
      const double d = frame_distance(a, i, b, j);
      if (i == 0 && j == 0) {
        cost[idx(i, j)] = d;
        diag[idx(i, j)] = 0;
        continue;
      }
      double best_cost = std::numeric_limits<double>::infinity();
      int32_t best_diag = -1;
      uint8_t best_parent = kStart;
      // Candidate order matches the tie-break preference (1,1),(1,0),(0,1).
      if (i > 0 && j > 0) {
        best_cost = cost[idx(i - 1, j - 1)];
        best_diag = diag[idx(i - 1, j - 1)] + 1;
        best_parent = kDiag;
      }
      if (i > 0) {
        const double c = cost[idx(i - 1, j)];
        const int32_t dg = diag[idx(i - 1, j)];
        if (c < best_cost || (c == best_cost && dg > best_diag)) {
          best_cost = c;
          best_diag = dg;
          best_parent = kUp;
        }
      }
      if (j > 0) {
        const double c = cost[idx(i, j - 1)];
        const int32_t dg = diag[idx(i, j - 1)];
        if (c < best_cost || (c == best_cost && dg > best_diag)) {
          best_cost = c;
          best_diag = dg;
          best_parent = kLeft;
        }
      }
      cost[idx(i, j)] = best_cost + d;
      diag[idx(i, j)] = best_diag;
      parent[idx(i, j)] = best_parent;
    }
  }

  DtwPath path;
  path.cost = cost[idx(ta - 1, tb - 1)];
  uint32_t i = ta - 1, j = tb - 1;
  std::vector<std::pair<uint32_t, uint32_t>> rev;
  rev.emplace_back(i, j);
  while (i > 0 || j > 0) {
    switch (parent[idx(i, j)]) {
      case kDiag:
        --i;
        --j;
        break;
      case kUp:
        --i;
        break;
      case kLeft:
        --j;
        break;
      default:
        throw std::logic_error("dtw_align: broken backtrack");
    }
    rev.emplace_back(i, j);
  }
  path.points.assign(rev.rbegin(), rev.rend());
  return path;
}

double mcd(const CepstraTrack& a, const CepstraTrack& b) {
  const DtwPath path = dtw_align(a, b);
  double acc = 0.0;
  for (const auto& [i, j] : path.points) {
    acc += frame_distance(a.coeffs, i, b.coeffs, j);
  }
  return kMcdConst * acc / double(path.points.size());
}

double mcd_sl(const CepstraTrack& a, const CepstraTrack& b) {
  const double ta = double(a.frames()), tb = double(b.frames());
  if (ta == 0.0 || tb == 0.0) throw std::invalid_argument("mcd_sl: empty track");
  return mcd(a, b) * std::max(ta, tb) / std::min(ta, tb);
}

double energy_corr(const dsp::EnergyContour& a, const dsp::EnergyContour& b) {
  if (a.values.empty() || b.values.empty()) {
    throw std::invalid_argument("energy_corr: empty contour");
  }
  std::vector<std::pair<uint32_t, uint32_t>> pairs;
  if (a.size() == b.size()) {
    pairs.reserve(a.size());
    for (uint32_t i = 0; i < a.size(); ++i) pairs.emplace_back(i, i);
  } else {
    Array ca({uint32_t(a.size()), 1}, a.values);
    Array cb({uint32_t(b.size()), 1}, b.values);
    pairs = dtw_align(ca, cb).points;
  }
  const double n = double(pairs.size());
  double sa = 0.0, sb = 0.0;
  for (const auto& [i, j] : pairs) {
    sa += a.values[i];
    sb += b.values[j];
  }
  const double ma = sa / n, mb = sb / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (const auto& [i, j] : pairs) {
    const double da = a.values[i] - ma;
    const double db = b.values[j] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va < 1e-18 || vb < 1e-18) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace flowdub::metrics
