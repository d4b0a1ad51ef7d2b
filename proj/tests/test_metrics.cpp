// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "flowdub/metrics/metrics.hpp"
#include "flowdub/numkit/rng.hpp"
#include "support/oracles.hpp"

using namespace flowdub;
using metrics::CepstraTrack;
using numkit::Array;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kMcdConst = (10.0 / std::log(10.0)) * std::sqrt(2.0);

dsp::MelSpec mel_of(const Array& frames) {
  dsp::MelSpec m;
  m.frames = frames;
  return m;
}

CepstraTrack random_track(numkit::Rng& rng, uint32_t frames) {
  CepstraTrack t;
  t.coeffs = Array::zeros({frames, 13});
  numkit::fill_uniform(rng, t.coeffs, -1.0, 1.0);
  return t;
}

double brute_mcd(const CepstraTrack& a, const CepstraTrack& b) {
  auto r = testing::brute_force_dtw(a.coeffs, b.coeffs);
  return kMcdConst * r.min_cost / double(r.min_len_at_min_cost);
}

}  // namespace

TEST_CASE("mfcc") {
  SUBCASE("constant frame has all-zero cepstra (c0 excluded)") {
    auto m = mel_of(Array::full({3, 80}, -4.2f));
    auto c = metrics::mfcc(m);
    for (size_t i = 0; i < c.coeffs.numel(); ++i) {
      CHECK(std::fabs(c.coeffs[i]) < 1e-5);
    }
  }
  SUBCASE("cosine frame matching DCT basis k=1 excites only c1") {
    Array frames = Array::zeros({1, 80});
    for (uint32_t b = 0; b < 80; ++b) {
      frames[b] = float(std::cos(kPi * (double(b) + 0.5) / 80.0));
    }
    auto c = metrics::mfcc(mel_of(frames));
    // orthonormality: c1 = sqrt(2/80) * sum cos^2 = sqrt(2/80) * 40
    CHECK(double(c.coeffs[0]) == doctest::Approx(std::sqrt(2.0 / 80.0) * 40.0).epsilon(1e-5));
    for (uint32_t k = 1; k < 13; ++k) CHECK(std::fabs(c.coeffs[k]) < 1e-4);
  }
  SUBCASE("full-DCT oracle round trip") {
    numkit::Rng rng(9);
    std::vector<double> x(80);
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    // Oracle: full 80-coefficient orthonormal DCT-II, then its inverse.
    std::vector<double> coeff(80, 0.0);
    for (uint32_t k = 0; k < 80; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / 80.0) : std::sqrt(2.0 / 80.0);
      for (uint32_t b = 0; b < 80; ++b) {
        coeff[k] += x[b] * std::cos(kPi * (double(b) + 0.5) * double(k) / 80.0);
      }
      coeff[k] *= scale;
    }
    std::vector<double> back(80, 0.0);
    for (uint32_t b = 0; b < 80; ++b) {
      for (uint32_t k = 0; k < 80; ++k) {
        const double scale = k == 0 ? std::sqrt(1.0 / 80.0) : std::sqrt(2.0 / 80.0);
        back[b] += scale * coeff[k] * std::cos(kPi * (double(b) + 0.5) * double(k) / 80.0);
      }
      CHECK(std::fabs(back[b] - x[b]) <= 1e-5);
    }
    // mfcc must agree with the oracle's coefficients 1..13.
    Array frames = Array::zeros({1, 80});
    for (uint32_t b = 0; b < 80; ++b) frames[b] = float(x[b]);
    auto c = metrics::mfcc(mel_of(frames));
    for (uint32_t k = 1; k <= 13; ++k) {
      CHECK(double(c.coeffs[k - 1]) == doctest::Approx(coeff[k]).epsilon(1e-4));
    }
  }
}

TEST_CASE("dtw_align") {
  SUBCASE("identical tracks align on the diagonal with zero cost") {
    numkit::Rng rng(4);
    CepstraTrack a = random_track(rng, 5);
    auto path = metrics::dtw_align(a, a);
    CHECK(path.cost == doctest::Approx(0.0));
    REQUIRE(path.points.size() == 5);
    for (uint32_t i = 0; i < 5; ++i) {
      CHECK(path.points[i].first == i);
      CHECK(path.points[i].second == i);
    }
  }
  SUBCASE("frame-doubled copy aligns at zero cost without horizontal steps") {
    numkit::Rng rng(6);
    CepstraTrack a = random_track(rng, 4);
    CepstraTrack b;
    b.coeffs = Array::zeros({8, 13});
    for (uint32_t i = 0; i < 8; ++i) {
      for (uint32_t k = 0; k < 13; ++k) {
        b.coeffs.data()[size_t(i) * 13 + k] = a.coeffs.at(i / 2, k);
      }
    }
    auto path = metrics::dtw_align(a, b);
    CHECK(path.cost == doctest::Approx(0.0));
    for (size_t p = 1; p < path.points.size(); ++p) {
      const auto di = path.points[p].first - path.points[p - 1].first;
      const auto dj = path.points[p].second - path.points[p - 1].second;
      const bool vertical_or_diagonal = dj == 1;  // b always advances
      CHECK(vertical_or_diagonal);
      CHECK(di <= 1);
    }
  }
  SUBCASE("path starts at (0,0), ends at corner, length bounded") {
    numkit::Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const auto ta = uint32_t(2 + rng.below(5)), tb = uint32_t(2 + rng.below(5));
      CepstraTrack a = random_track(rng, ta);
      CepstraTrack b = random_track(rng, tb);
      auto path = metrics::dtw_align(a, b);
      CHECK(path.points.front() == std::pair<uint32_t, uint32_t>{0, 0});
      CHECK(path.points.back() == std::pair<uint32_t, uint32_t>{ta - 1, tb - 1});
      CHECK(path.points.size() <= size_t(ta) + tb - 1);
    }
  }
  SUBCASE("empty track is an error") {
    Array empty({0u, 13u}, {});
    Array one = Array::zeros({1, 13});
    CHECK_THROWS_AS(metrics::dtw_align(empty, one), std::invalid_argument);
  }
}

TEST_CASE("dtw/mcd equal the exhaustive brute-force oracle (T <= 6)") {
  numkit::Rng rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const auto ta = uint32_t(1 + rng.below(6)), tb = uint32_t(1 + rng.below(6));
    CepstraTrack a = random_track(rng, ta);
    CepstraTrack b = random_track(rng, tb);
    auto path = metrics::dtw_align(a, b);
    auto brute = testing::brute_force_dtw(a.coeffs, b.coeffs);
    CHECK(std::fabs(path.cost - brute.min_cost) <= 1e-9);
    CHECK(path.points.size() == brute.min_len_at_min_cost);
    CHECK(std::fabs(metrics::mcd(a, b) - brute_mcd(a, b)) <= 1e-9);
  }
}

TEST_CASE("mcd") {
  SUBCASE("identity") {
    numkit::Rng rng(14);
    CepstraTrack a = random_track(rng, 6);
    CHECK(metrics::mcd(a, a) == doctest::Approx(0.0));
  }
  SUBCASE("single-frame delta in one coefficient") {
    const double delta = 0.37;
    CepstraTrack a, b;
    a.coeffs = Array::zeros({1, 13});
    b.coeffs = Array::zeros({1, 13});
    b.coeffs[4] = float(delta);
    CHECK(metrics::mcd(a, b) == doctest::Approx(kMcdConst * delta).epsilon(1e-6));
  }
  SUBCASE("symmetry") {
    numkit::Rng rng(16);
    for (int trial = 0; trial < 40; ++trial) {
      CepstraTrack a = random_track(rng, uint32_t(1 + rng.below(8)));
      CepstraTrack b = random_track(rng, uint32_t(1 + rng.below(8)));
      CHECK(std::fabs(metrics::mcd(a, b) - metrics::mcd(b, a)) <= 1e-9);
    }
  }
  SUBCASE("non-negative") {
    numkit::Rng rng(18);
    for (int trial = 0; trial < 10; ++trial) {
      CepstraTrack a = random_track(rng, 4);
      CepstraTrack b = random_track(rng, 4);
      CHECK(metrics::mcd(a, b) >= 0.0);
    }
  }
}

TEST_CASE("mcd_sl") {
  numkit::Rng rng(20);
  SUBCASE("equal lengths: penalty 1") {
    CepstraTrack a = random_track(rng, 5);
    CepstraTrack b = random_track(rng, 5);
    CHECK(metrics::mcd_sl(a, b) == doctest::Approx(metrics::mcd(a, b)));
  }
  SUBCASE("identical content stays zero under any length ratio") {
    CepstraTrack a = random_track(rng, 3);
    CHECK(metrics::mcd_sl(a, a) == doctest::Approx(0.0));
  }
  SUBCASE("doubled length doubles the score") {
    CepstraTrack a = random_track(rng, 4);
    CepstraTrack b = random_track(rng, 8);
    const double base = metrics::mcd(a, b);
    CHECK(metrics::mcd_sl(a, b) == doctest::Approx(2.0 * base).epsilon(1e-9));
  }
}

TEST_CASE("energy_corr") {
  auto contour = [](std::vector<float> v) {
    dsp::EnergyContour e;
    e.values = std::move(v);
    return e;
  };
  SUBCASE("identical non-constant contours correlate at 1") {
    auto a = contour({0.0f, 0.2f, 0.5f, 0.9f, 1.0f});
    CHECK(metrics::energy_corr(a, a) == doctest::Approx(1.0));
  }
  SUBCASE("a contour and its reflection correlate at -1") {
    std::vector<float> up, down;
    for (int i = 0; i <= 10; ++i) {
      up.push_back(float(i) / 10.0f);
      down.push_back(1.0f - float(i) / 10.0f);
    }
    CHECK(metrics::energy_corr(contour(up), contour(down)) == doctest::Approx(-1.0));
  }
  SUBCASE("ramp vs noisy ramp stays above 0.99") {
    numkit::Rng rng(22);
    std::vector<float> ramp, noisy;
    for (int i = 0; i < 100; ++i) {
      const double v = double(i) / 99.0;
      ramp.push_back(float(v));
      noisy.push_back(float(v + 0.01 * rng.normal()));
    }
    CHECK(metrics::energy_corr(contour(ramp), contour(noisy)) >= 0.99);
  }
  SUBCASE("constant side yields 0") {
    auto a = contour({0.5f, 0.5f, 0.5f});
    auto b = contour({0.1f, 0.6f, 0.9f});
    CHECK(metrics::energy_corr(a, b) == 0.0);
  }
  SUBCASE("length mismatch goes through DTW") {
    std::vector<float> shorter = {0.0f, 0.5f, 1.0f};
    std::vector<float> longer = {0.0f, 0.0f, 0.5f, 0.5f, 1.0f, 1.0f};
    CHECK(metrics::energy_corr(contour(shorter), contour(longer)) >= 0.9);
  }
  SUBCASE("empty contour is an error") {
    CHECK_THROWS_AS(metrics::energy_corr(contour({}), contour({0.5f})), std::invalid_argument);
  }
}
