// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-only oracles, independent of the library's forward/backward path:
//  - RefGraph: a float64 interpreter over the same closed op set, driving
//    central finite differences for gradient checks.
//  - brute_force_dtw: exhaustive monotone-path search for tiny tracks.
//  - reference_dft: direct O(n^2) DFT.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "flowdub/numkit/array.hpp"
#include "flowdub/numkit/tape.hpp"

namespace flowdub::testing {

// ---------------------------------------------------------------------------
// float64 reference graph
// ---------------------------------------------------------------------------

struct RefGraph {
  struct Mat {
    uint32_t rows = 0, cols = 0;
    std::vector<double> v;
  };

  enum class Op { input, param, matmul, add, mul, affine, tanh_fn, sigmoid_fn, relu_fn, log_fn, softmax, reduce_mean, squared_error };

  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    Mat base;  // leaf payload
    std::string name;
  };

  std::vector<Node> nodes;
  std::map<std::string, int> params;

  int leaf(Op op, Mat m, std::string name = {}) {
    Node n;
    n.op = op;
    n.base = std::move(m);
    n.name = std::move(name);
    nodes.push_back(std::move(n));
    if (nodes.back().op == Op::param) params[nodes.back().name] = int(nodes.size()) - 1;
    return int(nodes.size()) - 1;
  }
  int input(Mat m) { return leaf(Op::input, std::move(m)); }
  int param(const std::string& name, Mat m) { return leaf(Op::param, std::move(m), name); }
  int unary(Op op, int a) {
    Node n;
    n.op = op;
    n.a = a;
    nodes.push_back(std::move(n));
    return int(nodes.size()) - 1;
  }
  int binary(Op op, int a, int b) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    nodes.push_back(std::move(n));
    return int(nodes.size()) - 1;
  }
  int affine(int x, int w, int b) {
    Node n;
    n.op = Op::affine;
    n.a = x;
    n.b = w;
    n.c = b;
    nodes.push_back(std::move(n));
    return int(nodes.size()) - 1;
  }

  // Evaluates the scalar output with a parameter override applied.
  double eval(int out, const std::map<std::string, std::vector<double>>& override_params) const {
    std::vector<Mat> vals(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
      const Node& n = nodes[i];
      switch (n.op) {
        case Op::input:
          vals[i] = n.base;
          break;
        case Op::param: {
          vals[i] = n.base;
          auto it = override_params.find(n.name);
          if (it != override_params.end()) vals[i].v = it->second;
          break;
        }
        case Op::matmul: {
          const Mat& A = vals[size_t(n.a)];
          const Mat& B = vals[size_t(n.b)];
          Mat C{A.rows, B.cols, std::vector<double>(size_t(A.rows) * B.cols, 0.0)};
          for (uint32_t r = 0; r < A.rows; ++r)
            for (uint32_t k = 0; k < A.cols; ++k)
              for (uint32_t c = 0; c < B.cols; ++c)
                C.v[size_t(r) * B.cols + c] += A.v[size_t(r) * A.cols + k] * B.v[size_t(k) * B.cols + c];
          vals[i] = std::move(C);
          break;
        }
        case Op::add:
        case Op::mul: {
          Mat C = vals[size_t(n.a)];
          const Mat& B = vals[size_t(n.b)];
          for (size_t j = 0; j < C.v.size(); ++j) {
            C.v[j] = n.op == Op::add ? C.v[j] + B.v[j] : C.v[j] * B.v[j];
          }
          vals[i] = std::move(C);
          break;
        }
        case Op::affine: {
          const Mat& X = vals[size_t(n.a)];
          const Mat& W = vals[size_t(n.b)];
          const Mat& B = vals[size_t(n.c)];
          Mat C{X.rows, W.cols, std::vector<double>(size_t(X.rows) * W.cols, 0.0)};
          for (uint32_t r = 0; r < X.rows; ++r)
            for (uint32_t k = 0; k < X.cols; ++k)
              for (uint32_t c = 0; c < W.cols; ++c)
                C.v[size_t(r) * W.cols + c] += X.v[size_t(r) * X.cols + k] * W.v[size_t(k) * W.cols + c];
          for (uint32_t r = 0; r < X.rows; ++r)
            for (uint32_t c = 0; c < W.cols; ++c) C.v[size_t(r) * W.cols + c] += B.v[c];
          vals[i] = std::move(C);
          break;
        }
        case Op::tanh_fn:
        case Op::sigmoid_fn:
        case Op::relu_fn:
        case Op::log_fn: {
          Mat C = vals[size_t(n.a)];
          for (double& x : C.v) {
            if (n.op == Op::tanh_fn) x = std::tanh(x);
            else if (n.op == Op::sigmoid_fn) x = 1.0 / (1.0 + std::exp(-x));
            else if (n.op == Op::relu_fn) x = x > 0.0 ? x : 0.0;
            else x = std::log(x > 1e-12 ? x : 1e-12);
          }
          vals[i] = std::move(C);
          break;
        }
        case Op::softmax: {
          Mat C = vals[size_t(n.a)];
          for (uint32_t r = 0; r < C.rows; ++r) {
            double* row = C.v.data() + size_t(r) * C.cols;
            double mx = row[0];
            for (uint32_t c = 1; c < C.cols; ++c) mx = std::max(mx, row[c]);
            double sum = 0.0;
            for (uint32_t c = 0; c < C.cols; ++c) {
              row[c] = std::exp(row[c] - mx);
              sum += row[c];
            }
            for (uint32_t c = 0; c < C.cols; ++c) row[c] /= sum;
          }
          vals[i] = std::move(C);
          break;
        }
        case Op::reduce_mean: {
          const Mat& A = vals[size_t(n.a)];
          double acc = 0.0;
          for (double x : A.v) acc += x;
          vals[i] = Mat{1, 1, {acc / double(A.v.size())}};
          break;
        }
        case Op::squared_error: {
          const Mat& A = vals[size_t(n.a)];
          const Mat& B = vals[size_t(n.b)];
          double acc = 0.0;
          for (size_t j = 0; j < A.v.size(); ++j) {
            const double d = A.v[j] - B.v[j];
            acc += d * d;
          }
          vals[i] = Mat{1, 1, {acc / double(A.v.size())}};
          break;
        }
      }
    }
    return vals[size_t(out)].v[0];
  }

  // Central finite differences over every parameter element.
  std::map<std::string, std::vector<double>> finite_difference(int out, double h = 1e-3) const {
    std::map<std::string, std::vector<double>> base;
    for (const auto& [name, idx] : params) base[name] = nodes[size_t(idx)].base.v;
    std::map<std::string, std::vector<double>> grads;
    for (const auto& [name, idx] : params) {
      std::vector<double> g(base[name].size());
      for (size_t j = 0; j < g.size(); ++j) {
        auto plus = base;
        auto minus = base;
        plus[name][j] += h;
        minus[name][j] -= h;
        g[j] = (eval(out, plus) - eval(out, minus)) / (2.0 * h);
      }
      grads[name] = std::move(g);
    }
    return grads;
  }
};

// Per-parameter relative error: ||g_ad - g_fd||_inf / max(||g_fd||_inf, floor).
inline double gradient_rel_error(const numkit::GradMap& ad,
                                 const std::map<std::string, std::vector<double>>& fd,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (const auto& [name, g] : ad) {
    const auto& ref = fd.at(name);
    double diff = 0.0, scale = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
      diff = std::max(diff, std::fabs(double(g[i]) - ref[i]));
      scale = std::max(scale, std::fabs(ref[i]));
    }
    worst = std::max(worst, diff / std::max(scale, floor));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// exhaustive DTW
// ---------------------------------------------------------------------------

struct BruteDtwResult {
  double min_cost = std::numeric_limits<double>::infinity();
  size_t min_len_at_min_cost = 0;  // shortest path (max diagonals) among optima
};

inline BruteDtwResult brute_force_dtw(const numkit::Array& a, const numkit::Array& b) {
  const uint32_t ta = a.rows(), tb = b.rows(), d = a.cols();
  auto dist = [&](uint32_t i, uint32_t j) {
    double acc = 0.0;
    for (uint32_t k = 0; k < d; ++k) {
      const double diff = double(a.data()[size_t(i) * d + k]) - double(b.data()[size_t(j) * d + k]);
      acc += diff * diff;
    }
    return std::sqrt(acc);
  };
  BruteDtwResult best;
  std::function<void(uint32_t, uint32_t, double, size_t)> walk = [&](uint32_t i, uint32_t j,
                                                                     double cost, size_t len) {
    cost += dist(i, j);
    ++len;
    if (i == ta - 1 && j == tb - 1) {
      if (cost < best.min_cost - 1e-12) {
        best.min_cost = cost;
        best.min_len_at_min_cost = len;
      } else if (std::fabs(cost - best.min_cost) <= 1e-12) {
        best.min_len_at_min_cost = std::min(best.min_len_at_min_cost, len);
      }
      return;
    }
    if (i + 1 < ta && j + 1 < tb) walk(i + 1, j + 1, cost, len);
    if (i + 1 < ta) walk(i + 1, j, cost, len);
    if (j + 1 < tb) walk(i, j + 1, cost, len);
  };
  walk(0, 0, 0.0, 0);
  return best;
}

// ---------------------------------------------------------------------------
// reference DFT
// ---------------------------------------------------------------------------

inline std::vector<std::complex<double>> reference_dft(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * 3.14159265358979323846 * double(k) * double(i) / double(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace flowdub::testing
