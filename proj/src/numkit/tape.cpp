// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/numkit/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flowdub::numkit {

namespace {

// C[m x n] = A[m x k] * B[k x n], float64 accumulation.
void matmul_kernel(const float* A, const float* B, float* C, uint32_t m, uint32_t k, uint32_t n) {
  std::vector<double> acc(size_t(m) * n, 0.0);
  for (uint32_t i = 0; i < m; ++i) {
    double* crow = acc.data() + size_t(i) * n;
    const float* arow = A + size_t(i) * k;
    for (uint32_t p = 0; p < k; ++p) {
      const double a = arow[p];
      const float* brow = B + size_t(p) * n;
      for (uint32_t j = 0; j < n; ++j) crow[j] += a * double(brow[j]);
    }
  }
  for (size_t i = 0; i < acc.size(); ++i) C[i] = float(acc[i]);
}

// dA[i,p] += sum_j dC[i,j] * B[p,j]
void matmul_grad_a(const double* dC, const float* B, double* dA, uint32_t m, uint32_t k, uint32_t n) {
  for (uint32_t i = 0; i < m; ++i) {
    const double* drow = dC + size_t(i) * n;
    double* arow = dA + size_t(i) * k;
    for (uint32_t p = 0; p < k; ++p) {
      const float* brow = B + size_t(p) * n;
      double s = 0.0;
      for (uint32_t j = 0; j < n; ++j) s += drow[j] * double(brow[j]);
      arow[p] += s;
    }
  }
}

// dB[p,j] += sum_i A[i,p] * dC[i,j]
void matmul_grad_b(const float* A, const double* dC, double* dB, uint32_t m, uint32_t k, uint32_t n) {
  for (uint32_t i = 0; i < m; ++i) {
    const float* arow = A + size_t(i) * k;
    const double* drow = dC + size_t(i) * n;
    for (uint32_t p = 0; p < k; ++p) {
      const double a = arow[p];
      double* brow = dB + size_t(p) * n;
      for (uint32_t j = 0; j < n; ++j) brow[j] += a * drow[j];
    }
  }
}

constexpr double kLogFloor = 1e-12;

}  // namespace

Tape::Ref Tape::push(Node n, const char* what) {
  n.value.require_finite(what);
  nodes_.push_back(std::move(n));
  return Ref{int32_t(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Ref r) const {
  if (r.idx < 0 || size_t(r.idx) >= nodes_.size()) {
    throw std::invalid_argument("Tape: dangling node reference");
  }
  return nodes_[size_t(r.idx)];
}

const Array& Tape::value(Ref r) const { return node(r).value; }

Tape::Ref Tape::input(Array value) {
  Node n;
  n.op = Op::input;
  n.value = std::move(value);
  return push(std::move(n), "input");
}

Tape::Ref Tape::param(const std::string& name, const Array& value) {
  if (param_index_.count(name)) {
    throw std::invalid_argument("Tape: parameter registered twice: " + name);
  }
  Node n;
  n.op = Op::param;
  n.value = value;
  n.name = name;
  Ref r = push(std::move(n), "param");
  param_index_[name] = r.idx;
  return r;
}

Tape::Ref Tape::matmul(Ref a, Ref b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(A) + " x " + shape_str(B));
  }
  Array out = Array::zeros({A.rows(), B.cols()});
  matmul_kernel(A.data(), B.data(), out.data(), A.rows(), A.cols(), B.cols());
  Node n;
  n.op = Op::matmul;
  n.a = a.idx;
  n.b = b.idx;
  n.value = std::move(out);
  return push(std::move(n), "matmul");
}

Tape::Ref Tape::add(Ref a, Ref b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (!A.same_shape(B)) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
  }
  Array out = A;
  for (size_t i = 0; i < out.numel(); ++i) out[i] += B[i];
  Node n;
  n.op = Op::add;
  n.a = a.idx;
  n.b = b.idx;
  n.value = std::move(out);
  return push(std::move(n), "add");
}

Tape::Ref Tape::mul(Ref a, Ref b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (!A.same_shape(B)) {
    throw std::invalid_argument("mul: shape mismatch " + shape_str(A) + " vs " + shape_str(B));
  }
  Array out = A;
  for (size_t i = 0; i < out.numel(); ++i) out[i] *= B[i];
  Node n;
  n.op = Op::mul;
  n.a = a.idx;
  n.b = b.idx;
  n.value = std::move(out);
  return push(std::move(n), "mul");
}

Tape::Ref Tape::affine(Ref x, Ref w, Ref b) {
  const Array& X = value(x);
  const Array& W = value(w);
  const Array& B = value(b);
  if (X.rank() != 2 || W.rank() != 2 || X.cols() != W.rows()) {
    throw std::invalid_argument("affine: shape mismatch " + shape_str(X) + " x " + shape_str(W));
  }
  if (B.rank() != 1 || B.cols() != W.cols()) {
    throw std::invalid_argument("affine: bias shape mismatch");
  }
  Array out = Array::zeros({X.rows(), W.cols()});
  matmul_kernel(X.data(), W.data(), out.data(), X.rows(), X.cols(), W.cols());
  const uint32_t ncols = W.cols();
  for (uint32_t i = 0; i < X.rows(); ++i) {
    float* row = out.data() + size_t(i) * ncols;
    for (uint32_t j = 0; j < ncols; ++j) row[j] += B[j];
  }
  Node n;
  n.op = Op::affine;
  n.a = x.idx;
  n.b = w.idx;
  n.c = b.idx;
  n.value = std::move(out);
  return push(std::move(n), "affine");
}

Tape::Ref Tape::nonlinearity(Ref x, Nonlin kind) {
  const Array& X = value(x);
  Array out = X;
  switch (kind) {
    case Nonlin::tanh_fn:
      for (size_t i = 0; i < out.numel(); ++i) out[i] = float(std::tanh(double(out[i])));
      break;
    case Nonlin::sigmoid_fn:
      for (size_t i = 0; i < out.numel(); ++i) out[i] = float(1.0 / (1.0 + std::exp(-double(out[i]))));
      break;
    case Nonlin::relu_fn:
      for (size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0f ? out[i] : 0.0f;
      break;
    case Nonlin::log_fn:
      for (size_t i = 0; i < out.numel(); ++i) {
        double v = double(out[i]);
        out[i] = float(std::log(v > kLogFloor ? v : kLogFloor));
      }
      break;
  }
  Node n;
  n.op = Op::nonlin;
  n.a = x.idx;
  n.kind = kind;
  n.value = std::move(out);
  return push(std::move(n), "nonlinearity");
}

Tape::Ref Tape::softmax(Ref x) {
  const Array& X = value(x);
  if (X.rank() != 2) throw std::invalid_argument("softmax: rank-2 input required");
  Array out = X;
  const uint32_t m = X.rows(), k = X.cols();
  for (uint32_t i = 0; i < m; ++i) {
    float* row = out.data() + size_t(i) * k;
    double mx = row[0];
    for (uint32_t j = 1; j < k; ++j) mx = std::max(mx, double(row[j]));
    double sum = 0.0;
    std::vector<double> e(k);
    for (uint32_t j = 0; j < k; ++j) {
      e[j] = std::exp(double(row[j]) - mx);
      sum += e[j];
    }
    for (uint32_t j = 0; j < k; ++j) row[j] = float(e[j] / sum);
  }
  Node n;
  n.op = Op::softmax;
  n.a = x.idx;
  n.value = std::move(out);
  return push(std::move(n), "softmax");
}

Tape::Ref Tape::reduce_mean(Ref x) {
  const Array& X = value(x);
  double acc = 0.0;
  for (size_t i = 0; i < X.numel(); ++i) acc += double(X[i]);
  Array out({1}, {float(acc / double(X.numel()))});
  Node n;
  n.op = Op::reduce_mean;
  n.a = x.idx;
  n.value = std::move(out);
  return push(std::move(n), "reduce_mean");
}

Tape::Ref Tape::squared_error(Ref a, Ref b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (!A.same_shape(B)) {
    throw std::invalid_argument("squared_error: shape mismatch");
  }
  double acc = 0.0;
  for (size_t i = 0; i < A.numel(); ++i) {
    double d = double(A[i]) - double(B[i]);
    acc += d * d;
  }
  Array out({1}, {float(acc / double(A.numel()))});
  Node n;
  n.op = Op::squared_error;
  n.a = a.idx;
  n.b = b.idx;
  n.value = std::move(out);
  return push(std::move(n), "squared_error");
}

GradMap Tape::backward(Ref output) const {
  const Node& out = node(output);
  if (out.value.numel() != 1) {
    throw std::invalid_argument("backward: output must be a scalar");
  }
  for (const Node& n : nodes_) {
    n.value.require_finite("backward graph");
  }

  std::vector<std::vector<double>> adj(nodes_.size());
  auto adj_of = [&](int32_t i) -> std::vector<double>& {
    auto& v = adj[size_t(i)];
    if (v.empty()) v.assign(nodes_[size_t(i)].value.numel(), 0.0);
    return v;
  };
  adj_of(output.idx)[0] = 1.0;

  for (int32_t i = output.idx; i >= 0; --i) {
    const Node& n = nodes_[size_t(i)];
    const auto& g = adj[size_t(i)];
    if (g.empty()) continue;  // node does not influence the output
    switch (n.op) {
      case Op::input:
      case Op::param:
        break;
      case Op::matmul: {
        const Array& A = nodes_[size_t(n.a)].value;
        const Array& B = nodes_[size_t(n.b)].value;
        matmul_grad_a(g.data(), B.data(), adj_of(n.a).data(), A.rows(), A.cols(), B.cols());
        matmul_grad_b(A.data(), g.data(), adj_of(n.b).data(), A.rows(), A.cols(), B.cols());
        break;
      }
      case Op::add: {
        auto& ga = adj_of(n.a);
        auto& gb = adj_of(n.b);
        for (size_t j = 0; j < g.size(); ++j) {
          ga[j] += g[j];
          gb[j] += g[j];
        }
        break;
      }
      case Op::mul: {
        const Array& A = nodes_[size_t(n.a)].value;
        const Array& B = nodes_[size_t(n.b)].value;
        auto& ga = adj_of(n.a);
        auto& gb = adj_of(n.b);
        for (size_t j = 0; j < g.size(); ++j) {
          ga[j] += g[j] * double(B[j]);
          gb[j] += g[j] * double(A[j]);
        }
        break;
      }
      case Op::affine: {
        const Array& X = nodes_[size_t(n.a)].value;
        const Array& W = nodes_[size_t(n.b)].value;
        matmul_grad_a(g.data(), W.data(), adj_of(n.a).data(), X.rows(), X.cols(), W.cols());
        matmul_grad_b(X.data(), g.data(), adj_of(n.b).data(), X.rows(), X.cols(), W.cols());
        auto& gbias = adj_of(n.c);
        const uint32_t ncols = W.cols();
        for (uint32_t r = 0; r < X.rows(); ++r) {
          const double* grow = g.data() + size_t(r) * ncols;
          for (uint32_t j = 0; j < ncols; ++j) gbias[j] += grow[j];
        }
        break;
      }
      case Op::nonlin: {
        const Array& X = nodes_[size_t(n.a)].value;
        auto& ga = adj_of(n.a);
        // Local derivatives recomputed in float64 from the stored inputs;
        // reusing float32 outputs would lose precision near saturation.
        switch (n.kind) {
          case Nonlin::tanh_fn:
            for (size_t j = 0; j < g.size(); ++j) {
              double t = std::tanh(double(X[j]));
              ga[j] += g[j] * (1.0 - t * t);
            }
            break;
          case Nonlin::sigmoid_fn:
            for (size_t j = 0; j < g.size(); ++j) {
              double s = 1.0 / (1.0 + std::exp(-double(X[j])));
              ga[j] += g[j] * s * (1.0 - s);
            }
            break;
          case Nonlin::relu_fn:
            for (size_t j = 0; j < g.size(); ++j) {
              if (X[j] > 0.0f) ga[j] += g[j];
            }
            break;
          case Nonlin::log_fn:
            for (size_t j = 0; j < g.size(); ++j) {
              double v = double(X[j]);
              ga[j] += g[j] / (v > kLogFloor ? v : kLogFloor);
            }
            break;
        }
        break;
      }
      case Op::softmax: {
        const Array& P = n.value;
        auto& ga = adj_of(n.a);
        const uint32_t m = P.rows(), k = P.cols();
        for (uint32_t r = 0; r < m; ++r) {
          const double* grow = g.data() + size_t(r) * k;
          const float* prow = P.data() + size_t(r) * k;
          double dot = 0.0;
          for (uint32_t j = 0; j < k; ++j) dot += grow[j] * double(prow[j]);
          double* garow = ga.data() + size_t(r) * k;
          for (uint32_t j = 0; j < k; ++j) {
            garow[j] += double(prow[j]) * (grow[j] - dot);
          }
        }
        break;
      }
      case Op::reduce_mean: {
        const Array& X = nodes_[size_t(n.a)].value;
        auto& ga = adj_of(n.a);
        const double scale = g[0] / double(X.numel());
        for (size_t j = 0; j < ga.size(); ++j) ga[j] += scale;
        break;
      }
      case Op::squared_error: {
        const Array& A = nodes_[size_t(n.a)].value;
        const Array& B = nodes_[size_t(n.b)].value;
        auto& ga = adj_of(n.a);
        auto& gb = adj_of(n.b);
        const double scale = 2.0 * g[0] / double(A.numel());
        for (size_t j = 0; j < ga.size(); ++j) {
          double d = scale * (double(A[j]) - double(B[j]));
          ga[j] += d;
          gb[j] -= d;
        }
        break;
      }
    }
  }

  GradMap grads;
  for (const auto& [name, idx] : param_index_) {
    const Node& p = nodes_[size_t(idx)];
    Array g = Array::zeros(p.value.shape());
    const auto& a = adj[size_t(idx)];
    for (size_t j = 0; j < a.size(); ++j) g[j] = float(a[j]);
    g.require_finite("gradient of " + name);
    grads.emplace(name, std::move(g));
  }
  return grads;
}

}  // namespace flowdub::numkit
