// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowdub/numkit/array.hpp"

namespace flowdub::numkit {

enum class Nonlin { tanh_fn, sigmoid_fn, relu_fn, log_fn };

using GradMap = std::map<std::string, Array>;

// Reverse-mode autodiff over a fixed, closed op set:
// matmul, add, mul, affine, nonlinearity, softmax, reduce_mean, squared_error.
// Anything else does not exist on the tape by construction.
//
// Forward values are stored in float32; backward runs with float64 adjoints
// and float64 local derivatives so gradients survive finite-difference
// comparison. Every op validates that its output is finite.
class Tape {
 public:
  struct Ref {
    int32_t idx = -1;
  };

  // Leaf that never receives a gradient (data, conditions, constants).
  Ref input(Array value);

  // Named leaf that receives a gradient. A name may be registered once per
  // tape; reuse the returned Ref to share the parameter across the graph.
  Ref param(const std::string& name, const Array& value);

  Ref matmul(Ref a, Ref b);
  Ref add(Ref a, Ref b);
  Ref mul(Ref a, Ref b);
  // x: [m x k], w: [k x n], b: rank-1 [n], broadcast over rows.
  Ref affine(Ref x, Ref w, Ref b);
  Ref nonlinearity(Ref x, Nonlin kind);
  Ref tanh_(Ref x) { return nonlinearity(x, Nonlin::tanh_fn); }
  Ref sigmoid_(Ref x) { return nonlinearity(x, Nonlin::sigmoid_fn); }
  Ref relu_(Ref x) { return nonlinearity(x, Nonlin::relu_fn); }
  // log clamps its argument at 1e-12 (and differentiates the clamped form).
  Ref log_(Ref x) { return nonlinearity(x, Nonlin::log_fn); }
  // Row-wise softmax over a rank-2 array.
  Ref softmax(Ref x);
  // Mean over all elements -> scalar (shape [1]).
  Ref reduce_mean(Ref x);
  // Mean of elementwise squared difference -> scalar (shape [1]).
  Ref squared_error(Ref a, Ref b);

  const Array& value(Ref r) const;
  size_t size() const { return nodes_.size(); }

  // Gradients of a scalar output for every parameter registered on this
  // tape. Parameters that do not influence the output get zero gradients.
  // Throws if the output is not a scalar or the graph holds non-finite data.
  GradMap backward(Ref output) const;

 private:
  enum class Op {
    input,
    param,
    matmul,
    add,
    mul,
    affine,
    nonlin,
    softmax,
    reduce_mean,
    squared_error
  };

  struct Node {
    Op op;
    int32_t a = -1, b = -1, c = -1;
    Nonlin kind = Nonlin::tanh_fn;
    Array value;
    std::string name;  // params only
  };

  Ref push(Node n, const char* what);
  const Node& node(Ref r) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int32_t> param_index_;
};

}  // namespace flowdub::numkit
