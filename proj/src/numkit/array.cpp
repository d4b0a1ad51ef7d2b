// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#include "flowdub/numkit/array.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace flowdub::numkit {

Array::Array(std::vector<uint32_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty() || shape_.size() > 2) {
    throw std::invalid_argument("Array: rank must be 1 or 2");
  }
  size_t expect = 1;
  for (uint32_t d : shape_) expect *= d;
  if (expect != data_.size()) {
    throw std::invalid_argument("Array: shape/data size mismatch");
  }
}

Array Array::zeros(const std::vector<uint32_t>& shape) {
  size_t n = 1;
  for (uint32_t d : shape) n *= d;
  return Array(shape, std::vector<float>(n, 0.0f));
}

Array Array::full(const std::vector<uint32_t>& shape, float value) {
  size_t n = 1;
  for (uint32_t d : shape) n *= d;
  return Array(shape, std::vector<float>(n, value));
}

bool Array::finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Array::require_finite(const std::string& context) const {
  if (!finite()) {
    throw std::runtime_error("non-finite value in " + context);
  }
}

bool bitwise_equal(const Array& a, const Array& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), a.numel() * sizeof(float)) == 0;
}

double sum_squares(const Array& a) {
  double acc = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) {
    acc += double(a[i]) * double(a[i]);
  }
  return acc;
}

std::string shape_str(const Array& a) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < a.shape().size(); ++i) {
    if (i) os << "x";
    os << a.shape()[i];
  }
  os << "]";
  return os.str();
}

}  // namespace flowdub::numkit
