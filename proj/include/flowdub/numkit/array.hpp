// Copyright 2026 The FlowDub Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace flowdub::numkit {

// Dense, row-major float32 array of rank 1 or 2. Storage is float32;
// reductions elsewhere accumulate in float64. A NaN/Inf anywhere is treated
// as an error by the ops that produce arrays.
class Array {
 public:
  Array() = default;
  Array(std::vector<uint32_t> shape, std::vector<float> data);

  static Array zeros(const std::vector<uint32_t>& shape);
  static Array full(const std::vector<uint32_t>& shape, float value);

  const std::vector<uint32_t>& shape() const { return shape_; }
  uint32_t rank() const { return static_cast<uint32_t>(shape_.size()); }
  size_t numel() const { return data_.size(); }

  // Rank-1 arrays behave as a single row when used in matrix contexts.
  uint32_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  uint32_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : 0); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }
  float at(uint32_t r, uint32_t c) const { return data_[size_t(r) * cols() + c]; }

  bool same_shape(const Array& other) const { return shape_ == other.shape_; }
  bool finite() const;
  void require_finite(const std::string& context) const;

 private:
  std::vector<uint32_t> shape_;
  std::vector<float> data_;
};

bool bitwise_equal(const Array& a, const Array& b);

// Sum of squares with float64 accumulation.
double sum_squares(const Array& a);

std::string shape_str(const Array& a);

}  // namespace flowdub::numkit
