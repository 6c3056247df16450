#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "adrisk/errors.hpp"

namespace adrisk::ad {

// Dense row-major tensor of 64-bit floats. The library keeps every shape
// 2-D; a scalar is {1,1}, a row vector {1,n}, a column vector {n,1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(int r, int c);
  static Tensor full(int r, int c, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor column(std::vector<double> v);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  double scalar_value() const;
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_str() const;
  bool all_finite() const;
};

inline std::int64_t shape_numel(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

}  // namespace adrisk::ad
