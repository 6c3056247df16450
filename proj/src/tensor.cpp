#include "adrisk/tensor.hpp"

#include <sstream>

namespace adrisk::ad {

Tensor::Tensor(std::vector<int> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  for (int e : shape) {
    if (e <= 0) throw DimensionError("tensor extent must be positive, got shape " + shape_str());
  }
  if (shape_numel(shape) != numel()) {
    throw DimensionError("tensor shape " + shape_str() + " does not match " +
                         std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::zeros(int r, int c) {
  return Tensor({r, c}, std::vector<double>(static_cast<std::size_t>(r) * c, 0.0));
}

Tensor Tensor::full(int r, int c, double v) {
  return Tensor({r, c}, std::vector<double>(static_cast<std::size_t>(r) * c, v));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({1, n}, std::move(v));
}

Tensor Tensor::column(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n, 1}, std::move(v));
}

double Tensor::scalar_value() const {
  if (numel() != 1) throw DimensionError("expected scalar tensor, got shape " + shape_str());
  return data[0];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "}";
  return os.str();
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace adrisk::ad
