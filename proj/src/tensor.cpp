#include "enflow/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace enflow {

Tensor::Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) {
    throw std::invalid_argument("tensor: negative dimension " +
                                std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
  data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Tensor::Tensor(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0 ||
      data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument(
        "tensor: data length " + std::to_string(data_.size()) +
        " does not match shape " + std::to_string(rows) + "x" +
        std::to_string(cols));
  }
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

Tensor Tensor::zeros(int rows, int cols) { return Tensor(rows, cols); }

Tensor Tensor::ones(int rows, int cols) { return full(rows, cols, 1.0); }

Tensor Tensor::full(int rows, int cols, double v) {
  Tensor t(rows, cols);
  for (auto& x : t.data_) x = v;
  return t;
}

double& Tensor::at(int r, int c) {
  return data_[static_cast<std::size_t>(r) * cols_ + c];
}

double Tensor::at(int r, int c) const {
  return data_[static_cast<std::size_t>(r) * cols_ + c];
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("tensor: item() on shape " + shape_str());
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("max_abs_diff: shape " + a.shape_str() +
                                " vs " + b.shape_str());
  }
  double m = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace enflow
