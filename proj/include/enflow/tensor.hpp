#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace enflow {

// Dense rank-2 tensor of doubles, row-major. Scalars are 1x1, row vectors
// 1xN, column vectors Nx1. Zero-sized dimensions are legal; ops on empty
// tensors produce empty (or zero) results rather than failing.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols);
  Tensor(int rows, int cols, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor zeros(int rows, int cols);
  static Tensor ones(int rows, int cols);
  static Tensor full(int rows, int cols, double v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t size() const { return static_cast<std::int64_t>(rows_) * cols_; }

  double& at(int r, int c);
  double at(int r, int c) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Requires size() == 1.
  double item() const;

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool all_finite() const;

  std::string shape_str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Max over elements of |a - b|; shapes must match. Empty tensors give 0.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace enflow
