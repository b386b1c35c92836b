#pragma once

#include "enflow/tensor.hpp"

namespace enflow::linalg {

Tensor matmul_plain(const Tensor& a, const Tensor& b);
Tensor transpose_plain(const Tensor& a);
Tensor identity(int n);

struct LogDet {
  double log_abs = 0.0;
  int sign = 0;  // 0 means singular
};

// Partial-pivot LU on a square matrix.
LogDet log_abs_det(const Tensor& a);

}  // namespace enflow::linalg
