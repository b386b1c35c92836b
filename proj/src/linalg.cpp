#include "enflow/linalg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace enflow::linalg {

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul_plain: " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Tensor out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a.at(i, k);
      for (int j = 0; j < b.cols(); ++j) out.at(i, j) += aik * b.at(k, j);
    }
  }
  return out;
}

Tensor transpose_plain(const Tensor& a) {
  Tensor out(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) out.at(c, r) = a.at(r, c);
  }
  return out;
}

Tensor identity(int n) {
  Tensor out(n, n);
  for (int i = 0; i < n; ++i) out.at(i, i) = 1.0;
  return out;
}

LogDet log_abs_det(const Tensor& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("log_abs_det: non-square " + a.shape_str());
  }
  const int n = a.rows();
  if (n == 0) return {0.0, 1};
  Tensor lu = a;
  int sign = 1;
  double log_abs = 0.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::fabs(lu.at(k, k));
    for (int r = k + 1; r < n; ++r) {
      const double v = std::fabs(lu.at(r, k));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(lu.at(k, c), lu.at(piv, c));
      sign = -sign;
    }
    const double d = lu.at(k, k);
    if (d < 0.0) sign = -sign;
    log_abs += std::log(std::fabs(d));
    for (int r = k + 1; r < n; ++r) {
      const double f = lu.at(r, k) / d;
      lu.at(r, k) = f;
      for (int c = k + 1; c < n; ++c) lu.at(r, c) -= f * lu.at(k, c);
    }
  }
  return {log_abs, sign};
}

}  // namespace enflow::linalg
