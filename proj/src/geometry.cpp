#include "enflow/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "enflow/linalg.hpp"

namespace enflow::geom {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("geometry: " + msg);
}

}  // namespace

Tensor center(const Tensor& x) {
  Tensor out = x;
  if (x.rows() == 0) return out;
  for (int c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (int r = 0; r < x.rows(); ++r) mean += x.at(r, c);
    mean /= x.rows();
    for (int r = 0; r < x.rows(); ++r) out.at(r, c) -= mean;
  }
  return out;
}

ad::Var center(const ad::Var& x) {
  if (x.rows() == 0) return x;
  ad::Var mean = ad::scale(ad::sum_rows(x), 1.0 / x.rows());
  return ad::sub(x, mean);
}

double center_residual(const Tensor& x) {
  double worst = 0.0;
  if (x.rows() == 0) return worst;
  for (int c = 0; c < x.cols(); ++c) {
    double mean = 0.0;
    for (int r = 0; r < x.rows(); ++r) mean += x.at(r, c);
    worst = std::max(worst, std::fabs(mean / x.rows()));
  }
  return worst;
}

SubspaceProjection build_projection(int m, int n) {
  if (m < 2) fail("build_projection: need at least 2 points, got " +
                  std::to_string(m));
  if (n < 1) fail("build_projection: need positive dimension");
  SubspaceProjection sp;
  sp.m = m;
  sp.n = n;
  sp.p = Tensor((m - 1) * n, m * n);
  sp.q = Tensor(n, m * n);
  // Helmert rows: row k has k entries 1/s, then -k/s, then zeros, with
  // s = sqrt(k(k+1)). Orthonormal and orthogonal to the all-ones vector.
  for (int k = 1; k < m; ++k) {
    const double s = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int d = 0; d < n; ++d) {
      const int row = (k - 1) * n + d;
      for (int j = 0; j < k; ++j) sp.p.at(row, j * n + d) = 1.0 / s;
      sp.p.at(row, k * n + d) = -static_cast<double>(k) / s;
    }
  }
  const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(m));
  for (int d = 0; d < n; ++d) {
    for (int j = 0; j < m; ++j) sp.q.at(d, j * n + d) = inv_sqrt_m;
  }
  return sp;
}

Tensor flatten_row(const Tensor& x) {
  Tensor out(1, static_cast<int>(x.size()));
  for (std::int64_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i];
  return out;
}

namespace {

double base_constant(int m, int n, int nf) {
  const double subspace_dim = static_cast<double>(m - 1) * n;
  const double feature_dim = static_cast<double>(m) * nf;
  return -0.5 * (subspace_dim + feature_dim) * kLog2Pi;
}

void check_centered(const Tensor& z_x, double tol) {
  const double r = center_residual(z_x);
  if (r > tol) {
    fail("base_log_density: positions not centered (residual " +
         std::to_string(r) + " > tolerance " + std::to_string(tol) + ")");
  }
}

}  // namespace

double base_log_density(const Tensor& z_x, const Tensor& z_h,
                        double center_tol) {
  check_centered(z_x, center_tol);
  double sq = 0.0;
  for (std::int64_t i = 0; i < z_x.size(); ++i) {
    sq += z_x.data()[i] * z_x.data()[i];
  }
  for (std::int64_t i = 0; i < z_h.size(); ++i) {
    sq += z_h.data()[i] * z_h.data()[i];
  }
  return -0.5 * sq + base_constant(z_x.rows(), z_x.cols(), z_h.cols());
}

ad::Var base_log_density(const ad::Var& z_x, const ad::Var& z_h,
                         double center_tol) {
  check_centered(z_x.value(), center_tol);
  ad::Var sq = ad::sum_all(ad::square(z_x));
  if (z_h.value().size() > 0) {
    sq = ad::add(sq, ad::sum_all(ad::square(z_h)));
  }
  return ad::add_const(
      ad::scale(sq, -0.5),
      base_constant(z_x.rows(), z_x.cols(), z_h.cols()));
}

std::pair<Tensor, Tensor> sample_base(int m, int n, int nf, Rng& rng) {
  Tensor z_x = center(rng.normal_tensor(m, n));
  Tensor z_h = rng.normal_tensor(m, nf);
  return {std::move(z_x), std::move(z_h)};
}

Tensor random_rotation(int n, Rng& rng) {
  if (n < 1) fail("random_rotation: need positive dimension");
  // QR of a Gaussian matrix by modified Gram-Schmidt; forcing the R diagonal
  // positive makes Q Haar on O(n), then a column flip lands in SO(n).
  Tensor a = rng.normal_tensor(n, n);
  Tensor q(n, n);
  for (int j = 0; j < n; ++j) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a.at(i, j);
    for (int k = 0; k < j; ++k) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += q.at(i, k) * v[i];
      for (int i = 0; i < n; ++i) v[i] -= dot * q.at(i, k);
    }
    double norm = 0.0;
    for (int i = 0; i < n; ++i) norm += v[i] * v[i];
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      // Degenerate draw; retry with fresh randomness.
      return random_rotation(n, rng);
    }
    for (int i = 0; i < n; ++i) q.at(i, j) = v[i] / norm;
  }
  if (linalg::log_abs_det(q).sign < 0) {
    for (int i = 0; i < n; ++i) q.at(i, n - 1) = -q.at(i, n - 1);
  }
  return q;
}

Tensor rotate_rows(const Tensor& x, const Tensor& r) {
  return linalg::matmul_plain(x, linalg::transpose_plain(r));
}

ad::Var rotate_rows(const ad::Var& x, const Tensor& r) {
  return ad::matmul(x, ad::constant(linalg::transpose_plain(r)));
}

}  // namespace enflow::geom
