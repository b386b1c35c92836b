#pragma once

#include <utility>

#include "enflow/autodiff.hpp"
#include "enflow/rng.hpp"
#include "enflow/tensor.hpp"

namespace enflow::geom {

// x minus its per-column mean over rows (center of gravity to the origin).
Tensor center(const Tensor& x);
ad::Var center(const ad::Var& x);

// Largest |column mean| of x; zero exactly when x is centered.
double center_residual(const Tensor& x);

// Orthonormal basis of the translation-free subspace of M points in n
// dimensions. p has (M-1)*n rows annihilating rigid translations, q has n
// rows spanning them; stacked they form an orthogonal (M*n) x (M*n) matrix.
// Point sets flatten row-major: coordinate (i, d) sits at column i*n + d.
struct SubspaceProjection {
  int m = 0;
  int n = 0;
  Tensor p;  // (m-1)*n x m*n
  Tensor q;  // n x m*n
};

SubspaceProjection build_projection(int m, int n);  // requires m >= 2

Tensor flatten_row(const Tensor& x);  // 1 x (rows*cols), row-major

// Log density of the standard normal restricted to the translation-free
// subspace (positions) times a full standard normal (features):
//   -|z_x|^2/2 - (M-1)n/2 log 2pi - |z_h|^2/2 - M*nf/2 log 2pi.
// z_x must be centered to within center_tol or the call fails.
double base_log_density(const Tensor& z_x, const Tensor& z_h,
                        double center_tol = 1e-8);
ad::Var base_log_density(const ad::Var& z_x, const ad::Var& z_h,
                         double center_tol = 1e-8);

// Positions are a standard normal projected onto the subspace (drawn ambient,
// then centered); features are a plain standard normal.
std::pair<Tensor, Tensor> sample_base(int m, int n, int nf, Rng& rng);

// Haar-distributed proper rotation (det +1).
Tensor random_rotation(int n, Rng& rng);

// Rows transform as x_i -> R x_i, i.e. x * R^T for row-major point sets.
Tensor rotate_rows(const Tensor& x, const Tensor& r);
ad::Var rotate_rows(const ad::Var& x, const Tensor& r);

}  // namespace enflow::geom
