#pragma once

#include <Eigen/Dense>

#include "isokam/liegroup.hpp"

namespace isokam {

// Points of S^d are unit vectors in R^{d+1}; tangent vectors are ambient.

PVec sphere_exp(const PVec& x, const PVec& v);
// Throws AntipodalPoints when y is within 1e-9 of -x.
PVec sphere_log(const PVec& x, const PVec& y);
double sphere_distance(const PVec& x, const PVec& y);
PVec tangent_project(const PVec& x, const PVec& v);

// Orthonormal basis of T_x S^d as an (d+1) x d matrix. Deterministic:
// Gram-Schmidt of the coordinate axes against x, skipping the axis most
// aligned with x (so near the pole e_k the axis e_k is dropped).
PMat tangent_frame(const PVec& x);

// Derivatives of F(z, v) = cos|v| z + sin|v| v/|v| (the exponential map
// extended to all of R^n x R^n).
struct ExpDerivative {
  PVec value;
  PMat dz;  // dF/dz
  PMat dv;  // dF/dv
};
ExpDerivative sphere_exp_derivative(const PVec& z, const PVec& v);

PVec random_sphere_point(int ambient, Rng& rng);
PVec random_tangent(const PVec& x, double norm, Rng& rng);

}  // namespace isokam
