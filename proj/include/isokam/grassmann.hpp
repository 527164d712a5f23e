#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Dense>

#include "isokam/liegroup.hpp"

namespace isokam {

class SphereMap;

// Orthonormal r-frame in R^n; a point of Gr_r(R^n).
struct SubspaceFrame {
  Mat basis;  // n x r, orthonormal columns
  int ambient() const { return static_cast<int>(basis.rows()); }
  int rank() const { return static_cast<int>(basis.cols()); }
  // Orthonormalizes the columns of `span` (throws RankDeficient).
  static SubspaceFrame from_span(const Mat& span);
};

// sqrt(Det <L v_i, L v_j>_{g2} / Det <v_i, v_j>_{g1}) for the columns v_i of e.
double subspace_det(const Mat& l, const Mat& e, const Mat& g1, const Mat& g2);
double subspace_det(const Mat& l, const SubspaceFrame& e);

SubspaceFrame haar_grassmannian(int n, int r, std::uint64_t seed);
SubspaceFrame haar_grassmannian(int n, int r, Rng& rng);

struct McEstimate {
  double value = 0.0;
  double se = 0.0;
};

struct SphereMoments {
  McEstimate m2, m4, m22;
};
// Moments of a uniform point on S^{d-1} in R^d: E x1^2, E x1^4, E x1^2 x2^2.
SphereMoments sphere_moments(int d, long n_samples, std::uint64_t seed);

enum class GrassmannSampling {
  Independent,   // one Haar frame per sample
  CyclicWindows  // the d cyclic r-windows of one Haar basis per group
};

// Monte-Carlo estimate of int ln det(I + L | E) dE over Gr_r(R^d).
McEstimate lambda_r_mc(const Mat& l, int r, long n_samples, std::uint64_t seed,
                       GrassmannSampling sampling = GrassmannSampling::CyclicWindows);

double lambda_r_alpha1(const Mat& l, int r);
double lambda_r_alpha2(const Mat& l, int r);
// alpha1 + alpha2
double lambda_r_taylor(const Mat& l, int r);
// Second-order expansion of the r-th exponent lambda_r = Lambda_r - Lambda_{r-1}.
double lambda_r_exponent_taylor(const Mat& l, int r);

// (r / 2d) Tr G, and its MC companion int ln det(I, I, I + G | E) dE.
double metric_taylor(const Mat& g, int r);
McEstimate metric_mc(const Mat& g, int r, long n_samples, std::uint64_t seed);

// Frame spanning J E, reprojected onto the tangent space at `base` when given.
SubspaceFrame induced_frame(const Mat& j, const Mat& e, const Vec& base = Vec());
// Chart formula image: graph of A' = J I_A (pi_P J I_A)^{-1} - Id over the
// reference plane P (columns `p`), with I_A the graph map of the chart
// coordinate A of E. Returned as an orthonormal frame for comparison.
SubspaceFrame chart_image(const Mat& j, const Mat& e, const Mat& p);
// Largest principal angle between two subspaces of equal rank.
double max_principal_angle(const Mat& a, const Mat& b);

// Induced map on the Grassmannian bundle of S^d.
std::pair<Vec, SubspaceFrame> induced_map(const SphereMap& f, const Vec& x, const SubspaceFrame& e);

}  // namespace isokam
