#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isokam/liegroup.hpp"

namespace isokam {

// Real spherical harmonics on S^2, orthonormal for the normalized area
// measure (so Y_00 = 1 and the l = 0 coefficient is the mean). Block ordering
// is m = -l..l; Y_{l,m>0} ~ cos(m phi), Y_{l,m<0} ~ sin(|m| phi), no
// Condon-Shortley phase. Degree one: (Y_{1,-1}, Y_{1,0}, Y_{1,1}) = sqrt(3) (y, z, x).

inline int harmonic_index(int l, int m) { return l * l + l + m; }
inline int harmonic_count(int lmax) { return (lmax + 1) * (lmax + 1); }
inline double casimir(int l) { return static_cast<double>(l) * (l + 1); }

// values[harmonic_index(l, m)] for l <= lmax; optional surface gradients.
void real_harmonics(const Eigen::Vector3d& x, int lmax, double* values,
                    Eigen::Vector3d* gradients = nullptr);

class HarmonicCoeffs {
 public:
  HarmonicCoeffs() = default;
  explicit HarmonicCoeffs(int lmax) : lmax_(lmax), c_(Vec::Zero(harmonic_count(lmax))) {}
  HarmonicCoeffs(int lmax, Vec coeffs);

  int lmax() const { return lmax_; }
  const Vec& coeffs() const { return c_; }
  Vec& coeffs() { return c_; }
  double& operator()(int l, int m) { return c_(harmonic_index(l, m)); }
  double operator()(int l, int m) const { return c_(harmonic_index(l, m)); }
  auto block(int l) { return c_.segment(l * l, 2 * l + 1); }
  auto block(int l) const { return c_.segment(l * l, 2 * l + 1); }

  // sum_l (1 + c_l)^s ||coeffs_l||^2
  double hs_norm_sq(double s) const;
  double l2_norm() const { return c_.norm(); }
  double mean() const { return lmax_ >= 0 && c_.size() ? c_(0) : 0.0; }
  double evaluate(const Eigen::Vector3d& x) const;

  HarmonicCoeffs operator+(const HarmonicCoeffs& o) const;
  HarmonicCoeffs operator-(const HarmonicCoeffs& o) const;
  HarmonicCoeffs operator*(double s) const;

 private:
  int lmax_ = -1;
  Vec c_;
};

// Gauss-Legendre in cos(theta) times uniform phi; weights sum to 1.
struct SphereGrid {
  std::vector<Eigen::Vector3d> points;
  Vec weights;
};
SphereGrid gauss_grid(int n_theta, int n_phi);
// Grid integrating exactly every polynomial of degree <= degree.
SphereGrid exact_grid(int degree);
void gauss_legendre(int n, Vec& nodes, Vec& weights);

// Quadrature projection of sampled values onto degrees <= lmax.
HarmonicCoeffs analyze(const SphereGrid& grid, const Vec& values, int lmax);

// M with M * coeffs(phi) = coeffs(phi o g^{-1}) on degree l.
Mat wigner_block(const GroupElement& g, int l);
Mat averaging_block(const GeneratorTuple& s, int l);

struct HarmonicBlock {
  int degree = 0;
  double casimir = 0.0;
  std::vector<Mat> rotations;  // one per generator
  Mat average;
  int dim() const { return 2 * degree + 1; }
};
HarmonicBlock make_block(const GeneratorTuple& s, int l);

// Applies the averaging operator blockwise: (1/m) sum_i phi o g_i^{-1}.
HarmonicCoeffs apply_averaging(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& phi);

struct GapRecord {
  int degree = 0;
  double casimir = 0.0;
  double norm = 0.0;        // ||M_l||
  double power_norm = 0.0;  // ||M_l^n||
  double gap = 0.0;         // 1 - ||M_l^n||^{1/n}
  double bound = 0.0;       // 1 / (D2 log^alpha c_l), l >= 2
  double inverse_norm = 0.0; // ||(I - M_l)^{-1}||
};

struct GapProfile {
  int n_powers = 1;
  std::vector<GapRecord> records;  // l = 1..lmax
  double d2 = 0.0;
  double alpha = 0.0;
  int violations = 0;
  double tameness_max = 0.0;  // max_{l >= 2} ||(I - M_l)^{-1}|| / log^4 c_l
};
GapProfile gap_profile(const GeneratorTuple& s, int lmax, int n_powers);

double diophantine_margin(const GeneratorTuple& s, int l);

HarmonicCoeffs solve_coboundary(const GeneratorTuple& s, const HarmonicCoeffs& phi);
HarmonicCoeffs solve_coboundary(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& phi);
// max over l >= 1 of ||(I - M_l) psi_l - phi_l||
double coboundary_residual(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& psi,
                           const HarmonicCoeffs& phi);

// (T_lambda X, R_lambda X): blocks with c_l < lambda, and the rest.
std::pair<HarmonicCoeffs, HarmonicCoeffs> smooth_truncate(const HarmonicCoeffs& x, double lambda);

inline constexpr double kSingularBlockTol = 1e-12;

}  // namespace isokam
