#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "isokam/harmonic.hpp"
#include "isokam/rds.hpp"
#include "isokam/strain.hpp"

namespace isokam {

// Tangent field on S^2 as X = grad a + x cross grad b (Hodge potentials; the
// l = 0 coefficients carry no field).
struct HodgeCoeffs {
  HarmonicCoeffs a;
  HarmonicCoeffs b;

  HodgeCoeffs() = default;
  explicit HodgeCoeffs(int lmax) : a(lmax), b(lmax) {}
  int lmax() const { return a.lmax(); }
  // L^2 norm of the field restricted to modes with c_l < lambda.
  double low_mode_norm(double lambda) const;
  double l2_norm() const { return low_mode_norm(1e300); }
  // sum_l (1 + c_l)^s c_l (|a_l|^2 + |b_l|^2)
  double hs_norm_sq(double s) const;
  HodgeCoeffs operator+(const HodgeCoeffs& o) const;
  HodgeCoeffs operator*(double s) const;
};

// Projection of sampled tangent vectors onto potentials of degree <= lmax.
HodgeCoeffs analyze_field(const SphereGrid& grid, const std::vector<PVec>& vectors, int lmax);
HodgeCoeffs analyze_field(const VectorField& y, int lmax);

// Evaluates a HodgeCoeffs field; off-sphere inputs are radially projected.
class HodgeField : public VectorField {
 public:
  explicit HodgeField(HodgeCoeffs c) : c_(std::move(c)) {}
  int ambient() const override { return 3; }
  PVec value(const PVec& x) const override;
  const HodgeCoeffs& coeffs() const { return c_; }

 private:
  HodgeCoeffs c_;
};

// psi o f o psi^{-1}.
class ConjugatedMap : public SphereMap {
 public:
  ConjugatedMap(std::shared_ptr<const FlowMap> psi, std::shared_ptr<const SphereMap> f, double inverse_tol = 1e-15)
      : psi_(std::move(psi)), f_(std::move(f)), tol_(inverse_tol) {}
  int ambient() const override { return f_->ambient(); }
  PVec apply(const PVec& x) const override;
  const FlowMap& conjugacy() const { return *psi_; }
  const SphereMap& inner() const { return *f_; }

 private:
  std::shared_ptr<const FlowMap> psi_;
  std::shared_ptr<const SphereMap> f_;
  double tol_;
};

// Y(z) = exp_z^{-1} f(R^{-1} z).
struct ErrorField {
  std::vector<PVec> points;
  std::vector<PVec> vectors;
  std::optional<HodgeCoeffs> fit;  // S^2 only
  double fit_residual = 0.0;       // max |Y - fit| on an independent check panel
};
// Samples on the quadrature grid of the fit (S^2) or on the KAM panel.
ErrorField error_field(const SphereMap& f, const GroupElement& r, int lmax);
PVec error_vector(const SphereMap& f, const GroupElement& r, const PVec& z);

inline constexpr int kKamPanelSize = 10000;
inline constexpr std::uint64_t kKamPanelSeed = 0x6b61'6d00'0001ULL;
const std::vector<PVec>& kam_panel(int ambient);

// max over the panel of d(f(x), R x).
double c0_distance(const SphereMap& f, const GroupElement& r);

// Nearby isometry: guess R_1 R_2 from the maximally displaced panel point,
// then (refine) a simplex search of the panel C^0 distance started there.
GroupElement extract_isometry(const SphereMap& f, const GroupElement& guess, bool refine = true);

struct EpsNorms {
  double c0 = 0.0;  // max d(f x, R x)
  double c1 = 0.0;  // max |nabla Y|_F in tangent frames
  double c2 = 0.0;  // max |d^2 (Y o exp_z)|_F at 0
  double hs = 0.0;  // H^s norm of the fitted error field
};

struct KamOptions {
  int derivative_panel = 2000;  // leading panel points used for c1, c2
  double fd_step = 1e-3;
  double sobolev_s = 2.0;
  long strain_quad = 4000;
  std::uint64_t strain_seed = 11;
  double inverse_tol = 1e-15;
  bool measure_strain = true;
};

EpsNorms eps_norms(const SphereMap& f, const GroupElement& r, const std::optional<HodgeCoeffs>& fit,
                   const KamOptions& opt = {});

struct KamStepReport {
  double lambda = 0.0;
  int lmax = 0;
  std::vector<EpsNorms> before, after;  // per map
  EpsNorms before_max, after_max;
  std::vector<double> strain_before, strain_after;  // int ||f*g - g||^2 per map
  std::vector<double> rotation_shift;               // d(R_i, R_i')
  double mean_field_before = 0.0;  // low modes of (1/m) sum Y_i, relative to R_i
  double mean_field_after = 0.0;   // same for the conjugated maps, relative to R_i
  double mean_field_after_extracted = 0.0;  // relative to R_i'
  HodgeCoeffs v;
  double coboundary_residual = 0.0;
  double fit_residual = 0.0;
  double inverse_residual = 0.0;  // max |psi(psi^{-1} x) - x| on the panel
};

struct KamStepResult {
  KamStepReport report;
  MapList maps;            // conjugated maps
  GeneratorTuple rotations;  // extracted R_i'
};

// Throws NotDiophantineAtDegree if some I - M_l, 1 <= l <= lmax, is singular.
KamStepResult kam_step(const MapList& maps, const GeneratorTuple& rotations, double lambda, int lmax,
                       const KamOptions& opt = {});

struct Schedule {
  double n = 10.0;
  double alpha = 2.0;
  double tau = 0.1;
  int steps = 3;
  Schedule() = default;
  Schedule(double n_, double alpha_, double tau_, int steps_);
  void validate() const;
  double lambda(int k) const;  // N^{alpha (1 + tau)^k}
};

struct KamRun {
  std::vector<KamStepReport> steps;
  std::vector<double> eps0_trace;  // initial value then one per step
  bool stagnated = false;
  std::string halted_error;  // name of the error that stopped the run, if any
  int halted_degree = 0;     // for NotDiophantineAtDegree
  MapList maps;
  GeneratorTuple rotations;
};
KamRun kam_run(const MapList& maps, const GeneratorTuple& rotations, const Schedule& schedule, int lmax,
               const KamOptions& opt = {});

struct SymmetryReport {
  double lambda1 = 0.0, lambda_d = 0.0, big_lambda_d = 0.0;
  double defect = 0.0, defect_se = 0.0;
  double lambda_d_se = 0.0;
  int d = 0;
  bool trivial = false;  // d = 2: identically zero
};
SymmetryReport top_bottom_symmetry(const MapList& maps, long n_steps, std::uint64_t seed,
                                   const PVec& x0 = PVec(), int batches = 20);

// Maps psi_{eps h_i} o R_i.
MapList perturbed_tuple(const GeneratorTuple& rotations, const std::vector<TangentField>& fields, double eps);
// Maps psi_{eps W} o R_i o psi_{eps W}^{-1}: conjugate to the isometric tuple.
MapList conjugated_tuple(const GeneratorTuple& rotations, std::shared_ptr<const VectorField> w, double eps);

}  // namespace isokam
