#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "isokam/harmonic.hpp"
#include "isokam/liegroup.hpp"
#include "isokam/sphere.hpp"

namespace isokam {

// Ambient vector field on R^n, restricted to S^{n-1}.
class VectorField {
 public:
  virtual ~VectorField() = default;
  virtual int ambient() const = 0;
  virtual PVec value(const PVec& x) const = 0;
  // Ambient derivative d/dx value(x); default is central differences.
  virtual PMat derivative(const PVec& x) const;
};

// Y(x) = (I - x x^T) P(x), P a vector-valued polynomial of degree <= 3.
class TangentField : public VectorField {
 public:
  struct Term {
    std::vector<int> exponent;  // one entry per ambient coordinate
    PVec coeff;                  // ambient vector
  };

  TangentField() = default;
  explicit TangentField(int ambient) : n_(ambient) {}
  TangentField(int ambient, std::vector<Term> terms);

  static TangentField zero(int ambient) { return TangentField(ambient); }
  // Gaussian coefficients on every monomial of degree <= max_degree, scaled so
  // the C^0 seminorm on the fixed panel equals `c0`.
  static TangentField random(int ambient, int max_degree, double c0, std::uint64_t seed);
  // Surface gradient of h(x) = sum coeff * x^exponent (scalar polynomial).
  static TangentField gradient_of(int ambient, const std::vector<std::pair<std::vector<int>, double>>& h);

  int ambient() const override { return n_; }
  int degree() const;
  const std::vector<Term>& terms() const { return terms_; }
  void add_term(std::vector<int> exponent, PVec coeff);

  PVec polynomial(const PVec& x) const;
  void polynomial_with_derivative(const PVec& x, PVec& p, PMat& dp) const;
  PVec value(const PVec& x) const override;
  PMat derivative(const PVec& x) const override;

  TangentField operator*(double s) const;
  TangentField operator-() const { return *this * -1.0; }
  TangentField operator+(const TangentField& o) const;

  // Seeded 10^4-point panel maximizations.
  double c0_norm() const;
  double c1_norm() const;

 private:
  int n_ = 0;
  std::vector<Term> terms_;
};

// A smooth self-map of S^{n-1}.
class SphereMap {
 public:
  virtual ~SphereMap() = default;
  virtual int ambient() const = 0;
  virtual PVec apply(const PVec& x) const = 0;
  // Ambient differential restricted to T_x (columns for tangent inputs are
  // meaningful); default central differences with step 1e-5.
  virtual PMat differential(const PVec& x) const;
};

class IsometryMap : public SphereMap {
 public:
  explicit IsometryMap(GroupElement r) : r_(std::move(r)) {}
  int ambient() const override { return r_.dim(); }
  PVec apply(const PVec& x) const override { return r_.mat() * x; }
  PMat differential(const PVec&) const override { return r_.mat(); }
  const GroupElement& rotation() const { return r_; }

 private:
  GroupElement r_;
};

// f(x) = exp_{Rx}(Y(Rx)).
class PerturbedMap : public SphereMap {
 public:
  PerturbedMap(GroupElement r, TangentField y);
  int ambient() const override { return r_.dim(); }
  const GroupElement& rotation() const { return r_; }
  const TangentField& field() const { return y_; }
  PVec apply(const PVec& x) const override;
  PMat differential(const PVec& x) const override;

 private:
  GroupElement r_;
  TangentField y_;
};

// x -> exp_x(V(x)) for an arbitrary VectorField (tangential part used).
class FlowMap : public SphereMap {
 public:
  explicit FlowMap(std::shared_ptr<const VectorField> v) : v_(std::move(v)) {}
  int ambient() const override { return v_->ambient(); }
  PVec apply(const PVec& x) const override;
  PMat differential(const PVec& x) const override;
  // y with exp_y(V(y)) = x, by fixed-point iteration.
  PVec inverse(const PVec& x, double tol = 1e-15, int max_iter = 50) const;
  const VectorField& field() const { return *v_; }

 private:
  std::shared_ptr<const VectorField> v_;
};

PVec apply_map(const SphereMap& f, const PVec& x);
// d x d matrix between tangent_frame(x) and tangent_frame(f(x)).
PMat jacobian(const SphereMap& f, const PVec& x);
PMat jacobian_fd(const SphereMap& f, const PVec& x, double h = 1e-5);
PMat differential_fd(const SphereMap& f, const PVec& x, double h = 1e-5);

using MapList = std::vector<std::shared_ptr<const SphereMap>>;
MapList as_map_list(const std::vector<PerturbedMap>& maps);

struct LyapunovOptions {
  int batches = 20;
  long burn_in = 0;
  long trace_every = 0;  // 0: no trace
};

struct LyapunovSpectrum {
  PVec exponents;      // descending
  PVec standard_errors;
  PVec partial_sums;   // Lambda_r, r = 1..d
  PVec partial_sum_se;
  PVec logdet_average;  // 1-vector: orbit average of ln|det J|
  Mat batch_means;      // d x batches, rows in exponent order
  long n_steps = 0;
  std::vector<std::pair<long, PVec>> trace;  // (step, running exponents)
  double max_norm_drift = 0.0;
};

LyapunovSpectrum lyapunov_spectrum(const MapList& maps, const PVec& x0, long n_steps,
                                   std::uint64_t seed, const LyapunovOptions& opt = {});
LyapunovSpectrum lyapunov_spectrum(const std::vector<PerturbedMap>& maps, const PVec& x0,
                                   long n_steps, std::uint64_t seed, const LyapunovOptions& opt = {});

struct RateEstimate {
  double value = 0.0;
  double se = 0.0;
};
RateEstimate lambda_r_estimate(const MapList& maps, int r, const PVec& x0, const PMat& frame0,
                               long n_steps, std::uint64_t seed, int batches = 20);

struct EmpiricalMeasure {
  std::vector<PVec> points;
  Vec weights;
  long burn_in = 10000;
  std::uint64_t seed = 0;
};
// Orbit occupation measure, keeping every `thin`-th point after burn-in.
EmpiricalMeasure empirical_measure(const MapList& maps, const PVec& x0, long n_steps,
                                   std::uint64_t seed, long burn_in = 10000, long thin = 1);

struct DiscrepancyEstimate {
  double value = 0.0;  // |int phi d mu_emp - int phi dvol|
  double signed_value = 0.0;
  double se = 0.0;     // batch-means SE of the orbit average
};
DiscrepancyEstimate haar_discrepancy(const HarmonicCoeffs& phi, const EmpiricalMeasure& orbit,
                                     int batches = 20);

}  // namespace isokam
