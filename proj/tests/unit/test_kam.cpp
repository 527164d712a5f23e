#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "isokam/kam.hpp"
#include "test_systems.hpp"

using namespace isokam;

namespace {

HodgeCoeffs random_hodge(int lmax, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  HodgeCoeffs h(lmax);
  for (int i = 1; i < harmonic_count(lmax); ++i) {
    h.a.coeffs()(i) = n01(rng);
    h.b.coeffs()(i) = n01(rng);
  }
  return h;
}

MapList isometries(const GeneratorTuple& s) {
  MapList out;
  for (const auto& g : s) out.push_back(std::make_shared<IsometryMap>(g));
  return out;
}

KamOptions fast_options() {
  KamOptions o;
  o.derivative_panel = 200;
  o.measure_strain = false;
  return o;
}

}  // namespace

TEST(Hodge, RoundTripThroughField) {
  const HodgeCoeffs h = random_hodge(6, 1);
  const HodgeCoeffs back = analyze_field(HodgeField(h), 6);
  EXPECT_LT((back.a.coeffs() - h.a.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((back.b.coeffs() - h.b.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
  // The field norm weights each potential by its Casimir.
  double l2 = 0.0;
  for (int l = 1; l <= 6; ++l) l2 += casimir(l) * (h.a.block(l).squaredNorm() + h.b.block(l).squaredNorm());
  EXPECT_NEAR(h.l2_norm(), std::sqrt(l2), 1e-12 * std::sqrt(l2));
}

TEST(Hodge, ConstantAndRotationFields) {
  // (I - x x^T) c = grad(c . x); omega cross x = x cross grad(-omega . x).
  TangentField y(3);
  PVec c(3);
  c << 0.3, -0.2, 0.5;
  y.add_term({0, 0, 0}, c);
  const HodgeCoeffs h = analyze_field(y, 4);
  const double k = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(h.a(1, -1), k * c(1), 1e-13);
  EXPECT_NEAR(h.a(1, 0), k * c(2), 1e-13);
  EXPECT_NEAR(h.a(1, 1), k * c(0), 1e-13);
  EXPECT_LT(h.b.coeffs().norm(), 1e-13);
  TangentField rot(3);
  const Eigen::Vector3d w(0.1, 0.4, -0.2);
  for (int j = 0; j < 3; ++j) {
    std::vector<int> e(3, 0);
    e[j] = 1;
    const Eigen::Vector3d col = w.cross(Eigen::Vector3d::Unit(j));
    rot.add_term(e, PVec(col));
  }
  const HodgeCoeffs hr = analyze_field(rot, 4);
  EXPECT_LT(hr.a.coeffs().norm(), 1e-13);
  EXPECT_NEAR(hr.b(1, 1), -k * w(0), 1e-13);
  EXPECT_NEAR(hr.b(1, -1), -k * w(1), 1e-13);
}

TEST(ErrorField, RecoversPerturbation) {
  const auto y = TangentField::random(3, 3, 0.05, 2);
  const GroupElement r = haar_sample(3, 3);
  const PerturbedMap f(r, y);
  const ErrorField e = error_field(f, r, 8);
  ASSERT_TRUE(e.fit.has_value());
  for (std::size_t i = 0; i < e.points.size(); i += 37) EXPECT_LT((e.vectors[i] - y.value(e.points[i])).norm(), 1e-14);
  EXPECT_LT(e.fit_residual, 1e-12);
  double oracle = 0.0;
  for (const auto& x : kam_panel(3)) oracle = std::max(oracle, y.value(r.mat() * x).norm());
  EXPECT_NEAR(c0_distance(f, r), oracle, 1e-14);
  const ErrorField z = error_field(IsometryMap(r), r, 8);
  EXPECT_LT(z.fit->l2_norm(), 1e-14);
  // S^3: samples only.
  const ErrorField e4 = error_field(PerturbedMap(haar_sample(4, 4), TangentField::random(4, 2, 0.1, 5)),
                                    haar_sample(4, 4), 8);
  EXPECT_FALSE(e4.fit.has_value());
  EXPECT_EQ(e4.points.size(), static_cast<std::size_t>(kKamPanelSize));
}

TEST(ExtractIsometry, ExactForRotations) {
  const GroupElement r = haar_sample(3, 6);
  const GroupElement g = exp_so(hat(Eigen::Vector3d(0.02, -0.01, 0.03))) * r;
  // f = g is an isometry near the guess r.
  const GroupElement got = extract_isometry(IsometryMap(g), r);
  EXPECT_LT(distance(got, g), 1e-10);
  EXPECT_LT(distance(extract_isometry(IsometryMap(g), r, false), g), 1e-10);
  const GroupElement again = extract_isometry(IsometryMap(g), got);
  EXPECT_LT(distance(again, g), 1e-12);
  const GroupElement r4 = haar_sample(4, 7);
  const GroupElement g4 = plane_rotation(4, 1, 3, 0.05) * r4;
  EXPECT_LT(distance(extract_isometry(IsometryMap(g4), r4), g4), 1e-10);
  EXPECT_THROW(extract_isometry(IsometryMap(rot_z(2.0)), GroupElement::identity(3)), TooFarFromIsometry);
}

TEST(ExtractIsometry, RefinementImprovesConstruction) {
  const GroupElement r = haar_sample(3, 11);
  const PerturbedMap f(r, TangentField::random(3, 3, 1e-3, 12));
  const double seed = c0_distance(f, extract_isometry(f, r, false));
  const double refined = c0_distance(f, extract_isometry(f, r));
  EXPECT_LE(refined, seed);
  EXPECT_LE(refined, c0_distance(f, r));
}

TEST(ConjugatedMap, IdentityConjugatesToIdentity) {
  auto w = std::make_shared<TangentField>(fixtures::conjugator_field() * 0.01);
  const ConjugatedMap m(std::make_shared<FlowMap>(w), std::make_shared<IsometryMap>(GroupElement::identity(3)));
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const PVec x = random_sphere_point(3, rng);
    EXPECT_LT((m.apply(x) - x).norm(), 1e-14);
  }
}

TEST(KamStep, IsometricTupleIsFixed) {
  const auto s = reference_pair();
  const auto st = kam_step(isometries(s), s, 10.0, 6, fast_options());
  EXPECT_LT(st.report.v.l2_norm(), 1e-14);
  EXPECT_LT(st.report.after_max.c0, 1e-11);
  for (double d : st.report.rotation_shift) EXPECT_LT(d, 1e-11);
}

TEST(KamStep, ReducesLowModes) {
  const auto s = reference_pair();
  const auto w = std::make_shared<TangentField>(fixtures::conjugator_field());
  const auto maps = conjugated_tuple(s, w, 1e-3);
  const auto st = kam_step(maps, s, 10.0, 8, fast_options());
  const auto& r = st.report;
  EXPECT_GT(r.mean_field_before, 1e-4);
  EXPECT_LT(r.mean_field_after, 1e-2 * r.mean_field_before);
  EXPECT_LT(r.after_max.c0, 1e-2 * r.before_max.c0);
  EXPECT_LT(r.coboundary_residual, 1e-12);
  EXPECT_LT(r.inverse_residual, 1e-13);
  ASSERT_EQ(st.maps.size(), 2u);
}

TEST(KamStep, RejectsResonantTuple) {
  GeneratorTuple s({GroupElement::identity(3), GroupElement::identity(3)});
  try {
    kam_step(isometries(s), s, 10.0, 4, fast_options());
    FAIL();
  } catch (const NotDiophantineAtDegree& e) {
    EXPECT_EQ(e.degree(), 1);
  }
  const auto run = kam_run(isometries(s), s, Schedule(), 4, fast_options());
  EXPECT_EQ(run.halted_error, "NotDiophantineAtDegree");
  EXPECT_EQ(run.halted_degree, 1);
  EXPECT_TRUE(run.steps.empty());
}

TEST(Schedule, ValidatesAndGrows) {
  EXPECT_THROW(Schedule(1.0, 2.0, 0.1, 3).validate(), ConfigInvalid);
  EXPECT_THROW(Schedule(10.0, 0.0, 0.1, 3).validate(), ConfigInvalid);
  EXPECT_THROW(Schedule(10.0, 2.0, 0.125, 3).validate(), ConfigInvalid);
  EXPECT_THROW(Schedule(10.0, 2.0, 0.1, 0).validate(), ConfigInvalid);
  const Schedule s(10.0, 2.0, 0.1, 3);
  EXPECT_NO_THROW(s.validate());
  EXPECT_NEAR(s.lambda(0), 100.0, 1e-12);
  EXPECT_NEAR(s.lambda(2), std::pow(10.0, 2.0 * 1.21), 1e-9);
}

TEST(Symmetry, TrivialCases) {
  const auto s2 = top_bottom_symmetry(isometries(reference_pair()), 10000, 1);
  EXPECT_TRUE(s2.trivial);
  EXPECT_EQ(s2.d, 2);
  const GeneratorTuple s4({haar_sample(4, 9), haar_sample(4, 10)});
  const auto r = top_bottom_symmetry(isometries(s4), 20000, 2);
  EXPECT_FALSE(r.trivial);
  EXPECT_LT(std::abs(r.defect), 1e-12);
  EXPECT_LT(std::abs(r.lambda1), 1e-12);
}
