#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "isokam/harmonic.hpp"

using namespace isokam;

namespace {

Eigen::Vector3d unit(double a, double b, double c) { return Eigen::Vector3d(a, b, c).normalized(); }

HarmonicCoeffs random_coeffs(int lmax, std::uint64_t seed) {
  Rng rng(seed);
  HarmonicCoeffs c(lmax);
  std::normal_distribution<double> n01;
  for (int i = 0; i < c.coeffs().size(); ++i) c.coeffs()(i) = n01(rng);
  return c;
}

}  // namespace

TEST(RealHarmonics, OrthonormalUnderExactGrid) {
  const int lmax = 10;
  const SphereGrid grid = exact_grid(2 * lmax);
  EXPECT_NEAR(grid.weights.sum(), 1.0, 1e-14);
  const int n = harmonic_count(lmax);
  Mat gram = Mat::Zero(n, n);
  Vec y(n);
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    real_harmonics(grid.points[p], lmax, y.data());
    gram += grid.weights(p) * y * y.transpose();
  }
  EXPECT_LT((gram - Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RealHarmonics, DegreeOneConvention) {
  const Eigen::Vector3d x = unit(0.3, -0.5, 0.8);
  double y[4];
  real_harmonics(x, 1, y);
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_NEAR(y[harmonic_index(1, -1)], std::sqrt(3.0) * x.y(), 1e-15);
  EXPECT_NEAR(y[harmonic_index(1, 0)], std::sqrt(3.0) * x.z(), 1e-15);
  EXPECT_NEAR(y[harmonic_index(1, 1)], std::sqrt(3.0) * x.x(), 1e-15);
}

TEST(RealHarmonics, GradientMatchesFiniteDifference) {
  const int lmax = 6;
  const int n = harmonic_count(lmax);
  const Eigen::Vector3d x = unit(0.2, 0.7, -0.4);
  Vec y(n);
  std::vector<Eigen::Vector3d> g(n);
  real_harmonics(x, lmax, y.data(), g.data());
  // Tangent directions: derivative of Y along great circles.
  Eigen::Vector3d t1 = x.cross(Eigen::Vector3d::UnitX()).normalized();
  Eigen::Vector3d t2 = x.cross(t1);
  const double h = 1e-6;
  Vec yp(n), ym(n);
  for (const auto& t : {t1, t2}) {
    real_harmonics(std::cos(h) * x + std::sin(h) * t, lmax, yp.data());
    real_harmonics(std::cos(h) * x - std::sin(h) * t, lmax, ym.data());
    for (int i = 0; i < n; ++i) EXPECT_NEAR(g[i].dot(t), (yp(i) - ym(i)) / (2 * h), 1e-6) << i;
  }
  for (int i = 0; i < n; ++i) EXPECT_NEAR(g[i].dot(x), 0.0, 1e-13);
}

TEST(Analyze, RoundTrip) {
  const int lmax = 8;
  const HarmonicCoeffs c = random_coeffs(lmax, 3);
  const SphereGrid grid = exact_grid(2 * lmax);
  Vec vals(grid.points.size());
  for (std::size_t p = 0; p < grid.points.size(); ++p) vals(p) = c.evaluate(grid.points[p]);
  const HarmonicCoeffs back = analyze(grid, vals, lmax);
  EXPECT_LT((back.coeffs() - c.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(WignerBlock, DegreeOneIsPermutedRotation) {
  const GroupElement g = haar_sample(3, 21);
  Mat p = Mat::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;  // (x, y, z) -> (y, z, x)
  EXPECT_LT((wigner_block(g, 1) - p * g.mat() * p.transpose()).norm(), 1e-13);
}

TEST(WignerBlock, RepresentsRotation) {
  const int l = 7;
  const GroupElement g = haar_sample(3, 22);
  const Mat w = wigner_block(g, l);
  EXPECT_LT((w.transpose() * w - Mat::Identity(2 * l + 1, 2 * l + 1)).norm(), 1e-12);
  HarmonicCoeffs c(l);
  c.block(l) = random_coeffs(l, 23).block(l);
  HarmonicCoeffs rc(l);
  rc.block(l) = w * c.block(l);
  for (const auto& x : {unit(1, 2, 3), unit(-1, 0.5, 0.1), unit(0, 0, 1)})
    EXPECT_NEAR(rc.evaluate(x), c.evaluate(g.mat().transpose() * x), 1e-12);
  const GroupElement h = haar_sample(3, 24);
  EXPECT_LT((wigner_block(g * h, l) - w * wigner_block(h, l)).norm(), 1e-12);
}

TEST(GapProfile, ReferencePairHasPositiveGaps) {
  const auto prof = gap_profile(reference_pair(), 16, 8);
  ASSERT_EQ(prof.records.size(), 16u);
  for (const auto& r : prof.records) {
    EXPECT_GT(r.gap, 0.0) << r.degree;
    EXPECT_LE(r.norm, 1.0 + 1e-12);
    EXPECT_LT(r.power_norm, 1.0);
    EXPECT_GT(diophantine_margin(reference_pair(), r.degree), 0.0);
  }
  EXPECT_EQ(prof.violations, 0);
  EXPECT_LE(prof.alpha, 4.0);
}

TEST(Coboundary, SolvesAndRejectsResonance) {
  const auto s = reference_pair();
  const int lmax = 12;
  std::vector<HarmonicBlock> blocks;
  for (int l = 0; l <= lmax; ++l) blocks.push_back(make_block(s, l));
  HarmonicCoeffs phi = random_coeffs(lmax, 31);
  phi(0, 0) = 0.0;
  const HarmonicCoeffs psi = solve_coboundary(blocks, phi);
  EXPECT_LT(coboundary_residual(blocks, psi, phi), 1e-10);
  // psi - A psi = phi, checked through apply_averaging.
  const HarmonicCoeffs lhs = psi - apply_averaging(blocks, psi);
  EXPECT_LT((lhs.coeffs().tail(lhs.coeffs().size() - 1) - phi.coeffs().tail(phi.coeffs().size() - 1))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  GeneratorTuple trivial({GroupElement::identity(3), GroupElement::identity(3)});
  try {
    solve_coboundary(trivial, phi);
    FAIL();
  } catch (const NotDiophantineAtDegree& e) {
    EXPECT_EQ(e.degree(), 1);
  }
  // A single rotation about z fixes the zonal harmonics in every degree.
  GeneratorTuple single({rot_z(1.0)});
  EXPECT_THROW(solve_coboundary(single, phi), NotDiophantineAtDegree);
}

TEST(SmoothTruncate, SplitsByCasimir) {
  const HarmonicCoeffs x = random_coeffs(9, 41);
  const auto [t, r] = smooth_truncate(x, 20.0);  // c_l < 20 for l <= 3
  EXPECT_LT(((t + r).coeffs() - x.coeffs()).norm(), 1e-15);
  for (int l = 0; l <= 9; ++l) {
    if (casimir(l) < 20.0) {
      EXPECT_EQ((r.block(l)).norm(), 0.0);
    } else {
      EXPECT_EQ((t.block(l)).norm(), 0.0);
    }
  }
  double hs = 0.0;
  for (int l = 0; l <= 9; ++l) hs += std::pow(1.0 + casimir(l), 2.0) * x.block(l).squaredNorm();
  EXPECT_NEAR(x.hs_norm_sq(2.0), hs, 1e-10 * hs);
  // High modes are controlled by a stronger norm.
  EXPECT_LE(r.hs_norm_sq(1.0), x.hs_norm_sq(3.0) / std::pow(1.0 + 20.0, 2.0) + 1e-12);
}
