// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 = all pass). `acceptance 3 7` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isokam/grassmann.hpp"
#include "isokam/harmonic.hpp"
#include "isokam/kam.hpp"
#include "isokam/rds.hpp"
#include "isokam/strain.hpp"
#include "isokam/wordsynth.hpp"
#include "test_systems.hpp"

using namespace isokam;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

MapList isometries(const GeneratorTuple& s) {
  MapList out;
  for (const auto& g : s) out.push_back(std::make_shared<IsometryMap>(g));
  return out;
}

Mat gaussian_unit(int n, double norm, Rng& rng) {
  Mat a = gaussian_matrix(n, n, rng);
  return a * (norm / a.norm());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double circle_distance(double angle) {
  double t = std::fmod(angle, 2.0 * M_PI);
  if (t < 0) t += 2.0 * M_PI;
  return std::sqrt(2.0) * std::min(t, 2.0 * M_PI - t);
}

// 1. alpha_2 from lambda_r_taylor by polarization: (T(L) + T(-L)) / 2.
Outcome closed_form_anchors() {
  double worst = 0.0;
  for (int d = 1; d <= 6; ++d) {
    const Mat id = Mat::Identity(d, d);
    Mat p = Mat::Zero(d, d);
    p(0, 0) = 1.0;
    for (int r = 1; r <= d; ++r) {
      const double a_id = 0.5 * (lambda_r_taylor(id, r) + lambda_r_taylor(-id, r));
      const double a_p = 0.5 * (lambda_r_taylor(p, r) + lambda_r_taylor(-p, r));
      worst = std::max(worst, std::abs(a_id - (-r / 2.0)));
      worst = std::max(worst, std::abs(a_p - (r / (2.0 * d) - r * (r + 2.0) / (d * (d + 2.0)))));
    }
  }
  return {worst <= 1e-12, fmt("max |alpha2 - closed form| = %.2e over d <= 6 (tol 1e-12)", worst)};
}

// 2. Grassmann log-det Taylor expansion against Monte Carlo.
Outcome grassmann_taylor() {
  Timer t;
  const int d = 4, r = 2, count = 20;
  const long samples = 1000000;
  const double norm = 0.05;
  Rng rng(20240501);
  int within = 0;
  double worst_margin = -1e300;
  std::vector<double> ratios;
  for (int k = 0; k < count; ++k) {
    const Mat l = gaussian_unit(d, norm, rng);
    const std::uint64_t seed = 5000 + k;
    const auto mc = lambda_r_mc(l, r, samples, seed);
    const double err = std::abs(mc.value - lambda_r_taylor(l, r));
    const double tol = 5.0 * std::pow(norm, 3) + 3.0 * mc.se;
    within += err <= tol;
    worst_margin = std::max(worst_margin, err / tol);
    const auto half = lambda_r_mc(0.5 * l, r, samples, seed);
    ratios.push_back(std::abs(half.value - lambda_r_taylor(0.5 * l, r)) / err);
  }
  const double med = median(ratios);
  const double secs = t.seconds();
  return {within == count && med <= 0.35 && secs <= 120.0,
          fmt("%d/%d within 5|L|^3+3SE (max err/tol %.2f); median err ratio %.3f (<= 0.35); %.0f s (<= 120)",
              within, count, worst_margin, med, secs)};
}

// 3. Moments of a uniform point on S^{d-1}.
Outcome sphere_moment_check() {
  Timer t;
  std::ostringstream os;
  bool ok = true;
  for (int d : {3, 5}) {
    const auto m = sphere_moments(d, 1000000, 7);
    const double z2 = std::abs(m.m2.value - 1.0 / d) / m.m2.se;
    const double z4 = std::abs(m.m4.value - 3.0 / (d * (d + 2.0))) / m.m4.se;
    const double z22 = std::abs(m.m22.value - 1.0 / (d * (d + 2.0))) / m.m22.se;
    ok = ok && z2 <= 3 && z4 <= 3 && z22 <= 3;
    os << fmt("d=%d |z| = %.2f %.2f %.2f; ", d, z2, z4, z22);
  }
  const double secs = t.seconds();
  os << fmt("%.1f s (<= 30)", secs);
  return {ok && secs <= 30.0, os.str()};
}

// 4. Isometric systems have vanishing exponents.
Outcome isometric_nullity() {
  PVec x0(3);
  x0 << 0.6, 0.0, 0.8;
  const auto sp = lyapunov_spectrum(isometries(reference_pair()), x0, 100000, 1);
  const double worst = sp.exponents.cwiseAbs().maxCoeff();
  return {worst <= 1e-8, fmt("max |lambda_i| = %.2e (tol 1e-8)", worst)};
}

// 5. Second-order strain prediction of the top exponent, Y_2 = -Y_1 on S^2.
Outcome strain_expansion() {
  const auto s = reference_pair();
  const TangentField y = TangentField::random(3, 3, 1.0, 12345);
  PVec x0(3);
  x0 << 0.6, 0.0, 0.8;
  double res[2], tol[2], corrected[2];
  const double eps_list[2] = {0.02, 0.01};
  for (int k = 0; k < 2; ++k) {
    const double eps = eps_list[k];
    const std::vector<PerturbedMap> maps = {PerturbedMap(s[0], y * eps), PerturbedMap(s[1], y * (-eps))};
    const auto sp = lyapunov_spectrum(maps, x0, 1000000, 7);
    double ec = 0.0, enc = 0.0;
    for (const auto& m : maps) {
      const auto n = strain_norms(m, 200000, 3);
      ec += n.h0_e_c_sq.value;
      enc += n.h0_e_nc_sq.value;
    }
    // d = 2, r = 1, m = 2.
    const double predicted = -ec / (2.0 * 2.0 * 2.0) + 0.25 * 0.5 * enc;
    res[k] = std::abs(sp.exponents(0) - predicted);
    tol[k] = 3.0 * sp.standard_errors(0) + 10.0 * eps * eps * eps;
    corrected[k] = std::abs(sp.exponents(0) - (-ec / (2.0 * 2.0) + 0.25 * 0.5 * enc));
  }
  const double ratio = res[1] / res[0];
  return {res[0] <= tol[0] && ratio <= 0.35,
          fmt("eps=0.02 residual %.2e <= %.2e; eps=0.01 residual %.2e; ratio %.3f (<= 0.35) "
              "[diagnostic: E_C coefficient -r/2m gives %.2e, %.2e]",
              res[0], tol[0], res[1], ratio, corrected[0], corrected[1])};
}

// 6. Polylogarithmic spectral gap of the reference pair.
Outcome gap_polylog() {
  const auto prof = gap_profile(reference_pair(), 64, 8);
  double min_gap = 1e300, tame_low = 0.0, tame_high = 0.0;
  for (const auto& r : prof.records) {
    min_gap = std::min(min_gap, r.gap);
    if (r.degree < 2) continue;
    const double t = r.inverse_norm / std::pow(std::log(r.casimir), 4);
    if (r.degree <= 32) {
      tame_low = std::max(tame_low, t);
    } else {
      tame_high = std::max(tame_high, t);
    }
  }
  const bool ok = min_gap > 0.0 && prof.violations == 0 && prof.alpha <= 4.0 && std::isfinite(tame_low) &&
                  tame_high <= tame_low;
  return {ok, fmt("min gap %.4f; fit D2 = %.3f alpha = %.3f (<= 4), %d violations; tameness max %.3f on 2..32, "
                  "%.4f on 33..64",
                  min_gap, prof.d2, prof.alpha, prof.violations, tame_low, tame_high)};
}

// 7. Solovay-Kitaev contraction and inverse-free compilation.
Outcome solovay_kitaev_check() {
  Timer t;
  const auto s = reference_pair();
  const EpsilonNet net = epsilon_net_bfs(s, kSkBasin, 40, true);
  // Level accuracy: worst distance over the panel at each depth.
  std::vector<double> level(4, 0.0), finals;
  double per_target = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto d = solovay_kitaev_trace(haar_sample(3, 1000 + i), net, 3);
    for (int k = 0; k < 4; ++k) level[k] = std::max(level[k], d[k]);
    for (int k = 0; k < 3; ++k) per_target = std::max(per_target, d[k + 1] / std::pow(d[k], 1.5));
    finals.push_back(d.back());
  }
  double c = 0.0;
  bool monotone = true;
  for (int k = 0; k < 3; ++k) {
    monotone = monotone && level[k + 1] < level[k];
    c = std::max(c, level[k + 1] / std::pow(level[k], 1.5));
  }
  const double med = median(finals);
  int compiled = 0;
  long longest = 0, inverse_letters = 0;
  for (int i = 0; i < 20; ++i) {
    const GroupElement target = haar_sample(3, 2000 + i);
    const Word w = compile_without_inverses(target, s, 0.05, net);
    for (const auto& l : w.letters()) inverse_letters += l.power < 0;
    compiled += so3_distance(w.value().mat(), target.mat()) < 0.05;
    longest = std::max(longest, w.length());
  }
  const bool ok = monotone && c <= 10.0 && med <= 1e-3 && compiled == 20 && inverse_letters == 0;
  return {ok, fmt("net %ld words, radius %.3f; level max d_k %.2e %.2e %.2e %.2e, fitted c = %.3f (<= 10), "
                  "monotone %s [per-target max ratio %.2f]; median d_3 = %.2e (<= 1e-3); "
                  "inverse-free %d/20 within 0.05, %ld inverse letters, longest %ld; %.0f s",
                  net.size(), net.covering_radius(), level[0], level[1], level[2], level[3], c,
                  monotone ? "yes" : "no", per_target, med, compiled, inverse_letters, longest, t.seconds())};
}

// 8. Pigeonhole approximate inverse: accuracy and minimality.
Outcome pigeonhole() {
  int good = 0;
  long max_n = 0;
  for (int i = 0; i < 20; ++i) {
    const GroupElement h = haar_sample(3, 3000 + i);
    const auto r = approximate_inverse(h, 0.05);
    const double alpha = rotation_angle(h.mat());
    bool minimal = true;
    for (long m = 1; m < r.n; ++m) minimal = minimal && circle_distance((m + 1) * alpha) >= 0.05;
    good += r.achieved < 0.05 && minimal;
    max_n = std::max(max_n, r.n);
  }
  return {good == 20, fmt("%d/20 accurate and minimal (angle-scan oracle); largest n = %ld", good, max_n)};
}

// 9. KAM step efficacy and a short run.
Outcome kam_efficacy() {
  Timer t;
  const auto s = reference_pair();
  const auto w = std::make_shared<TangentField>(fixtures::conjugator_field());
  const auto maps = conjugated_tuple(s, w, 1e-3);
  const auto st = kam_step(maps, s, 10.0, 16);
  const auto& r = st.report;
  const double reduction = r.mean_field_before / r.mean_field_after;
  bool c0_ok = true;
  for (std::size_t i = 0; i < r.before.size(); ++i) c0_ok = c0_ok && r.after[i].c0 <= r.before[i].c0;
  KamOptions opt;
  opt.measure_strain = false;
  const auto run = kam_run(maps, s, Schedule(10.0, 2.0, 0.1, 3), 16, opt);
  bool decreasing = run.halted_error.empty() && run.eps0_trace.size() == 4;
  for (std::size_t k = 0; k + 1 < run.eps0_trace.size(); ++k)
    decreasing = decreasing && run.eps0_trace[k + 1] < run.eps0_trace[k];
  std::ostringstream trace;
  for (double e : run.eps0_trace) trace << fmt("%.2e ", e);
  return {reduction >= 100.0 && c0_ok && decreasing,
          fmt("mean field %.2e -> %.2e (x%.0f, >= 100; after extraction %.2e); C0 %.2e -> %.2e; "
              "run trace %s%s; %.0f s",
              r.mean_field_before, r.mean_field_after, reduction, r.mean_field_after_extracted, r.before_max.c0,
              r.after_max.c0, trace.str().c_str(), run.halted_error.c_str(), t.seconds())};
}

// 10. Top/bottom exponent symmetry on S^3.
Outcome top_bottom() {
  Timer t;
  const GeneratorTuple rs({haar_sample(4, 101), haar_sample(4, 202)});
  const TangentField y = TangentField::random(4, 3, 28.0, 2024);
  PVec x0(4);
  x0 << 0.5, 0.5, 0.5, 0.5;
  bool ok = true;
  double ratio[2];
  std::ostringstream os;
  const double eps_list[2] = {0.02, 0.01};
  for (int k = 0; k < 2; ++k) {
    const auto sym = top_bottom_symmetry(perturbed_tuple(rs, {y, -y}, eps_list[k]), 4000000, 99, x0);
    const bool within = sym.defect <= 0.5 * std::abs(sym.lambda_d) + 3.0 * sym.defect_se;
    ok = ok && within;
    ratio[k] = sym.defect / std::abs(sym.lambda_d);
    os << fmt("eps=%.2f defect %.2e +- %.1e, lambda_d %.3e, ratio %.4f; ", eps_list[k], sym.defect, sym.defect_se,
              sym.lambda_d, ratio[k]);
  }
  ok = ok && ratio[1] < ratio[0];
  os << fmt("%.0f s", t.seconds());
  return {ok, os.str()};
}

// 11. Isometry extraction: exact recovery and the local competitor panel.
Outcome extraction() {
  double exact_err = 0.0;
  for (int n : {3, 4, 5}) {
    for (int k = 0; k < 5; ++k) {
      const GroupElement g = haar_sample(n, 700 + 10 * n + k);
      Rng rng(800 + k);
      Mat a = gaussian_unit(n, 0.05, rng);
      a = (a - a.transpose()).eval();
      const GroupElement guess = exp_so(a) * g;
      exact_err = std::max(exact_err, distance(extract_isometry(IsometryMap(g), guess), g));
    }
  }
  const double eps = 1e-3;
  int beaten = 0, total = 0;
  double worst = -1e300, seed_gap = 0.0;
  for (int n : {3, 4}) {
    const GroupElement r = haar_sample(n, 900 + n);
    const PerturbedMap f(r, TangentField::random(n, 3, 1.0, 910 + n) * eps);
    const GroupElement x = extract_isometry(f, r);
    const double dx = c0_distance(f, x);
    seed_gap = std::max(seed_gap, c0_distance(f, extract_isometry(f, r, false)) - dx);
    Rng rng(920 + n);
    for (int j = 0; j < 20; ++j) {
      // Competitors at the perturbation scale around R, and a tight ring around the extraction.
      Mat a = gaussian_unit(n, 1.0, rng);
      a = (a - a.transpose()).eval();
      const Mat a_unit = a / a.norm();
      for (const Mat& cand : {Mat(exp_so(eps * a).mat() * r.mat()), Mat(exp_so(0.02 * dx * a_unit).mat() * x.mat())}) {
        const double dc = c0_distance(f, GroupElement(cand));
        ++total;
        beaten += dx > dc + 1e-6;
        worst = std::max(worst, dx - dc);
      }
    }
  }
  return {exact_err <= 1e-9 && beaten == 0,
          fmt("exact recovery error %.2e (tol 1e-9); perturbed: %d/%d competitors beat the extraction by > 1e-6 "
              "(max advantage %.2e); refinement gained up to %.2e over the seed construction",
              exact_err, beaten, total, worst, seed_gap)};
}

// 12. Subspace determinant identities.
Outcome determinant_identities() {
  Rng rng(12012);
  std::uniform_int_distribution<int> dim(2, 6);
  double cocycle = 0.0, basis = 0.0, full = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = dim(rng);
    const int r = std::uniform_int_distribution<int>(1, n)(rng);
    const Mat i = Mat::Identity(n, n);
    const Mat l1 = i + gaussian_unit(n, 0.5, rng), l2 = i + gaussian_unit(n, 0.5, rng);
    const SubspaceFrame e = haar_grassmannian(n, r, rng);
    const double lhs = subspace_det(l2 * l1, e);
    const double rhs = subspace_det(l2, SubspaceFrame::from_span(l1 * e.basis)) * subspace_det(l1, e);
    cocycle = std::max(cocycle, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    const Mat mix = Mat::Identity(r, r) + gaussian_unit(r, 0.5, rng);
    const double v0 = subspace_det(l1, e);
    basis = std::max(basis, std::abs(subspace_det(l1, e.basis * mix, i, i) - v0) / std::max(1.0, v0));
    const double da = std::abs(l1.determinant());
    full = std::max(full, std::abs(subspace_det(l1, i, i, i) - da) / std::max(1.0, da));
  }
  return {cocycle <= 1e-9 && basis <= 1e-9 && full <= 1e-12,
          fmt("1000 instances: cocycle %.1e, basis change %.1e (tol 1e-9); det(A, I, I | R^n) %.1e (tol 1e-12)",
              cocycle, basis, full)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"closed-form Taylor anchors", closed_form_anchors},
      {"Grassmann Taylor vs Monte Carlo", grassmann_taylor},
      {"sphere moments", sphere_moment_check},
      {"isometric Lyapunov nullity", isometric_nullity},
      {"strain expansion of the top exponent", strain_expansion},
      {"polylog spectral gap", gap_polylog},
      {"Solovay-Kitaev contraction", solovay_kitaev_check},
      {"pigeonhole inverse", pigeonhole},
      {"KAM step efficacy", kam_efficacy},
      {"top/bottom exponent symmetry", top_bottom},
      {"isometry extraction", extraction},
      {"subspace determinant identities", determinant_identities},
  };
  std::set<int> only;
  for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
