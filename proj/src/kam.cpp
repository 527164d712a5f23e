#include "isokam/kam.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <gsl/gsl_multimin.h>

#include "isokam/parallel.hpp"

namespace isokam {

// ---------------------------------------------------------------------------
// Hodge representation

double HodgeCoeffs::low_mode_norm(double lambda) const {
  double s = 0.0;
  for (int l = 1; l <= lmax(); ++l) {
    if (!(casimir(l) < lambda)) break;
    s += casimir(l) * (a.block(l).squaredNorm() + b.block(l).squaredNorm());
  }
  return std::sqrt(s);
}

double HodgeCoeffs::hs_norm_sq(double s) const {
  double t = 0.0;
  for (int l = 1; l <= lmax(); ++l)
    t += std::pow(1.0 + casimir(l), s) * casimir(l) * (a.block(l).squaredNorm() + b.block(l).squaredNorm());
  return t;
}

HodgeCoeffs HodgeCoeffs::operator+(const HodgeCoeffs& o) const {
  HodgeCoeffs out;
  out.a = a + o.a;
  out.b = b + o.b;
  return out;
}

HodgeCoeffs HodgeCoeffs::operator*(double s) const {
  HodgeCoeffs out;
  out.a = a * s;
  out.b = b * s;
  return out;
}

HodgeCoeffs analyze_field(const SphereGrid& grid, const std::vector<PVec>& vectors, int lmax) {
  HodgeCoeffs out(lmax);
  const int nh = harmonic_count(lmax);
  std::vector<double> y(nh);
  std::vector<Eigen::Vector3d> g(nh);
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    const Eigen::Vector3d& x = grid.points[k];
    real_harmonics(x, lmax, y.data(), g.data());
    const Eigen::Vector3d v(vectors[k](0), vectors[k](1), vectors[k](2));
    const Eigen::Vector3d xv = x.cross(v);  // v . (x cross g) = -(x cross v) . g
    const double w = grid.weights(k);
    for (int i = 1; i < nh; ++i) {
      out.a.coeffs()(i) += w * v.dot(g[i]);
      out.b.coeffs()(i) -= w * xv.dot(g[i]);
    }
  }
  for (int l = 1; l <= lmax; ++l) {
    out.a.block(l) /= casimir(l);
    out.b.block(l) /= casimir(l);
  }
  return out;
}

namespace {
SphereGrid field_grid(int lmax) { return exact_grid(2 * lmax + 2); }
}  // namespace

HodgeCoeffs analyze_field(const VectorField& y, int lmax) {
  if (y.ambient() != 3) throw DimUnsupported("Hodge analysis is on S^2 only");
  const SphereGrid grid = field_grid(lmax);
  std::vector<PVec> v;
  v.reserve(grid.points.size());
  for (const auto& p : grid.points) {
    const PVec x = p;
    v.push_back(tangent_project(x, y.value(x)));
  }
  return analyze_field(grid, v, lmax);
}

PVec HodgeField::value(const PVec& x) const {
  static thread_local std::vector<double> y;
  static thread_local std::vector<Eigen::Vector3d> g;
  const int nh = harmonic_count(c_.lmax());
  y.resize(nh);
  g.resize(nh);
  const Eigen::Vector3d u = Eigen::Vector3d(x(0), x(1), x(2)).normalized();
  real_harmonics(u, c_.lmax(), y.data(), g.data());
  Eigen::Vector3d ga = Eigen::Vector3d::Zero(), gb = Eigen::Vector3d::Zero();
  const Vec& ca = c_.a.coeffs();
  const Vec& cb = c_.b.coeffs();
  for (int i = 1; i < nh; ++i) {
    ga += ca(i) * g[i];
    gb += cb(i) * g[i];
  }
  const Eigen::Vector3d v = ga + u.cross(gb);
  return PVec(v);
}

PVec ConjugatedMap::apply(const PVec& x) const {
  return psi_->apply(f_->apply(psi_->inverse(x, tol_, 50)));
}

// ---------------------------------------------------------------------------
// Error fields and distances

const std::vector<PVec>& kam_panel(int ambient) {
  static thread_local std::map<int, std::vector<PVec>> cache;
  auto& p = cache[ambient];
  if (p.empty()) {
    Rng rng(split_seed(kKamPanelSeed, ambient));
    p.reserve(kKamPanelSize);
    for (int i = 0; i < kKamPanelSize; ++i) p.push_back(random_sphere_point(ambient, rng));
  }
  return p;
}

PVec error_vector(const SphereMap& f, const GroupElement& r, const PVec& z) {
  const PVec x = r.mat().transpose() * z;
  try {
    return sphere_log(z, f.apply(x));
  } catch (const AntipodalPoints&) {
    throw TooFarFromIsometry("f(x) is antipodal to R(x)");
  }
}

ErrorField error_field(const SphereMap& f, const GroupElement& r, int lmax) {
  if (f.ambient() != r.dim()) throw ConfigInvalid("rotation", "dimension mismatch with map");
  ErrorField out;
  if (f.ambient() == 3) {
    const SphereGrid grid = field_grid(lmax);
    for (const auto& p : grid.points) out.points.emplace_back(PVec(p));
    out.vectors.resize(out.points.size());
    parallel_for(static_cast<int>(out.points.size()),
                 [&](int k) { out.vectors[k] = error_vector(f, r, out.points[k]); });
    out.fit = analyze_field(grid, out.vectors, lmax);
    const HodgeField fit(*out.fit);
    const auto& panel = kam_panel(3);
    const int n_check = 500;
    std::vector<double> res(n_check);
    parallel_for(n_check, [&](int k) {
      res[k] = (error_vector(f, r, panel[k]) - fit.value(panel[k])).norm();
    });
    out.fit_residual = *std::max_element(res.begin(), res.end());
  } else {
    out.points = kam_panel(f.ambient());
    out.vectors.resize(out.points.size());
    parallel_for(static_cast<int>(out.points.size()),
                 [&](int k) { out.vectors[k] = error_vector(f, r, out.points[k]); });
  }
  return out;
}

double c0_distance(const SphereMap& f, const GroupElement& r) {
  const auto& panel = kam_panel(f.ambient());
  std::vector<double> d(panel.size());
  parallel_for(static_cast<int>(panel.size()),
               [&](int k) { d[k] = sphere_distance(f.apply(panel[k]), r.mat() * panel[k]); });
  return *std::max_element(d.begin(), d.end());
}

namespace {

struct C0Objective {
  const std::vector<PVec>* panel;
  std::vector<PVec> fx;
  Mat base;
  std::vector<std::pair<int, int>> planes;

  Mat rotation(const gsl_vector* xi) const {
    const int n = static_cast<int>(base.rows());
    Mat a = Mat::Zero(n, n);
    for (std::size_t p = 0; p < planes.size(); ++p) {
      const double v = gsl_vector_get(xi, p);
      a(planes[p].first, planes[p].second) = -v;
      a(planes[p].second, planes[p].first) = v;
    }
    return exp_so(a).mat() * base;
  }
  static double eval(const gsl_vector* xi, void* self) {
    const auto& o = *static_cast<const C0Objective*>(self);
    const Mat r = o.rotation(xi);
    double worst = 0.0;
    for (std::size_t k = 0; k < o.fx.size(); ++k)
      worst = std::max(worst, sphere_distance(o.fx[k], r * (*o.panel)[k]));
    return worst;
  }
};

Mat refine_c0(const SphereMap& f, const Mat& start) {
  const int n = static_cast<int>(start.rows());
  C0Objective obj;
  obj.panel = &kam_panel(n);
  obj.fx.resize(obj.panel->size());
  parallel_for(static_cast<int>(obj.fx.size()), [&](int k) { obj.fx[k] = f.apply((*obj.panel)[k]); });
  obj.base = start;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) obj.planes.emplace_back(i, j);
  const std::size_t dim = obj.planes.size();

  gsl_multimin_function fn{&C0Objective::eval, dim, &obj};
  gsl_vector* x = gsl_vector_calloc(dim);
  gsl_vector* step = gsl_vector_alloc(dim);
  double fbest = C0Objective::eval(x, &obj);
  if (fbest == 0.0) {
    gsl_vector_free(x);
    gsl_vector_free(step);
    return start;
  }
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
  // Restarts shed the simplex collapse typical of max-type objectives.
  for (int round = 0; round < 4; ++round) {
    gsl_vector_set_all(step, 0.5 * fbest);
    gsl_multimin_fminimizer_set(m, &fn, x, step);
    for (int it = 0; it < 2000; ++it) {
      if (gsl_multimin_fminimizer_iterate(m)) break;
      if (gsl_multimin_fminimizer_size(m) < 1e-6 * fbest) break;
    }
    const double fnew = gsl_multimin_fminimizer_minimum(m);
    if (!(fnew < fbest)) break;
    gsl_vector_memcpy(x, gsl_multimin_fminimizer_x(m));
    const bool stalled = fnew > (1.0 - 1e-6) * fbest;
    fbest = fnew;
    if (stalled) break;
  }
  const Mat out = obj.rotation(x);
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return out;
}

}  // namespace

GroupElement extract_isometry(const SphereMap& f, const GroupElement& guess, bool refine) {
  const int n = f.ambient();
  if (guess.dim() != n) throw ConfigInvalid("guess", "dimension mismatch with map");
  const Mat gt = guess.mat().transpose();
  const auto& panel = kam_panel(n);
  std::vector<double> disp(panel.size());
  parallel_for(static_cast<int>(panel.size()), [&](int k) {
    const PVec hx = gt * f.apply(panel[k]);
    disp[k] = sphere_distance(hx, panel[k]);
  });
  const long k_star = std::max_element(disp.begin(), disp.end()) - disp.begin();
  if (disp[k_star] >= 0.5 * M_PI) throw TooFarFromIsometry("displacement of guess^-1 f reaches pi/2");
  const PVec u = panel[k_star];
  const PVec y = gt * f.apply(u);
  PVec w = y - u * u.dot(y);
  const double s = w.norm(), c = u.dot(y);
  if (c < 0.0 && s < 1e-9) throw AntipodalPoints("h(x*) antipodal to x*");
  Mat r1 = Mat::Identity(n, n);
  if (s > 1e-300) {
    w /= s;
    const double theta = std::atan2(s, c);
    r1 += (std::cos(theta) - 1.0) * (u * u.transpose() + w * w.transpose()) +
          std::sin(theta) * (w * u.transpose() - u * w.transpose());
  }
  // R_2 fixes x* and matches the polar part of D(R_1^-1 h) on T_{x*}.
  const Mat dg = r1.transpose() * gt * f.differential(u);
  const Mat b = tangent_frame(u);
  const Mat j = b.transpose() * dg * b;
  const Mat q = project_to_group(j).mat();
  const Mat r2 = u * u.transpose() + b * q * b.transpose();
  const GroupElement seed = project_to_group(guess.mat() * r1 * r2);
  if (!refine) return seed;
  return project_to_group(refine_c0(f, seed.mat()));
}

EpsNorms eps_norms(const SphereMap& f, const GroupElement& r, const std::optional<HodgeCoeffs>& fit,
                   const KamOptions& opt) {
  EpsNorms e;
  e.c0 = c0_distance(f, r);
  const auto& panel = kam_panel(f.ambient());
  const int np = std::min<int>(opt.derivative_panel, static_cast<int>(panel.size()));
  const int n = f.ambient(), d = n - 1;
  const double h = opt.fd_step;
  std::vector<double> c1(np), c2(np);
  parallel_for(np, [&](int k) {
    const PVec& z = panel[k];
    const PMat b = tangent_frame(z);
    auto y_at = [&](const PVec& v) { return error_vector(f, r, sphere_exp(z, v)); };
    const PVec y0 = y_at(PVec::Zero(n));
    PMat grad(n, d);
    double s2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const PVec yp = y_at(h * b.col(j)), ym = y_at(-h * b.col(j));
      grad.col(j) = (yp - ym) / (2.0 * h);
      s2 += ((yp - 2.0 * y0 + ym) / (h * h)).squaredNorm();
      for (int i = 0; i < j; ++i) {
        const PVec bp = b.col(i) + b.col(j), bm = b.col(i) - b.col(j);
        const PVec mixed = (y_at(h * bp) - y_at(h * bm) - y_at(-h * bm) + y_at(-h * bp)) / (4.0 * h * h);
        s2 += 2.0 * mixed.squaredNorm();
      }
    }
    c1[k] = (b.transpose() * grad).norm();
    c2[k] = std::sqrt(s2);
  });
  if (np > 0) {
    e.c1 = *std::max_element(c1.begin(), c1.end());
    e.c2 = *std::max_element(c2.begin(), c2.end());
  }
  if (fit) e.hs = std::sqrt(fit->hs_norm_sq(opt.sobolev_s));
  return e;
}

// ---------------------------------------------------------------------------
// KAM step

namespace {

EpsNorms max_norms(const std::vector<EpsNorms>& v) {
  EpsNorms m;
  for (const auto& e : v) {
    m.c0 = std::max(m.c0, e.c0);
    m.c1 = std::max(m.c1, e.c1);
    m.c2 = std::max(m.c2, e.c2);
    m.hs = std::max(m.hs, e.hs);
  }
  return m;
}

HodgeCoeffs mean_fit(const std::vector<ErrorField>& fields, int lmax) {
  HodgeCoeffs m(lmax);
  for (const auto& f : fields) m = m + *f.fit;
  return m * (1.0 / static_cast<double>(fields.size()));
}

}  // namespace

KamStepResult kam_step(const MapList& maps, const GeneratorTuple& rotations, double lambda, int lmax,
                       const KamOptions& opt) {
  if (maps.empty() || static_cast<int>(maps.size()) != rotations.size())
    throw ConfigInvalid("maps", "need one rotation per map");
  if (rotations.dim() != 3) throw DimUnsupported("KAM step is implemented on S^2");
  if (lmax < 1) throw ConfigInvalid("lmax", "must be >= 1");
  if (!(lambda > 0.0)) throw ConfigInvalid("lambda", "must be positive");
  const int m = rotations.size();

  std::vector<HarmonicBlock> blocks(lmax + 1);
  parallel_for(lmax + 1, [&](int l) { blocks[l] = make_block(rotations, l); });
  for (int l = 1; l <= lmax; ++l) {
    Eigen::JacobiSVD<Mat> svd(Mat::Identity(2 * l + 1, 2 * l + 1) - blocks[l].average);
    if (svd.singularValues().minCoeff() < kSingularBlockTol) throw NotDiophantineAtDegree(l);
  }

  KamStepResult res;
  KamStepReport& rep = res.report;
  rep.lambda = lambda;
  rep.lmax = lmax;

  std::vector<ErrorField> before(m);
  for (int i = 0; i < m; ++i) {
    before[i] = error_field(*maps[i], rotations[i], lmax);
    rep.before.push_back(eps_norms(*maps[i], rotations[i], before[i].fit, opt));
    rep.fit_residual = std::max(rep.fit_residual, before[i].fit_residual);
    if (opt.measure_strain)
      rep.strain_before.push_back(strain_norms(*maps[i], opt.strain_quad, opt.strain_seed).h0_sq.value);
  }
  const HodgeCoeffs mean = mean_fit(before, lmax);
  rep.mean_field_before = mean.low_mode_norm(lambda);

  // V = -(I - L)^{-1} T_lambda mean; L acts on both potentials as the averaging operator.
  const HarmonicCoeffs ta = smooth_truncate(mean.a, lambda).first * -1.0;
  const HarmonicCoeffs tb = smooth_truncate(mean.b, lambda).first * -1.0;
  rep.v.a = solve_coboundary(blocks, ta);
  rep.v.b = solve_coboundary(blocks, tb);
  rep.coboundary_residual =
      std::max(coboundary_residual(blocks, rep.v.a, ta), coboundary_residual(blocks, rep.v.b, tb));

  auto psi = std::make_shared<const FlowMap>(std::make_shared<const HodgeField>(rep.v));
  for (int i = 0; i < m; ++i) res.maps.push_back(std::make_shared<ConjugatedMap>(psi, maps[i], opt.inverse_tol));

  {
    const auto& panel = kam_panel(3);
    const int n_check = 1000;
    std::vector<double> r(n_check);
    parallel_for(n_check, [&](int k) {
      r[k] = (psi->apply(psi->inverse(panel[k], opt.inverse_tol, 50)) - panel[k]).norm();
    });
    rep.inverse_residual = *std::max_element(r.begin(), r.end());
  }

  std::vector<ErrorField> mid(m);
  for (int i = 0; i < m; ++i) mid[i] = error_field(*res.maps[i], rotations[i], lmax);
  rep.mean_field_after = mean_fit(mid, lmax).low_mode_norm(lambda);

  std::vector<GroupElement> extracted;
  std::vector<ErrorField> after(m);
  for (int i = 0; i < m; ++i) {
    extracted.push_back(extract_isometry(*res.maps[i], rotations[i]));
    rep.rotation_shift.push_back(distance_or_chordal(rotations[i], extracted.back()).value);
    after[i] = error_field(*res.maps[i], extracted.back(), lmax);
    rep.after.push_back(eps_norms(*res.maps[i], extracted.back(), after[i].fit, opt));
    rep.fit_residual = std::max(rep.fit_residual, after[i].fit_residual);
    if (opt.measure_strain)
      rep.strain_after.push_back(strain_norms(*res.maps[i], opt.strain_quad, opt.strain_seed).h0_sq.value);
  }
  rep.mean_field_after_extracted = mean_fit(after, lmax).low_mode_norm(lambda);
  rep.before_max = max_norms(rep.before);
  rep.after_max = max_norms(rep.after);
  res.rotations = GeneratorTuple(std::move(extracted));
  return res;
}

Schedule::Schedule(double n_, double alpha_, double tau_, int steps_) : n(n_), alpha(alpha_), tau(tau_), steps(steps_) {
  validate();
}

void Schedule::validate() const {
  if (!(n > 1.0)) throw ConfigInvalid("schedule.N", "must exceed 1");
  if (!(alpha > 0.0)) throw ConfigInvalid("schedule.alpha", "must be positive");
  if (!(tau > 0.0 && tau < 0.125)) throw ConfigInvalid("schedule.tau", "must lie in (0, 1/8)");
  if (steps < 1) throw ConfigInvalid("schedule.steps", "must be >= 1");
}

double Schedule::lambda(int k) const { return std::pow(n, alpha * std::pow(1.0 + tau, k)); }

KamRun kam_run(const MapList& maps, const GeneratorTuple& rotations, const Schedule& schedule, int lmax,
               const KamOptions& opt) {
  schedule.validate();
  KamRun run;
  run.maps = maps;
  run.rotations = rotations;
  double eps0 = 0.0;
  for (int i = 0; i < rotations.size(); ++i) eps0 = std::max(eps0, c0_distance(*maps[i], rotations[i]));
  run.eps0_trace.push_back(eps0);
  int non_decreasing = 0;
  for (int k = 0; k < schedule.steps; ++k) {
    try {
      KamStepResult step = kam_step(run.maps, run.rotations, schedule.lambda(k), lmax, opt);
      run.maps = std::move(step.maps);
      run.rotations = std::move(step.rotations);
      run.steps.push_back(std::move(step.report));
    } catch (const NotDiophantineAtDegree& e) {
      run.halted_error = e.name();
      run.halted_degree = e.degree();
      break;
    } catch (const Error& e) {
      run.halted_error = e.name();
      break;
    }
    const double next = run.steps.back().after_max.c0;
    non_decreasing = (next >= eps0 && eps0 > 0.0) ? non_decreasing + 1 : 0;
    run.eps0_trace.push_back(next);
    eps0 = next;
    if (non_decreasing >= 2) {
      run.stagnated = true;
      break;
    }
  }
  return run;
}

// ---------------------------------------------------------------------------

SymmetryReport top_bottom_symmetry(const MapList& maps, long n_steps, std::uint64_t seed, const PVec& x0,
                                   int batches) {
  if (maps.empty()) throw ConfigInvalid("maps", "need at least one map");
  const int n = maps.front()->ambient();
  PVec start = x0;
  if (start.size() == 0) {
    Rng rng(split_seed(seed, 0x5137));
    start = random_sphere_point(n, rng);
  }
  LyapunovOptions lo;
  lo.batches = batches;
  const LyapunovSpectrum sp = lyapunov_spectrum(maps, start, n_steps, seed, lo);
  SymmetryReport out;
  const int d = n - 1;
  out.d = d;
  out.lambda1 = sp.exponents(0);
  out.lambda_d = sp.exponents(d - 1);
  out.lambda_d_se = sp.standard_errors(d - 1);
  out.big_lambda_d = sp.partial_sums(d - 1);
  if (d == 2) {
    out.trivial = true;
    return out;
  }
  const int nb = static_cast<int>(sp.batch_means.cols());
  Vec comb(nb);
  for (int b = 0; b < nb; ++b)
    comb(b) = sp.batch_means(0, b) + sp.batch_means(d - 1, b) - (2.0 / d) * sp.batch_means.col(b).sum();
  const double mean = comb.mean();
  out.defect = std::abs(mean);
  out.defect_se = nb > 1 ? std::sqrt((comb.array() - mean).square().sum() / (nb - 1) / nb) : 0.0;
  return out;
}

namespace {

class ScaledField : public VectorField {
 public:
  ScaledField(std::shared_ptr<const VectorField> w, double s) : w_(std::move(w)), s_(s) {}
  int ambient() const override { return w_->ambient(); }
  PVec value(const PVec& x) const override { return s_ * w_->value(x); }
  PMat derivative(const PVec& x) const override { return s_ * w_->derivative(x); }

 private:
  std::shared_ptr<const VectorField> w_;
  double s_;
};

}  // namespace

MapList perturbed_tuple(const GeneratorTuple& rotations, const std::vector<TangentField>& fields, double eps) {
  if (static_cast<int>(fields.size()) != rotations.size())
    throw ConfigInvalid("fields", "need one field per generator");
  MapList out;
  for (int i = 0; i < rotations.size(); ++i)
    out.push_back(std::make_shared<PerturbedMap>(rotations[i], fields[i] * eps));
  return out;
}

MapList conjugated_tuple(const GeneratorTuple& rotations, std::shared_ptr<const VectorField> w, double eps) {
  auto psi = std::make_shared<const FlowMap>(std::make_shared<const ScaledField>(std::move(w), eps));
  MapList out;
  for (const auto& r : rotations) out.push_back(std::make_shared<ConjugatedMap>(psi, std::make_shared<IsometryMap>(r)));
  return out;
}

}  // namespace isokam
