#include "isokam/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "isokam/parallel.hpp"

namespace isokam {

void real_harmonics(const Eigen::Vector3d& x, int lmax, double* values, Eigen::Vector3d* gradients) {
  const double z = std::clamp(x(2), -1.0, 1.0);
  const double rho = std::hypot(x(0), x(1));
  const double st = rho;
  const double ct = z;
  double cp = 1.0, sp = 0.0;
  if (rho > 0.0) {
    cp = x(0) / rho;
    sp = x(1) / rho;
  }
  const Eigen::Vector3d e_theta(ct * cp, ct * sp, -st);
  const Eigen::Vector3d e_phi(-sp, cp, 0.0);

  // m = 0 column: pbar_l0.
  std::vector<double> p0(lmax + 2, 0.0), q_prev(lmax + 2, 0.0), q(lmax + 2, 0.0);
  p0[0] = 1.0;
  if (lmax >= 1) p0[1] = std::sqrt(3.0) * ct;
  for (int l = 2; l <= lmax; ++l) {
    const double a = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / (double(l) * l));
    const double b = std::sqrt((2.0 * l + 1.0) * (l - 1.0) * (l - 1.0) / (double(l) * l * (2.0 * l - 3.0)));
    p0[l] = a * ct * p0[l - 1] - b * p0[l - 2];
  }
  // pbar_l1 / sin(theta) is needed for the m = 0 derivative; computed in the m loop.
  std::vector<double> p1(lmax + 2, 0.0);

  // q[l] = pbar_lm / sin(theta), m >= 1.
  double cmm = std::sqrt(3.0);  // pbar_mm = cmm sin^m
  double st_pow = 1.0;          // sin^{m-1}
  double cosm = 1.0, sinm = 0.0;
  for (int m = 1; m <= lmax; ++m) {
    if (m >= 2) {
      cmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
      st_pow *= st;
    }
    const double c_new = cosm * cp - sinm * sp;
    const double s_new = sinm * cp + cosm * sp;
    cosm = c_new;
    sinm = s_new;
    std::fill(q.begin(), q.end(), 0.0);
    q[m] = cmm * st_pow;
    if (m + 1 <= lmax) q[m + 1] = std::sqrt(2.0 * m + 3.0) * ct * q[m];
    for (int l = m + 2; l <= lmax; ++l) {
      const double a = std::sqrt((2.0 * l - 1.0) * (2.0 * l + 1.0) / (double(l - m) * (l + m)));
      const double b = std::sqrt((2.0 * l + 1.0) * (l + m - 1.0) * (l - m - 1.0) /
                                 (double(l - m) * (l + m) * (2.0 * l - 3.0)));
      q[l] = a * ct * q[l - 1] - b * q[l - 2];
    }
    for (int l = m; l <= lmax; ++l) {
      const double p = st * q[l];
      if (m == 1) p1[l] = p;
      values[harmonic_index(l, m)] = p * cosm;
      values[harmonic_index(l, -m)] = p * sinm;
      if (gradients) {
        const double qm1 = (l - 1 >= m) ? q[l - 1] : 0.0;
        const double dp = l * ct * q[l] -
                          std::sqrt((2.0 * l + 1.0) * (l - m) * double(l + m) / (2.0 * l - 1.0)) * qm1;
        gradients[harmonic_index(l, m)] = dp * cosm * e_theta - m * q[l] * sinm * e_phi;
        gradients[harmonic_index(l, -m)] = dp * sinm * e_theta + m * q[l] * cosm * e_phi;
      }
    }
  }
  for (int l = 0; l <= lmax; ++l) {
    values[harmonic_index(l, 0)] = p0[l];
    if (gradients) {
      const double dp = l == 0 ? 0.0 : -std::sqrt(l * (l + 1.0) / 2.0) * p1[l];
      gradients[harmonic_index(l, 0)] = dp * e_theta;
    }
  }
}

HarmonicCoeffs::HarmonicCoeffs(int lmax, Vec coeffs) : lmax_(lmax), c_(std::move(coeffs)) {
  if (c_.size() != harmonic_count(lmax)) throw ConfigInvalid("coeffs", "size does not match lmax");
}

double HarmonicCoeffs::hs_norm_sq(double s) const {
  double total = 0.0;
  for (int l = 0; l <= lmax_; ++l) total += std::pow(1.0 + casimir(l), s) * block(l).squaredNorm();
  return total;
}

double HarmonicCoeffs::evaluate(const Eigen::Vector3d& x) const {
  std::vector<double> y(harmonic_count(lmax_));
  real_harmonics(x, lmax_, y.data());
  return Eigen::Map<const Vec>(y.data(), y.size()).dot(c_);
}

namespace {
HarmonicCoeffs widen(const HarmonicCoeffs& a, int lmax) {
  HarmonicCoeffs out(lmax);
  const int n = std::min<int>(a.coeffs().size(), out.coeffs().size());
  out.coeffs().head(n) = a.coeffs().head(n);
  return out;
}
}  // namespace

HarmonicCoeffs HarmonicCoeffs::operator+(const HarmonicCoeffs& o) const {
  const int l = std::max(lmax_, o.lmax_);
  HarmonicCoeffs out = widen(*this, l);
  out.c_ += widen(o, l).c_;
  return out;
}

HarmonicCoeffs HarmonicCoeffs::operator-(const HarmonicCoeffs& o) const { return *this + o * -1.0; }

HarmonicCoeffs HarmonicCoeffs::operator*(double s) const {
  HarmonicCoeffs out = *this;
  out.c_ *= s;
  return out;
}

void gauss_legendre(int n, Vec& nodes, Vec& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes(i) = x;
    nodes(n - 1 - i) = -x;
    weights(i) = weights(n - 1 - i) = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

SphereGrid gauss_grid(int n_theta, int n_phi) {
  Vec nodes, w;
  gauss_legendre(n_theta, nodes, w);
  SphereGrid g;
  g.points.reserve(n_theta * n_phi);
  g.weights.resize(n_theta * n_phi);
  int k = 0;
  for (int i = 0; i < n_theta; ++i) {
    const double ct = nodes(i), st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int j = 0; j < n_phi; ++j, ++k) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / n_phi;
      g.points.emplace_back(st * std::cos(phi), st * std::sin(phi), ct);
      g.weights(k) = w(i) / (2.0 * n_phi);
    }
  }
  return g;
}

SphereGrid exact_grid(int degree) { return gauss_grid(degree / 2 + 1, degree + 1); }

HarmonicCoeffs analyze(const SphereGrid& grid, const Vec& values, int lmax) {
  HarmonicCoeffs out(lmax);
  std::vector<double> y(harmonic_count(lmax));
  for (size_t k = 0; k < grid.points.size(); ++k) {
    real_harmonics(grid.points[k], lmax, y.data());
    out.coeffs() += (grid.weights(k) * values(k)) * Eigen::Map<const Vec>(y.data(), y.size());
  }
  return out;
}

Mat wigner_block(const GroupElement& g, int l) {
  if (g.dim() != 3) throw DimUnsupported("harmonic blocks are built on S^2 only");
  const int n = 2 * l + 1;
  if (l == 0) return Mat::Identity(1, 1);
  // Over-determined panel: (l + 2) x (2l + 3) >= 4(2l + 1) points, exact for
  // products of degree-l harmonics, so the weighted normal matrix is I.
  const SphereGrid grid = gauss_grid(l + 2, 2 * l + 3);
  const int np = static_cast<int>(grid.points.size());
  Mat a(np, n), b(np, n);
  std::vector<double> y(harmonic_count(l));
  const Mat ginv = g.mat().transpose();
  for (int k = 0; k < np; ++k) {
    real_harmonics(grid.points[k], l, y.data());
    for (int i = 0; i < n; ++i) a(k, i) = y[l * l + i];
    real_harmonics(ginv * grid.points[k], l, y.data());
    for (int i = 0; i < n; ++i) b(k, i) = y[l * l + i];
  }
  const Vec sw = grid.weights.cwiseSqrt();
  const Mat aw = sw.asDiagonal() * a;
  const Mat bw = sw.asDiagonal() * b;
  const Mat normal = aw.transpose() * aw;
  return normal.ldlt().solve(aw.transpose() * bw);
}

Mat averaging_block(const GeneratorTuple& s, int l) {
  Mat m = Mat::Zero(2 * l + 1, 2 * l + 1);
  for (const auto& g : s) m += wigner_block(g, l);
  return m / s.size();
}

HarmonicBlock make_block(const GeneratorTuple& s, int l) {
  HarmonicBlock b;
  b.degree = l;
  b.casimir = casimir(l);
  b.average = Mat::Zero(2 * l + 1, 2 * l + 1);
  for (const auto& g : s) {
    b.rotations.push_back(wigner_block(g, l));
    b.average += b.rotations.back();
  }
  b.average /= s.size();
  return b;
}

HarmonicCoeffs apply_averaging(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& phi) {
  HarmonicCoeffs out(phi.lmax());
  for (int l = 0; l <= phi.lmax(); ++l) out.block(l) = blocks.at(l).average * phi.block(l);
  return out;
}

namespace {
double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}
double smallest_singular(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}
}  // namespace

GapProfile gap_profile(const GeneratorTuple& s, int lmax, int n_powers) {
  if (lmax < 1) throw ConfigInvalid("lmax", "must be >= 1");
  if (n_powers < 1) throw ConfigInvalid("n_powers", "must be >= 1");
  GapProfile prof;
  prof.n_powers = n_powers;
  prof.records.resize(lmax);
  parallel_for(lmax, [&](int t) {
    const int l = t + 1;
    const Mat m = averaging_block(s, l);
    GapRecord& r = prof.records[t];
    r.degree = l;
    r.casimir = casimir(l);
    r.norm = spectral_norm(m);
    Mat p = Mat::Identity(m.rows(), m.cols());
    for (int k = 0; k < n_powers; ++k) p = p * m;
    r.power_norm = spectral_norm(p);
    r.gap = 1.0 - std::pow(r.power_norm, 1.0 / n_powers);
    const double smin = smallest_singular(Mat::Identity(m.rows(), m.cols()) - m);
    r.inverse_norm = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
  });

  // Fit log(1/gap) ~ log D2 + alpha log log c over l >= 2, then lift D2 until
  // no degree violates the bound.
  std::vector<double> xs, ys;
  bool all_positive = true;
  for (const auto& r : prof.records) {
    if (r.degree < 2) continue;
    if (!(r.gap > 0.0)) {
      all_positive = false;
      continue;
    }
    xs.push_back(std::log(std::log(r.casimir)));
    ys.push_back(std::log(1.0 / r.gap));
  }
  if (all_positive && xs.size() >= 2) {
    const double n = xs.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    prof.alpha = std::max(0.0, sxx > 0 ? sxy / sxx : 0.0);
    double log_d2 = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < xs.size(); ++i) log_d2 = std::max(log_d2, ys[i] - prof.alpha * xs[i]);
    prof.d2 = std::exp(log_d2);
  } else {
    prof.alpha = 0.0;
    prof.d2 = std::numeric_limits<double>::infinity();
  }
  for (auto& r : prof.records) {
    if (r.degree < 2) continue;
    r.bound = 1.0 / (prof.d2 * std::pow(std::log(r.casimir), prof.alpha));
    if (!(r.gap >= r.bound * (1.0 - 1e-12))) ++prof.violations;
    const double ratio = r.inverse_norm / std::pow(std::log(r.casimir), 4.0);
    prof.tameness_max = std::max(prof.tameness_max, ratio);
  }
  return prof;
}

double diophantine_margin(const GeneratorTuple& s, int l) {
  const int n = 2 * l + 1;
  Mat stacked(n * s.size(), n);
  for (int i = 0; i < s.size(); ++i)
    stacked.block(i * n, 0, n, n) = Mat::Identity(n, n) - wigner_block(s[i], l);
  return smallest_singular(stacked);
}

HarmonicCoeffs solve_coboundary(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& phi) {
  HarmonicCoeffs psi(phi.lmax());
  for (int l = 1; l <= phi.lmax(); ++l) {
    if (phi.block(l).norm() == 0.0) continue;
    const Mat a = Mat::Identity(2 * l + 1, 2 * l + 1) - blocks.at(l).average;
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    if (sv(sv.size() - 1) < kSingularBlockTol) throw NotDiophantineAtDegree(l);
    psi.block(l) = svd.solve(Vec(phi.block(l)));
  }
  return psi;
}

HarmonicCoeffs solve_coboundary(const GeneratorTuple& s, const HarmonicCoeffs& phi) {
  std::vector<HarmonicBlock> blocks(phi.lmax() + 1);
  parallel_for(phi.lmax() + 1, [&](int l) { blocks[l] = make_block(s, l); });
  return solve_coboundary(blocks, phi);
}

double coboundary_residual(const std::vector<HarmonicBlock>& blocks, const HarmonicCoeffs& psi,
                           const HarmonicCoeffs& phi) {
  double worst = 0.0;
  for (int l = 1; l <= phi.lmax(); ++l) {
    const Vec r = psi.block(l) - blocks.at(l).average * psi.block(l) - phi.block(l);
    worst = std::max(worst, r.norm());
  }
  return worst;
}

std::pair<HarmonicCoeffs, HarmonicCoeffs> smooth_truncate(const HarmonicCoeffs& x, double lambda) {
  HarmonicCoeffs low(x.lmax()), high(x.lmax());
  for (int l = 0; l <= x.lmax(); ++l) {
    if (casimir(l) < lambda)
      low.block(l) = x.block(l);
    else
      high.block(l) = x.block(l);
  }
  return {low, high};
}

}  // namespace isokam
