#include "isokam/rds.hpp"

#include <cmath>
#include <numeric>

#include "isokam/grassmann.hpp"

namespace isokam {

namespace {

constexpr std::uint64_t kFieldPanelSeed = 0x5eed'0000'0001ULL;
constexpr int kFieldPanelSize = 10000;

const std::vector<PVec>& field_panel(int ambient) {
  static thread_local std::vector<std::vector<PVec>> cache(16);
  auto& p = cache.at(ambient);
  if (p.empty()) {
    Rng rng(split_seed(kFieldPanelSeed, ambient));
    p.reserve(kFieldPanelSize);
    for (int i = 0; i < kFieldPanelSize; ++i) p.push_back(random_sphere_point(ambient, rng));
  }
  return p;
}

void enumerate_exponents(int n, int max_degree, std::vector<std::vector<int>>& out) {
  std::vector<int> e(n, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n) {
      out.push_back(e);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      e[pos] = k;
      rec(pos + 1, left - k);
    }
    e[pos] = 0;
  };
  rec(0, max_degree);
}

}  // namespace

PMat VectorField::derivative(const PVec& x) const {
  const int n = ambient();
  const double h = 1e-6;
  PMat d(n, n);
  for (int j = 0; j < n; ++j) {
    PVec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    d.col(j) = (value(xp) - value(xm)) / (2.0 * h);
  }
  return d;
}

TangentField::TangentField(int ambient, std::vector<Term> terms) : n_(ambient) {
  for (auto& t : terms) add_term(std::move(t.exponent), std::move(t.coeff));
}

void TangentField::add_term(std::vector<int> exponent, PVec coeff) {
  if (static_cast<int>(exponent.size()) != n_ || coeff.size() != n_)
    throw ConfigInvalid("field.terms", "exponent/coefficient length must equal ambient dimension");
  int deg = 0;
  for (int e : exponent) {
    if (e < 0) throw ConfigInvalid("field.terms.exponent", "negative exponent");
    deg += e;
  }
  if (deg > 3) throw ConfigInvalid("field.terms.exponent", "polynomial degree must be <= 3");
  for (auto& t : terms_) {
    if (t.exponent == exponent) {
      t.coeff += coeff;
      return;
    }
  }
  terms_.push_back({std::move(exponent), std::move(coeff)});
}

int TangentField::degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, std::accumulate(t.exponent.begin(), t.exponent.end(), 0));
  return d;
}

TangentField TangentField::random(int ambient, int max_degree, double c0, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<int>> exps;
  enumerate_exponents(ambient, max_degree, exps);
  TangentField y(ambient);
  for (auto& e : exps) {
    PVec c(ambient);
    for (int i = 0; i < ambient; ++i) c(i) = normal(rng);
    y.add_term(e, c);
  }
  const double norm = y.c0_norm();
  return norm > 0 ? y * (c0 / norm) : y;
}

TangentField TangentField::gradient_of(int ambient,
                                       const std::vector<std::pair<std::vector<int>, double>>& h) {
  TangentField y(ambient);
  for (const auto& [e, c] : h) {
    for (int i = 0; i < ambient; ++i) {
      if (e.at(i) == 0) continue;
      std::vector<int> de = e;
      de[i] -= 1;
      PVec coeff = PVec::Zero(ambient);
      coeff(i) = c * e[i];
      y.add_term(de, coeff);
    }
  }
  return y;
}

namespace {
inline double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}
}  // namespace

PVec TangentField::polynomial(const PVec& x) const {
  PVec p = PVec::Zero(n_);
  for (const auto& t : terms_) {
    double m = 1.0;
    for (int i = 0; i < n_; ++i) m *= ipow(x(i), t.exponent[i]);
    p += m * t.coeff;
  }
  return p;
}

void TangentField::polynomial_with_derivative(const PVec& x, PVec& p, PMat& dp) const {
  p = PVec::Zero(n_);
  dp = PMat::Zero(n_, n_);
  for (const auto& t : terms_) {
    double m = 1.0;
    for (int i = 0; i < n_; ++i) m *= ipow(x(i), t.exponent[i]);
    p += m * t.coeff;
    for (int j = 0; j < n_; ++j) {
      const int ej = t.exponent[j];
      if (ej == 0) continue;
      double dm = ej * ipow(x(j), ej - 1);
      for (int i = 0; i < n_; ++i)
        if (i != j) dm *= ipow(x(i), t.exponent[i]);
      dp.col(j) += dm * t.coeff;
    }
  }
}

PVec TangentField::value(const PVec& x) const {
  const PVec p = polynomial(x);
  return p - x * x.dot(p);
}

PMat TangentField::derivative(const PVec& x) const {
  PVec p;
  PMat dp;
  polynomial_with_derivative(x, p, dp);
  // d[(I - x x^T) P] = DP - x (P^T + x^T DP) - (x^T P) I
  const PMat n = PMat::Identity(n_, n_);
  return dp - x * (p.transpose() + x.transpose() * dp) - x.dot(p) * n;
}

TangentField TangentField::operator*(double s) const {
  TangentField out = *this;
  for (auto& t : out.terms_) t.coeff *= s;
  return out;
}

TangentField TangentField::operator+(const TangentField& o) const {
  TangentField out = *this;
  for (const auto& t : o.terms_) out.add_term(t.exponent, t.coeff);
  return out;
}

double TangentField::c0_norm() const {
  double worst = 0.0;
  for (const auto& x : field_panel(n_)) worst = std::max(worst, value(x).norm());
  return worst;
}

double TangentField::c1_norm() const {
  double worst = 0.0;
  for (const auto& x : field_panel(n_)) {
    const PMat b = tangent_frame(x);
    // Covariant derivative on the sphere: tangential part of the ambient one.
    const PMat cov = b.transpose() * derivative(x) * b;
    worst = std::max(worst, cov.norm());
  }
  return worst;
}

PMat SphereMap::differential(const PVec& x) const { return differential_fd(*this, x); }

PerturbedMap::PerturbedMap(GroupElement r, TangentField y) : r_(std::move(r)), y_(std::move(y)) {
  if (y_.ambient() != r_.dim()) throw ConfigInvalid("field", "field and rotation dimensions differ");
}

PVec PerturbedMap::apply(const PVec& x) const {
  const PVec z = r_.mat() * x;
  return sphere_exp(z, y_.value(z));
}

PMat PerturbedMap::differential(const PVec& x) const {
  const PVec z = r_.mat() * x;
  PVec p;
  PMat dp;
  y_.polynomial_with_derivative(z, p, dp);
  const PVec v = p - z * z.dot(p);
  const int n = ambient();
  const PMat dy = dp - z * (p.transpose() + z.transpose() * dp) - z.dot(p) * PMat::Identity(n, n);
  const ExpDerivative e = sphere_exp_derivative(z, v);
  return (e.dz + e.dv * dy) * r_.mat();
}

PVec FlowMap::apply(const PVec& x) const { return sphere_exp(x, tangent_project(x, v_->value(x))); }

PMat FlowMap::differential(const PVec& x) const {
  const int n = ambient();
  const PVec v = v_->value(x);
  const PMat dv = v_->derivative(x);
  const PVec w = v - x * x.dot(v);
  const PMat dw = dv - x * (v.transpose() + x.transpose() * dv) - x.dot(v) * PMat::Identity(n, n);
  const ExpDerivative e = sphere_exp_derivative(x, w);
  return e.dz + e.dv * dw;
}

PVec FlowMap::inverse(const PVec& x, double tol, int max_iter) const {
  PVec y = sphere_exp(x, -tangent_project(x, v_->value(x)));
  for (int it = 0; it < max_iter; ++it) {
    const PVec step = sphere_log(y, x) - tangent_project(y, v_->value(y));
    y = sphere_exp(y, tangent_project(y, step));
    if (step.norm() < tol) break;
  }
  return y;
}

PVec apply_map(const SphereMap& f, const PVec& x) { return f.apply(x); }

PMat jacobian(const SphereMap& f, const PVec& x) {
  const PVec fx = f.apply(x);
  return tangent_frame(fx).transpose() * f.differential(x) * tangent_frame(x);
}

PMat differential_fd(const SphereMap& f, const PVec& x, double h) {
  // Central differences along great circles through x in each frame
  // direction, assembled as an ambient matrix on T_x (zero on the normal).
  const int n = f.ambient();
  const PMat b = tangent_frame(x);
  PMat dt(n, n - 1);
  for (int j = 0; j < n - 1; ++j) {
    const PVec xp = sphere_exp(x, h * b.col(j));
    const PVec xm = sphere_exp(x, -h * b.col(j));
    dt.col(j) = (f.apply(xp) - f.apply(xm)) / (2.0 * h);
  }
  return dt * b.transpose();
}

PMat jacobian_fd(const SphereMap& f, const PVec& x, double h) {
  const PVec fx = f.apply(x);
  return tangent_frame(fx).transpose() * differential_fd(f, x, h) * tangent_frame(x);
}

MapList as_map_list(const std::vector<PerturbedMap>& maps) {
  MapList out;
  for (const auto& m : maps) out.push_back(std::make_shared<PerturbedMap>(m));
  return out;
}

namespace {

void check_maps(const MapList& maps, const PVec& x0) {
  if (maps.empty()) throw ConfigInvalid("maps", "need at least one map");
  for (const auto& m : maps)
    if (m->ambient() != x0.size()) throw ConfigInvalid("x0", "dimension mismatch with maps");
}

// Householder QR with positive diagonal; returns log|r_ii|.
void orthonormalize(PMat& a, PVec& logs) {
  Eigen::HouseholderQR<PMat> qr(a);
  const int k = static_cast<int>(a.cols());
  PMat q = qr.householderQ() * PMat::Identity(a.rows(), k);
  const auto& r = qr.matrixQR();
  for (int i = 0; i < k; ++i) {
    const double rii = r(i, i);
    if (!(std::abs(rii) < std::exp(50.0)) || !(std::abs(rii) > std::exp(-50.0)))
      throw NumericalBlowup("orthonormalization factor outside [e^-50, e^50]");
    logs(i) = std::log(std::abs(rii));
    if (rii < 0.0) q.col(i) *= -1.0;
  }
  a = q;
}

}  // namespace

LyapunovSpectrum lyapunov_spectrum(const MapList& maps, const PVec& x0, long n_steps,
                                   std::uint64_t seed, const LyapunovOptions& opt) {
  check_maps(maps, x0);
  const int n = static_cast<int>(x0.size());
  const int d = n - 1;
  if (n_steps < 20 * opt.batches && opt.batches > 1)
    throw ConfigInvalid("steps", "too few steps for the batch count");
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(maps.size()) - 1);
  PVec x = x0.normalized();
  PMat q = tangent_frame(x);
  PVec logs(d);
  for (long s = 0; s < opt.burn_in; ++s) {
    const auto& f = *maps[pick(rng)];
    PMat a = f.differential(x) * q;
    x = f.apply(x);
    x /= x.norm();
    a -= x * (x.transpose() * a);
    orthonormalize(a, logs);
    q = a;
  }
  const long batch_len = n_steps / opt.batches;
  const long used = batch_len * opt.batches;
  Mat batch_sums = Mat::Zero(d, opt.batches);
  Vec batch_logdet = Vec::Zero(opt.batches);
  PVec total = PVec::Zero(d);
  LyapunovSpectrum out;
  PMat b0 = tangent_frame(x);
  for (long s = 0; s < used; ++s) {
    const auto& f = *maps[pick(rng)];
    const PMat df = f.differential(x);
    PMat a = df * q;
    const PVec fx = f.apply(x);
    const double drift = std::abs(fx.norm() - 1.0);
    out.max_norm_drift = std::max(out.max_norm_drift, drift);
    x = fx / fx.norm();
    a -= x * (x.transpose() * a);
    orthonormalize(a, logs);
    q = a;
    const long b = s / batch_len;
    batch_sums.col(b) += logs;
    total += logs;
    // Independent scalar accumulation of ln|det J| in deterministic frames.
    PMat b1 = tangent_frame(x);
    const double ld = std::log(std::abs((b1.transpose() * df * b0).determinant()));
    b0 = std::move(b1);
    batch_logdet(b) += ld;
    if (opt.trace_every > 0 && (s + 1) % opt.trace_every == 0)
      out.trace.emplace_back(s + 1, total / double(s + 1));
  }
  out.n_steps = used;
  const Mat batch_means = batch_sums / double(batch_len);
  Vec mean = batch_means.rowwise().mean();
  // Sort descending (the QR recursion already orders them asymptotically).
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return mean(i) > mean(j); });
  out.exponents.resize(d);
  out.standard_errors.resize(d);
  out.partial_sums.resize(d);
  out.partial_sum_se.resize(d);
  out.batch_means.resize(d, opt.batches);
  const int nb = opt.batches;
  auto se_of = [&](const Vec& v) {
    if (nb < 2) return 0.0;
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / (nb - 1) / nb);
  };
  Vec partial = Vec::Zero(nb);
  for (int k = 0; k < d; ++k) {
    const Vec row = batch_means.row(order[k]).transpose();
    out.batch_means.row(k) = row.transpose();
    out.exponents(k) = row.mean();
    out.standard_errors(k) = se_of(row);
    partial += row;
    out.partial_sums(k) = partial.mean();
    out.partial_sum_se(k) = se_of(partial);
  }
  out.logdet_average = PVec::Constant(1, batch_logdet.sum() / double(used));
  return out;
}

LyapunovSpectrum lyapunov_spectrum(const std::vector<PerturbedMap>& maps, const PVec& x0,
                                   long n_steps, std::uint64_t seed, const LyapunovOptions& opt) {
  return lyapunov_spectrum(as_map_list(maps), x0, n_steps, seed, opt);
}

RateEstimate lambda_r_estimate(const MapList& maps, int r, const PVec& x0, const PMat& frame0,
                               long n_steps, std::uint64_t seed, int batches) {
  check_maps(maps, x0);
  const int d = static_cast<int>(x0.size()) - 1;
  if (r < 1 || r > d) throw ConfigInvalid("rank", "must satisfy 1 <= r <= d");
  if (frame0.cols() != r) throw ConfigInvalid("frame0", "frame must have r columns");
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(maps.size()) - 1);
  PVec x = x0.normalized();
  PMat e = frame0;
  const long batch_len = n_steps / batches;
  const long used = batch_len * batches;
  Vec sums = Vec::Zero(batches);
  for (long s = 0; s < used; ++s) {
    const auto& f = *maps[pick(rng)];
    const PMat df = f.differential(x);
    // ln det(Df | E) with Euclidean (in-frame identity) metrics.
    sums(s / batch_len) += std::log(subspace_det(df, e, PMat::Identity(df.rows(), df.rows()),
                                                 PMat::Identity(df.rows(), df.rows())));
    PVec fx = f.apply(x);
    x = fx / fx.norm();
    e = induced_frame(df, e, x).basis;
  }
  const Vec means = sums / double(batch_len);
  RateEstimate out;
  out.value = means.mean();
  out.se = batches > 1 ? std::sqrt((means.array() - out.value).square().sum() / (batches - 1) / batches)
                       : 0.0;
  return out;
}

EmpiricalMeasure empirical_measure(const MapList& maps, const PVec& x0, long n_steps,
                                   std::uint64_t seed, long burn_in, long thin) {
  check_maps(maps, x0);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(maps.size()) - 1);
  PVec x = x0.normalized();
  for (long s = 0; s < burn_in; ++s) {
    x = maps[pick(rng)]->apply(x);
    x /= x.norm();
  }
  EmpiricalMeasure mu;
  mu.burn_in = burn_in;
  mu.seed = seed;
  mu.points.reserve(n_steps / std::max(1L, thin) + 1);
  for (long s = 0; s < n_steps; ++s) {
    x = maps[pick(rng)]->apply(x);
    x /= x.norm();
    if (s % thin == 0) mu.points.push_back(x);
  }
  mu.weights = Vec::Constant(mu.points.size(), 1.0 / mu.points.size());
  return mu;
}

DiscrepancyEstimate haar_discrepancy(const HarmonicCoeffs& phi, const EmpiricalMeasure& orbit,
                                     int batches) {
  const long n = static_cast<long>(orbit.points.size());
  std::vector<double> y(harmonic_count(phi.lmax()));
  Vec vals(n);
  for (long i = 0; i < n; ++i) {
    const PVec& p = orbit.points[i];
    real_harmonics(Eigen::Vector3d(p(0), p(1), p(2)), phi.lmax(), y.data());
    vals(i) = Eigen::Map<const Vec>(y.data(), y.size()).dot(phi.coeffs());
  }
  DiscrepancyEstimate out;
  const double integral = vals.dot(orbit.weights);
  out.signed_value = integral - phi.mean();
  out.value = std::abs(out.signed_value);
  const long bl = n / batches;
  if (bl > 0 && batches > 1) {
    Vec bm(batches);
    for (int b = 0; b < batches; ++b) bm(b) = vals.segment(b * bl, bl).mean();
    out.se = std::sqrt((bm.array() - bm.mean()).square().sum() / (batches - 1) / batches);
  }
  return out;
}

}  // namespace isokam
