#include "isokam/sphere.hpp"

#include <cmath>

namespace isokam {

PVec tangent_project(const PVec& x, const PVec& v) { return v - x * x.dot(v); }

PVec sphere_exp(const PVec& x, const PVec& v) {
  const double n = v.norm();
  if (n < 1e-300) return x;
  const double sinc = n < 1e-6 ? 1.0 - n * n / 6.0 : std::sin(n) / n;
  PVec y = std::cos(n) * x + sinc * v;
  return y / y.norm();
}

PVec sphere_log(const PVec& x, const PVec& y) {
  const double c = x.dot(y);
  const PVec w = y - c * x;
  const double s = w.norm();
  if (c < 0.0 && s < 1e-9) throw AntipodalPoints("log undefined at the antipode");
  const double theta = std::atan2(s, c);
  if (s < 1e-300) return PVec::Zero(x.size());
  return w * (theta / s);
}

double sphere_distance(const PVec& x, const PVec& y) {
  const double c = x.dot(y);
  return std::atan2((y - c * x).norm(), c);
}

PMat tangent_frame(const PVec& x) {
  const int n = static_cast<int>(x.size());
  int skip = 0;
  x.cwiseAbs().maxCoeff(&skip);
  PMat frame(n, n - 1);
  int col = 0;
  for (int k = 0; k < n; ++k) {
    if (k == skip) continue;
    PVec e = PVec::Zero(n);
    e(k) = 1.0;
    e -= x * x(k);
    for (int j = 0; j < col; ++j) e -= frame.col(j) * frame.col(j).dot(e);
    // Second pass for orthogonality at the 1e-16 level.
    e -= x * x.dot(e);
    for (int j = 0; j < col; ++j) e -= frame.col(j) * frame.col(j).dot(e);
    frame.col(col++) = e / e.norm();
  }
  return frame;
}

ExpDerivative sphere_exp_derivative(const PVec& z, const PVec& v) {
  const int n = static_cast<int>(z.size());
  const double r = v.norm();
  double c = std::cos(r), sinc, dsinc_over_r;  // sinc'(r)/r
  if (r < 1e-4) {
    const double r2 = r * r;
    sinc = 1.0 - r2 / 6.0 + r2 * r2 / 120.0;
    dsinc_over_r = -1.0 / 3.0 + r2 / 30.0;
  } else {
    sinc = std::sin(r) / r;
    dsinc_over_r = (r * c - std::sin(r)) / (r * r * r);
  }
  ExpDerivative out;
  out.value = c * z + sinc * v;
  out.dz = c * PMat::Identity(n, n);
  // d cos r = -sin r dr = -sinc (v . dv); d sinc = dsinc_over_r (v . dv).
  out.dv = sinc * PMat::Identity(n, n) + (v * v.transpose()) * dsinc_over_r - z * v.transpose() * sinc;
  return out;
}

PVec random_sphere_point(int ambient, Rng& rng) { return uniform_sphere_point(ambient, rng); }

PVec random_tangent(const PVec& x, double norm, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PVec v(x.size());
  for (int i = 0; i < v.size(); ++i) v(i) = normal(rng);
  v = tangent_project(x, v);
  return v * (norm / v.norm());
}

}  // namespace isokam
