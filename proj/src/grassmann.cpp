#include "isokam/grassmann.hpp"

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "isokam/parallel.hpp"
#include "isokam/rds.hpp"

namespace isokam {

namespace {

constexpr int kShards = 64;

Mat orthonormal_columns(const Mat& span) {
  Eigen::HouseholderQR<Mat> qr(span);
  const int r = static_cast<int>(span.cols());
  Mat q = qr.householderQ() * Mat::Identity(span.rows(), r);
  const auto& rr = qr.matrixQR();
  double logdet = 0.0;
  for (int i = 0; i < r; ++i) {
    if (rr(i, i) == 0.0) throw RankDeficient("frame columns are linearly dependent");
    logdet += std::log(std::abs(rr(i, i)));
    if (rr(i, i) < 0.0) q.col(i) *= -1.0;
  }
  if (2.0 * logdet < std::log(1e-300)) throw RankDeficient("Gram determinant below 1e-300");
  return q;
}

// Sharded Monte-Carlo driver: sample(rng) returns one observation; shard k
// draws from Rng(split_seed(seed, k)).
template <class Sample>
McEstimate sharded_mean(long n_samples, std::uint64_t seed, Sample&& sample) {
  std::vector<double> sum(kShards, 0.0), sum2(kShards, 0.0);
  std::vector<long> count(kShards, 0);
  parallel_for(kShards, [&](int k) {
    Rng rng(split_seed(seed, k));
    const long lo = n_samples * k / kShards, hi = n_samples * (k + 1) / kShards;
    double s = 0.0, s2 = 0.0;
    for (long i = lo; i < hi; ++i) {
      const double v = sample(rng);
      s += v;
      s2 += v * v;
    }
    sum[k] = s;
    sum2[k] = s2;
    count[k] = hi - lo;
  });
  double s = 0.0, s2 = 0.0;
  long n = 0;
  for (int k = 0; k < kShards; ++k) {
    s += sum[k];
    s2 += sum2[k];
    n += count[k];
  }
  McEstimate out;
  if (n == 0) return out;
  out.value = s / n;
  const double var = std::max(0.0, s2 / n - out.value * out.value) * n / std::max(1L, n - 1);
  out.se = std::sqrt(var / n);
  return out;
}

}  // namespace

SubspaceFrame SubspaceFrame::from_span(const Mat& span) { return {orthonormal_columns(span)}; }

double subspace_det(const Mat& l, const Mat& e, const Mat& g1, const Mat& g2) {
  const Mat le = l * e;
  const double top = (le.transpose() * g2 * le).determinant();
  const double bottom = (e.transpose() * g1 * e).determinant();
  if (!(top >= 1e-300) || !(bottom >= 1e-300)) throw RankDeficient("Gram determinant below 1e-300");
  return std::sqrt(top / bottom);
}

double subspace_det(const Mat& l, const SubspaceFrame& e) {
  const Mat le = l * e.basis;
  const double top = (le.transpose() * le).determinant();
  if (!(top >= 1e-300)) throw RankDeficient("Gram determinant below 1e-300");
  return std::sqrt(top);
}

SubspaceFrame haar_grassmannian(int n, int r, Rng& rng) {
  if (r < 1 || r > n) throw ConfigInvalid("rank", "must satisfy 1 <= r <= n");
  return {orthonormal_columns(gaussian_matrix(n, r, rng))};
}

SubspaceFrame haar_grassmannian(int n, int r, std::uint64_t seed) {
  Rng rng(seed);
  return haar_grassmannian(n, r, rng);
}

SphereMoments sphere_moments(int d, long n_samples, std::uint64_t seed) {
  if (d < 2) throw ConfigInvalid("dim", "must be >= 2");
  if (n_samples < 2) throw ConfigInvalid("samples", "must be >= 2");
  // Three estimators over the same sample stream.
  std::vector<double> acc(kShards * 6, 0.0);
  parallel_for(kShards, [&](int k) {
    Rng rng(split_seed(seed, k));
    const long lo = n_samples * k / kShards, hi = n_samples * (k + 1) / kShards;
    double* a = &acc[6 * k];
    for (long i = lo; i < hi; ++i) {
      const Vec x = uniform_sphere_point(d, rng);
      const double x1 = x(0) * x(0), x2 = x(1) * x(1);
      const double v[3] = {x1, x1 * x1, x1 * x2};
      for (int j = 0; j < 3; ++j) {
        a[j] += v[j];
        a[3 + j] += v[j] * v[j];
      }
    }
  });
  double tot[6] = {0, 0, 0, 0, 0, 0};
  for (int k = 0; k < kShards; ++k)
    for (int j = 0; j < 6; ++j) tot[j] += acc[6 * k + j];
  const double n = static_cast<double>(n_samples);
  auto est = [&](int j) {
    McEstimate e;
    e.value = tot[j] / n;
    e.se = std::sqrt(std::max(0.0, tot[3 + j] / n - e.value * e.value) / (n - 1));
    return e;
  };
  return {est(0), est(1), est(2)};
}

McEstimate lambda_r_mc(const Mat& l, int r, long n_samples, std::uint64_t seed,
                       GrassmannSampling sampling) {
  const int d = static_cast<int>(l.rows());
  if (l.cols() != d) throw ConfigInvalid("L", "must be square");
  if (r < 1 || r > d) throw ConfigInvalid("rank", "must satisfy 1 <= r <= d");
  const Mat a = Mat::Identity(d, d) + l;
  if (sampling == GrassmannSampling::Independent) {
    return sharded_mean(n_samples, seed, [&](Rng& rng) {
      return std::log(subspace_det(a, haar_grassmannian(d, r, rng)));
    });
  }
  // Every basis vector lies in exactly r of the d cyclic windows, so the
  // first-order term tr(E^T L E) sums to r Tr L over a group: each window is
  // Haar-distributed and the group mean has no first-order noise.
  const long groups = std::max(2L, (n_samples + d - 1) / d);
  return sharded_mean(groups, seed, [&](Rng& rng) {
    const Mat q = orthonormal_columns(gaussian_matrix(d, d, rng));
    const Mat aq = a * q;
    double s = 0.0;
    Mat w(d, r);
    for (int j = 0; j < d; ++j) {
      for (int c = 0; c < r; ++c) w.col(c) = aq.col((j + c) % d);
      const double g = (w.transpose() * w).determinant();
      if (!(g >= 1e-300)) throw RankDeficient("Gram determinant below 1e-300");
      s += 0.5 * std::log(g);
    }
    return s / d;
  });
}

double lambda_r_alpha1(const Mat& l, int r) {
  const double d = static_cast<double>(l.rows());
  return r / d * l.trace();
}

double lambda_r_alpha2(const Mat& l, int r) {
  const int di = static_cast<int>(l.rows());
  const double d = di;
  const Mat k = 0.5 * (l + l.transpose()) - (l.trace() / d) * Mat::Identity(di, di);
  const double coeff = di == 1 ? 0.0 : r * (d - r) / ((d + 2.0) * (d - 1.0));
  return -r / (2.0 * d) * (l * l).trace() + coeff * (k * k).trace();
}

double lambda_r_taylor(const Mat& l, int r) { return lambda_r_alpha1(l, r) + lambda_r_alpha2(l, r); }

double lambda_r_exponent_taylor(const Mat& l, int r) {
  const int di = static_cast<int>(l.rows());
  const double d = di;
  const Mat k = 0.5 * (l + l.transpose()) - (l.trace() / d) * Mat::Identity(di, di);
  const double coeff = di == 1 ? 0.0 : (d - 2.0 * r + 1.0) / ((d + 2.0) * (d - 1.0));
  return l.trace() / d - (l * l).trace() / (2.0 * d) + coeff * (k * k).trace();
}

double metric_taylor(const Mat& g, int r) { return r / (2.0 * g.rows()) * g.trace(); }

McEstimate metric_mc(const Mat& g, int r, long n_samples, std::uint64_t seed) {
  const int d = static_cast<int>(g.rows());
  const Mat id = Mat::Identity(d, d);
  const Mat g2 = id + g;
  return sharded_mean(n_samples, seed, [&](Rng& rng) {
    const SubspaceFrame e = haar_grassmannian(d, r, rng);
    return std::log(subspace_det(id, e.basis, id, g2));
  });
}

SubspaceFrame induced_frame(const Mat& j, const Mat& e, const Vec& base) {
  Mat img = j * e;
  if (base.size() == img.rows()) img -= base * (base.transpose() * img);
  return SubspaceFrame::from_span(img);
}

SubspaceFrame chart_image(const Mat& j, const Mat& e, const Mat& p) {
  const int n = static_cast<int>(p.rows());
  const Mat proj_perp = Mat::Identity(n, n) - p * p.transpose();
  const Mat x = p.transpose() * e;  // P-coordinates of the frame
  const Mat a = proj_perp * e * x.inverse();  // chart coordinate A: P -> P^perp
  const Mat ia = p + a;                       // I_A on P-coordinates
  const Mat jia = j * ia;
  const Mat a_new = jia * (p.transpose() * jia).inverse() - p;
  return SubspaceFrame::from_span(p + a_new);
}

double max_principal_angle(const Mat& a, const Mat& b) {
  const Mat qa = orthonormal_columns(a), qb = orthonormal_columns(b);
  Eigen::JacobiSVD<Mat> svd(qa.transpose() * qb);
  const double smin = svd.singularValues().minCoeff();
  // sin of the largest angle from the complement residual is more accurate.
  const Mat resid = qb - qa * (qa.transpose() * qb);
  Eigen::JacobiSVD<Mat> rs(resid);
  return std::atan2(rs.singularValues().maxCoeff(), std::min(1.0, smin));
}

std::pair<Vec, SubspaceFrame> induced_map(const SphereMap& f, const Vec& x, const SubspaceFrame& e) {
  const Vec fx = f.apply(x);
  return {fx, induced_frame(f.differential(x), e.basis, fx)};
}

}  // namespace isokam
