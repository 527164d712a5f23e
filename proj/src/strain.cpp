#include "isokam/strain.hpp"

#include <cmath>
#include <vector>

#include "isokam/parallel.hpp"

namespace isokam {

PMat pullback_metric(const SphereMap& f, const PVec& x) {
  const PMat j = jacobian(f, x);
  return j.transpose() * j;
}

StrainSample strain_from_jacobian(const PMat& j) {
  const int d = static_cast<int>(j.cols());
  StrainSample s;
  s.pullback = j.transpose() * j;
  s.pullback = 0.5 * (s.pullback + s.pullback.transpose());
  const PMat id = PMat::Identity(d, d);
  s.e = 0.5 * (s.pullback - id);
  s.e_c = ((s.pullback - id).trace() / (2.0 * d)) * id;
  s.e_nc = s.e - s.e_c;
  return s;
}

StrainSample strain_at(const SphereMap& f, const PVec& x) {
  StrainSample s = strain_from_jacobian(jacobian(f, x));
  s.x = x;
  return s;
}

StrainNorms strain_norms(const SphereMap& f, long n_quad, std::uint64_t seed) {
  if (n_quad < 2) throw ConfigInvalid("nquad", "must be >= 2");
  constexpr int kShards = 64;
  std::vector<double> acc(kShards * 7, 0.0);
  parallel_for(kShards, [&](int k) {
    Rng rng(split_seed(seed, k));
    const long lo = n_quad * k / kShards, hi = n_quad * (k + 1) / kShards;
    double* a = &acc[7 * k];
    for (long i = lo; i < hi; ++i) {
      const PVec x = random_sphere_point(f.ambient(), rng);
      const StrainSample s = strain_at(f, x);
      const double v[3] = {(s.pullback - PMat::Identity(s.e.rows(), s.e.cols())).squaredNorm(),
                           s.e_c.squaredNorm(), s.e_nc.squaredNorm()};
      for (int j = 0; j < 3; ++j) {
        a[j] += v[j];
        a[3 + j] += v[j] * v[j];
      }
      a[6] = std::max(a[6], std::sqrt(v[0]));
    }
  });
  double tot[6] = {0, 0, 0, 0, 0, 0};
  StrainNorms out;
  for (int k = 0; k < kShards; ++k) {
    for (int j = 0; j < 6; ++j) tot[j] += acc[7 * k + j];
    out.sup = std::max(out.sup, acc[7 * k + 6]);
  }
  const double n = static_cast<double>(n_quad);
  auto est = [&](int j) {
    McEstimate e;
    e.value = tot[j] / n;
    e.se = std::sqrt(std::max(0.0, tot[3 + j] / n - e.value * e.value) / (n - 1));
    return e;
  };
  out.h0_sq = est(0);
  out.h0_e_c_sq = est(1);
  out.h0_e_nc_sq = est(2);
  out.n_quad = n_quad;
  return out;
}

}  // namespace isokam
