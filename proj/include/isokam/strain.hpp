#pragma once

#include <cstdint>

#include "isokam/grassmann.hpp"
#include "isokam/rds.hpp"

namespace isokam {

// All tensors in the orthonormal frame tangent_frame(x), so g = I in-frame.
struct StrainSample {
  PVec x;
  PMat pullback;  // J^T J
  PMat e;         // (J^T J - I) / 2
  PMat e_c;       // (Tr(J^T J - I) / 2d) I
  PMat e_nc;      // e - e_c
};

PMat pullback_metric(const SphereMap& f, const PVec& x);
StrainSample strain_at(const SphereMap& f, const PVec& x);
StrainSample strain_from_jacobian(const PMat& j);

struct StrainNorms {
  McEstimate h0_sq;      // int ||f*g - g||^2
  McEstimate h0_e_c_sq;  // int ||E_C||^2
  McEstimate h0_e_nc_sq; // int ||E_NC||^2
  double sup = 0.0;      // max over the sample points of ||f*g - g||
  long n_quad = 0;
};
// Monte-Carlo over uniform points of S^d; volume normalized to 1.
StrainNorms strain_norms(const SphereMap& f, long n_quad, std::uint64_t seed);

}  // namespace isokam
