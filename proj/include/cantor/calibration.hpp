// Frozen geometric constants.
//
// c_geom stands for the dimension constant in the net-transfer and
// boundary-part bounds. Each value is twice the largest ratio
//   max( (|W∩Q| - |W'∩Q|)_+ , H^m(B(Q, W, 2ε)) ) / r_n^{d+m}
// seen in a 10^4-case randomized audit over levels 1..6 (half the cases
// with W at the edge of Γ_n). Regenerate with `cantor_calibrate`.
#pragma once

#include "cantor/errors.hpp"

namespace cantor::calibration {

inline constexpr double kGeomConstant_d2_m1 = 5.06838;
inline constexpr double kGeomConstant_d3_m1 = 5.09221;
inline constexpr double kGeomConstant_d3_m2 = 5.61907;

/// Audit parameters that produced the constants above.
inline constexpr int kAuditCases = 10000;
inline constexpr int kAuditMaxLevel = 6;
inline constexpr unsigned long long kAuditSeed = 20240611ULL;

inline double c_geom(int d, int m) {
  if (d == 2 && m == 1) return kGeomConstant_d2_m1;
  if (d == 3 && m == 1) return kGeomConstant_d3_m1;
  if (d == 3 && m == 2) return kGeomConstant_d3_m2;
  throw DomainError("unsupported (d,m): no calibrated geometric constant");
}

/// Frozen bound on max/min of μ(B(x,r))/r over sample points and radii for
/// E(2,2) at depth 12 (radii 2^-2..2^-10).
inline constexpr double kAhlforsSpreadBound = 64.0;

}  // namespace cantor::calibration
