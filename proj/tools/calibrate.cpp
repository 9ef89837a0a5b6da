// Runs the randomized geometry audit and prints the c_geom table.
#include <cstdio>

#include "cantor/calibration.hpp"
#include "cantor/net.hpp"

int main() {
  using namespace cantor;
  namespace cal = calibration;
  const int pairs[][2] = {{2, 1}, {3, 1}, {3, 2}};
  for (const auto& dm : pairs) {
    const GeometryAudit a = geometry_audit(dm[0], dm[1], cal::kAuditCases, cal::kAuditMaxLevel, cal::kAuditSeed);
    std::printf("d=%d m=%d  max transfer %.6g  max boundary %.6g  max interior excess %.3g  max rho/eps %.4f  c_geom %.6g\n",
                dm[0], dm[1], a.max_transfer_ratio, a.max_boundary_ratio, a.max_interior_excess,
                a.max_rho_over_eps, a.calibrated_constant());
  }
  return 0;
}
