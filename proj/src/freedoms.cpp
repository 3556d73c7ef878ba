#include "hgsc/freedoms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {

double GainRate(double a, double omega, double r) {
  return std::max(-a * r * (r - 1.0) + r * omega, 0.0);
}

double SmallEnoughValue(const Matrix& q1, const Matrix& q2,
                        const Tolerances& tol, const char* what) {
  const double s = SigmaMin(q2, -q1);
  if (!(s > 0.0)) {
    std::ostringstream os;
    os << what << " is not positive (" << s << ")";
    throw CertificateError(os.str());
  }
  const Matrix m = 0.999 * s * q1 + q2;
  if (!CertifyNsd(m, PsdTolerance(m, tol.psd_rel)).ok) {
    throw CertificateError(std::string(what) + " fails its NSD post-check");
  }
  return s;
}

OmegaResult SolveOmega(
    const std::function<OmegaMatrices(double a_zeta1)>& build, double a_zeta1,
    double q_a, int max_iterations, const Tolerances& tol) {
  OmegaResult out;
  double margin = 0.0;
  for (int k = 0; k <= max_iterations; ++k) {
    const OmegaMatrices q = build(a_zeta1);
    const PencilResult p =
        SigmaMaxFinite(q.q2, -q.q1, tol.rank_tol, tol.psd_rel);
    if (p.feasible) {
      const double omega = std::max(p.value, 0.0);
      const Matrix m = omega * q.q1 + q.q2;
      NsdCertificate cert;
      if (omega == p.value) {
        // The pencil already evaluated λ_max at this exact point.
        cert.max_eig = p.margin;
        cert.ok = cert.max_eig <= PsdTolerance(m, tol.psd_rel);
      } else {
        cert = CertifyNsd(m, PsdTolerance(m, tol.psd_rel));
      }
      if (cert.ok) {
        out.omega = omega;
        out.a_zeta1 = a_zeta1;
        out.increases = k;
        out.margin = cert.max_eig;
        return out;
      }
      margin = cert.max_eig;
    } else {
      margin = p.margin;
    }
    a_zeta1 *= 1.0 + q_a;
  }
  std::ostringstream os;
  os << "Omega feasibility loop exceeded " << max_iterations
     << " increases of a_zeta1 (last margin " << margin << ")";
  throw CertificateError(os.str());
}

}  // namespace hgsc
