#pragma once

#include <functional>

#include "hgsc/pencil.hpp"
#include "hgsc/tolerances.hpp"

namespace hgsc {

/// ζ1(x1) and its derivative.
struct Zeta1 {
  double value{0.0};
  double derivative{0.0};
};

/// The pair certifying Ω·q1 + q2 ⪯ 0.
struct OmegaMatrices {
  Matrix q1;
  Matrix q2;
};

struct OmegaResult {
  double omega{0.0};
  /// a_ζ1 after any feasibility increases.
  double a_zeta1{0.0};
  int increases{0};
  /// λ_max(Ω·q1 + q2) of the accepted certificate.
  double margin{0.0};
};

/// Snapshot of every design freedom at one point.
struct Freedoms {
  double a{0.0};
  double omega{0.0};
  double zeta1{0.0};
  double zeta1_prime{0.0};
  double kappa{0.0};
  double a_zeta1{0.0};
  int increases{0};
};

/// ṙ = max{−a·r·(r−1) + r·Ω, 0}.
double GainRate(double a, double omega, double r);

/// Smallest s with s·q1 + q2 ⪯ 0 reached from below, i.e. σ_min(q2, −q1),
/// post-checked by NSD at 0.999·s.
/// @throws CertificateError if the result is not positive or fails the check.
double SmallEnoughValue(const Matrix& q1, const Matrix& q2,
                        const Tolerances& tol, const char* what);

/// Runs the Ω feasibility loop: Ω = σ_max,f(q2, −q1); on infeasibility
/// a_ζ1 grows by the factor (1 + q_a) and the matrices are rebuilt.
/// @throws CertificateError when `max_iterations` increases do not suffice.
OmegaResult SolveOmega(
    const std::function<OmegaMatrices(double a_zeta1)>& build, double a_zeta1,
    double q_a, int max_iterations, const Tolerances& tol);

}  // namespace hgsc
