#include "hgsc/sf.hpp"

#include <cmath>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {

void SfParams::Validate() const {
  if (!(c2 > 0.0 && c2 < c1 && c1 < 1.0)) {
    throw ConfigError("require 0 < c2 < c1 < 1");
  }
  if (!(c_zeta1 > 0.0)) throw ConfigError("c_zeta1 must be positive");
  if (!(q_a > 0.0)) throw ConfigError("q_a must be positive");
  if (!(a_zeta1_init > 0.0)) throw ConfigError("a_zeta1_init must be positive");
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
}

namespace internal {

BoundBlocks MakeBoundBlocks(const SystemSpec& spec, double x1,
                            const Zeta1& zeta) {
  const int m = spec.n - 1;
  BoundBlocks b;
  b.lower_bounds = Matrix::Zero(m, m);
  b.phi_zeta = Vector::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      b.lower_bounds(i, j) = spec.Bound(i + 2, j + 2, x1);
    }
    b.phi_zeta(i) = spec.Bound(i + 2, 1, x1) +
                    spec.Bound(i + 2, 2, x1) * std::fabs(zeta.value);
  }
  const double phi12 = spec.Upper(1, x1);
  const double slope = zeta.derivative * x1 + zeta.value;
  b.h = slope * phi12;
  b.xi_bar = (spec.Bound(1, 1, x1) + std::fabs(zeta.value) * phi12) *
             std::fabs(slope);
  return b;
}

}  // namespace internal

StateFeedbackDesign::StateFeedbackDesign(SystemSpec spec,
                                         ControllerCertificate ctrl,
                                         SfParams params, Tolerances tol)
    : spec_(std::move(spec)),
      ctrl_(std::move(ctrl)),
      params_(params),
      tol_(tol),
      deltas_(spec_, ctrl_) {
  params_.Validate();
  shape_ = Expr::Constant(1.0) +
           Expr::Constant(params_.c_zeta1) * spec_.GammaExpr();
  shape_prime_ = Differentiate(shape_, 1);
}

Zeta1 StateFeedbackDesign::Zeta(double x1, double a_zeta1) const {
  const double x[] = {x1};
  return {a_zeta1 * shape_.Evaluate(x), a_zeta1 * shape_prime_.Evaluate(x)};
}

double StateFeedbackDesign::ComputeA(double x1) const {
  const Matrix drift = BuildControllerMatrix(spec_, ctrl_.gain_coeff, x1);
  const Matrix q1 = LyapunovForm(ctrl_.p, ShiftedDiagonal(spec_.n));
  const Matrix q2 = (1.0 - params_.c1) * LyapunovForm(ctrl_.p, drift);
  return SmallEnoughValue(q1, q2, tol_, "a");
}

OmegaMatrices StateFeedbackDesign::BuildOmegaMatrices(double x1,
                                                      double a_zeta1) const {
  return BuildOmegaMatrices(x1, a_zeta1, ComputeA(x1));
}

OmegaMatrices StateFeedbackDesign::BuildOmegaMatrices(double x1,
                                                      double a_zeta1,
                                                      double a) const {
  const int m = spec_.n - 1;
  const Zeta1 zeta = Zeta(x1, a_zeta1);
  const internal::BoundBlocks b = internal::MakeBoundBlocks(spec_, x1, zeta);
  const DeltaFactors d = deltas_.Controller(x1);
  const Matrix abs_p = ctrl_.p.cwiseAbs();
  const double phi12 = spec_.Upper(1, x1);

  // |P·H·B1ᵀ|: only the first column of P scaled by h is nonzero.
  Matrix p_h = Matrix::Zero(m, m);
  p_h.col(0) = (ctrl_.p.col(0) * b.h).cwiseAbs();

  const int dim = 2 * m + 1;
  OmegaMatrices q;
  q.q1 = Matrix::Zero(dim, dim);
  q.q2 = Matrix::Zero(dim, dim);
  q.q1.block(1, 1, m, m) = -d.delta_d * d.dbar;

  q.q2(0, 0) = -(1.0 - params_.c2) * zeta.value * phi12 + spec_.Bound(1, 1, x1);
  const Vector mixed =
      (b.xi_bar * ctrl_.p.col(0)).cwiseAbs() + abs_p * b.phi_zeta;
  q.q2.block(0, 1, 1, m) = mixed.transpose();
  q.q2.block(1, 0, m, 1) = mixed;
  q.q2(0, m + 1) = q.q2(m + 1, 0) = 0.5 * phi12;
  q.q2.block(1, 1, m, m) = -a * d.delta_d * d.dbar + p_h + p_h.transpose() +
                           abs_p * b.lower_bounds +
                           b.lower_bounds.transpose() * abs_p;
  q.q2.block(m + 1, m + 1, m, m) =
      (params_.c1 - params_.c2) * d.delta_a * d.abar;
  return q;
}

OmegaResult StateFeedbackDesign::ComputeOmega(double x1, double a_zeta1) const {
  return ComputeOmega(x1, a_zeta1, ComputeA(x1));
}

OmegaResult StateFeedbackDesign::ComputeOmega(double x1, double a_zeta1,
                                              double a) const {
  return SolveOmega(
      [&](double az) { return BuildOmegaMatrices(x1, az, a); }, a_zeta1,
      params_.q_a, params_.max_iterations, tol_);
}

double StateFeedbackDesign::ComputeKappa(double x1, double zeta1) const {
  if (!(zeta1 > 0.0)) {
    std::ostringstream os;
    os << "kappa requires zeta1 > 0, got " << zeta1;
    throw ConfigError(os.str());
  }
  const int m = spec_.n - 1;
  Matrix q1 = Matrix::Zero(m + 1, m + 1);
  Matrix q2 = Matrix::Zero(m + 1, m + 1);
  q1(0, 0) = 0.5;
  q1.block(1, 1, m, m) = ctrl_.p;
  q2(0, 0) = -params_.c2 * zeta1 * spec_.Upper(1, x1);
  q2.block(1, 1, m, m) =
      params_.c2 * LyapunovForm(ctrl_.p,
                                BuildControllerMatrix(spec_, ctrl_.gain_coeff, x1));
  return SmallEnoughValue(q1, q2, tol_, "kappa");
}

Freedoms StateFeedbackDesign::Evaluate(double x1, double a_zeta1,
                                       bool with_kappa) const {
  Freedoms f;
  f.a = ComputeA(x1);
  const OmegaResult omega = ComputeOmega(x1, a_zeta1, f.a);
  f.omega = omega.omega;
  f.a_zeta1 = omega.a_zeta1;
  f.increases = omega.increases;
  const Zeta1 zeta = Zeta(x1, f.a_zeta1);
  f.zeta1 = zeta.value;
  f.zeta1_prime = zeta.derivative;
  if (with_kappa) f.kappa = ComputeKappa(x1, f.zeta1);
  return f;
}

Vector StateFeedbackDesign::ScaledState(std::span<const double> x, double r,
                                        double zeta1) const {
  if (static_cast<int>(x.size()) != spec_.n) {
    throw Error("state dimension mismatch");
  }
  const int m = spec_.n - 1;
  Vector eta(m);
  eta(0) = (x[1] + x[0] * zeta1) / r;
  double scale = r;
  for (int i = 1; i < m; ++i) {
    scale *= r;
    eta(i) = x[i + 1] / scale;
  }
  return eta;
}

double StateFeedbackDesign::Control(std::span<const double> x, double r,
                                    double zeta1) const {
  const Vector eta = ScaledState(x, r, zeta1);
  const Vector k = EvaluateGains(spec_, ctrl_.gain_coeff, x[0]);
  return -std::pow(r, spec_.n) / spec_.Mu0(x[0]) * k.dot(eta);
}

double StateFeedbackDesign::Lyapunov(std::span<const double> x, double r,
                                     double zeta1) const {
  const Vector eta = ScaledState(x, r, zeta1);
  return 0.5 * x[0] * x[0] + r * eta.dot(ctrl_.p * eta);
}

double StateFeedbackDesign::ConservativeA(double sigma) const {
  return ctrl_.nu * sigma / (2.0 * ctrl_.nu_upper);
}

}  // namespace hgsc
