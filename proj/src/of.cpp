#include "hgsc/of.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hgsc/errors.hpp"
#include "hgsc/sf.hpp"

namespace hgsc {

void OfParams::Validate() const {
  if (!(c3 > 0.0 && c3 < c2 && c2 < c1 && c1 < 1.0)) {
    throw ConfigError("require 0 < c3 < c2 < c1 < 1");
  }
  if (!(c_zeta1 > 0.0)) throw ConfigError("c_zeta1 must be positive");
  if (!(q_a > 0.0)) throw ConfigError("q_a must be positive");
  if (!(a_zeta1_init > 0.0)) throw ConfigError("a_zeta1_init must be positive");
  if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
}

namespace {

// Drift divided by φ_(2,3), from the normalized upper-diagonal values
// upper = [1, φ_(3,4)/φ_(2,3), ...].
Matrix NormalizedDrift(const Matrix& coeff, const Vector& upper,
                       bool observer) {
  const auto m = coeff.rows();
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i + 1 < m; ++i) a(i, i + 1) = upper(i);
  const Vector gains = coeff * upper;
  if (observer) {
    a.col(0) -= gains;
  } else {
    a.row(m - 1) -= gains.transpose();
  }
  return a;
}

Matrix BlockDiagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index dim = 0;
  for (const Matrix& b : blocks) dim += b.rows();
  Matrix out = Matrix::Zero(dim, dim);
  Eigen::Index at = 0;
  for (const Matrix& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

Expr GainExpr(const SystemSpec& spec, const Matrix& coeff, int row) {
  Expr g;
  for (int k = 0; k < spec.n - 2; ++k) {
    g = g + Expr::Constant(coeff(row, k)) * spec.upper[k + 1];
  }
  return g;
}

}  // namespace

OmegaMatrices BuildCPencilVertex(const ControllerCertificate& ctrl,
                                 const ObserverCertificate& obs, double c1,
                                 std::span<const double> ratios) {
  const auto m = ctrl.p.rows();
  Vector upper(m - 1);
  upper(0) = 1.0;
  for (Eigen::Index k = 1; k < m - 1; ++k) upper(k) = ratios[k - 1];
  const Matrix l_o =
      LyapunovForm(obs.p, NormalizedDrift(obs.gain_coeff, upper, true));
  const Matrix l_c =
      LyapunovForm(ctrl.p, NormalizedDrift(ctrl.gain_coeff, upper, false));
  // P_c·G·B1: only the first column is nonzero.
  Matrix coupling = Matrix::Zero(m, m);
  coupling.col(0) = ctrl.p * (obs.gain_coeff * upper);

  OmegaMatrices q;
  q.q1 = Matrix::Zero(2 * m, 2 * m);
  q.q2 = Matrix::Zero(2 * m, 2 * m);
  q.q1.topLeftCorner(m, m) = (1.0 - c1) * l_o;
  q.q2.topRightCorner(m, m) = -coupling.transpose();
  q.q2.bottomLeftCorner(m, m) = -coupling;
  q.q2.bottomRightCorner(m, m) = (1.0 - c1) * l_c;
  return q;
}

OutputFeedbackDesign::OutputFeedbackDesign(SystemSpec spec,
                                           ControllerCertificate ctrl,
                                           ObserverCertificate obs,
                                           OfParams params, Tolerances tol)
    : spec_(std::move(spec)),
      ctrl_(std::move(ctrl)),
      obs_(std::move(obs)),
      params_(params),
      tol_(tol),
      deltas_(spec_, ctrl_, obs_) {
  params_.Validate();
  const Expr phi12 = spec_.upper[0];
  Expr g_squared;
  for (int i = 0; i < spec_.n - 1; ++i) {
    const Expr g = GainExpr(spec_, obs_.gain_coeff, i);
    g_squared = g_squared + g * g;
  }
  const Expr gamma = spec_.GammaExpr();
  const Expr cz = Expr::Constant(params_.c_zeta1);
  shape_ = Expr::Constant(1.0) + cz * phi12 * phi12 +
           cz * (g_squared / (phi12 * phi12)) * gamma * gamma + cz * gamma;
  shape_prime_ = Differentiate(shape_, 1);

  for (int k = 2; k <= spec_.n - 1; ++k) {
    const Expr integrand = spec_.upper[k - 1] / phi12;
    basis_.push_back(std::make_unique<CumulativeIntegral>(
        [integrand](double x) {
          const double v[] = {x};
          return integrand.Evaluate(v);
        },
        tol_.quad_tol));
  }
  c_design_ = ComputeC();
}

CDesign OutputFeedbackDesign::ComputeC() const {
  // Ratio intervals φ_(k,k+1)/φ_(2,3), k = 3..n-1, over the grid.
  const int count = spec_.n - 3;
  std::vector<double> lo(count, std::numeric_limits<double>::infinity());
  std::vector<double> hi(count, -std::numeric_limits<double>::infinity());
  for (double x1 : spec_.grid.Points()) {
    const double base = spec_.Upper(2, x1);
    for (int k = 0; k < count; ++k) {
      const double rho = spec_.Upper(k + 3, x1) / base;
      lo[k] = std::min(lo[k], rho);
      hi[k] = std::max(hi[k], rho);
    }
  }
  std::vector<std::vector<double>> axes(count);
  for (int k = 0; k < count; ++k) {
    axes[k].push_back(lo[k]);
    if (hi[k] - lo[k] > 1e-9 * std::max(std::fabs(hi[k]), std::fabs(lo[k]))) {
      axes[k].push_back(hi[k]);
    }
  }
  std::vector<std::vector<double>> vertices{{}};
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& v : vertices) {
      for (double value : axis) {
        next.push_back(v);
        next.back().push_back(value);
      }
    }
    vertices = std::move(next);
  }

  std::vector<Matrix> q1_blocks, q2_blocks;
  for (const auto& v : vertices) {
    const OmegaMatrices q = BuildCPencilVertex(ctrl_, obs_, params_.c1, v);
    q1_blocks.push_back(q.q1);
    q2_blocks.push_back(q.q2);
  }
  const Matrix q1 = BlockDiagonal(q1_blocks);
  const Matrix q2 = BlockDiagonal(q2_blocks);
  const PencilResult p = SigmaMaxFinite(q2, -q1, tol_.rank_tol, tol_.psd_rel);
  if (!p.feasible) {
    std::ostringstream os;
    os << "c pencil is infeasible (kernel block margin " << p.margin << ")";
    throw CertificateError(os.str());
  }
  if (!(p.value > 0.0)) {
    std::ostringstream os;
    os << "c pencil returned a non-positive value " << p.value;
    throw CertificateError(os.str());
  }
  CDesign out;
  out.c = p.value;
  out.vertices = static_cast<int>(vertices.size());
  const Matrix check = 1.001 * out.c * q1 + q2;
  const NsdCertificate cert = CertifyNsd(check, PsdTolerance(check, tol_.psd_rel));
  out.margin = cert.max_eig;
  if (!cert.ok) {
    std::ostringstream os;
    os << "c = " << out.c << " fails its NSD post-check (max eigenvalue "
       << cert.max_eig << ")";
    throw CertificateError(os.str());
  }
  return out;
}

double OutputFeedbackDesign::F(int i, double x1) const {
  if (i < 2 || i > spec_.n) throw Error("f_i index out of range");
  double sum = 0.0;
  for (int k = 0; k < spec_.n - 2; ++k) {
    const double coeff = obs_.gain_coeff(i - 2, k);
    if (coeff != 0.0) sum += coeff * (*basis_[k])(x1);
  }
  return sum;
}

Zeta1 OutputFeedbackDesign::Zeta(double x1, double a_zeta1) const {
  const double x[] = {x1};
  return {a_zeta1 * shape_.Evaluate(x), a_zeta1 * shape_prime_.Evaluate(x)};
}

double OutputFeedbackDesign::ComputeA(double x1) const {
  const double c = c_design_.c;
  const Matrix q1 = BlockDiagonal(
      {c * LyapunovForm(obs_.p, ShiftedDiagonal(spec_.n)),
       LyapunovForm(ctrl_.p, ShiftedDiagonal(spec_.n))});
  const Matrix q2 =
      (params_.c1 - params_.c2) *
      BlockDiagonal(
          {c * LyapunovForm(obs_.p, BuildObserverMatrix(spec_, obs_.gain_coeff, x1)),
           LyapunovForm(ctrl_.p,
                        BuildControllerMatrix(spec_, ctrl_.gain_coeff, x1))});
  return SmallEnoughValue(q1, q2, tol_, "a");
}

OmegaMatrices OutputFeedbackDesign::BuildOmegaMatrices(double x1,
                                                       double a_zeta1) const {
  return BuildOmegaMatrices(x1, a_zeta1, ComputeA(x1));
}

OmegaMatrices OutputFeedbackDesign::BuildOmegaMatrices(double x1,
                                                       double a_zeta1,
                                                       double a) const {
  const int m = spec_.n - 1;
  const int e1 = 1, n1 = 1 + m, e2 = 1 + 2 * m, n2 = 1 + 3 * m;
  const double c = c_design_.c;
  const Zeta1 zeta = Zeta(x1, a_zeta1);
  const internal::BoundBlocks b = internal::MakeBoundBlocks(spec_, x1, zeta);
  const DeltaFactors dc = deltas_.Controller(x1);
  const DeltaFactors d_o = deltas_.Observer(x1);
  const Matrix abs_po = obs_.p.cwiseAbs();
  const Matrix abs_pc = ctrl_.p.cwiseAbs();
  const Vector gains = EvaluateGains(spec_, obs_.gain_coeff, x1);
  const double phi11 = spec_.Bound(1, 1, x1);
  const double phi12 = spec_.Upper(1, x1);

  Matrix p_h = Matrix::Zero(m, m);
  p_h.col(0) = (ctrl_.p.col(0) * b.h).cwiseAbs();

  const int dim = 4 * m + 1;
  OmegaMatrices q;
  q.q1 = Matrix::Zero(dim, dim);
  q.q2 = Matrix::Zero(dim, dim);
  q.q1.block(e1, e1, m, m) = -c * d_o.delta_d * d_o.dbar;
  q.q1.block(n1, n1, m, m) = -dc.delta_d * dc.dbar;

  Matrix& q2 = q.q2;
  q2(0, 0) = -(1.0 - params_.c3) * zeta.value * phi12 + phi11;

  Vector row_e1 = c * abs_po * b.phi_zeta;
  Vector row_n1 = (b.xi_bar * ctrl_.p.col(0)).cwiseAbs();
  Vector row_e2 = c * (phi11 / phi12) * (obs_.p * gains).cwiseAbs();
  Vector row_n2 = (phi11 / phi12) * (ctrl_.p * gains).cwiseAbs();
  row_e2(0) += 0.5 * phi12;
  row_n2(0) += 0.5 * phi12;
  const std::pair<int, const Vector*> rows[] = {
      {e1, &row_e1}, {n1, &row_n1}, {e2, &row_e2}, {n2, &row_n2}};
  for (const auto& [at, v] : rows) {
    q2.block(0, at, 1, m) = v->transpose();
    q2.block(at, 0, m, 1) = *v;
  }

  q2.block(e1, e1, m, m) =
      -a * c * d_o.delta_d * d_o.dbar +
      c * (abs_po * b.lower_bounds + b.lower_bounds.transpose() * abs_po);
  const Matrix cross = c * abs_po * b.lower_bounds + p_h.transpose();
  q2.block(e1, n1, m, m) = cross;
  q2.block(n1, e1, m, m) = cross.transpose();
  q2.block(n1, n1, m, m) = -a * dc.delta_d * dc.dbar + p_h + p_h.transpose();
  q2.block(e2, e2, m, m) =
      (params_.c2 - params_.c3) * c * d_o.delta_a * d_o.abar;
  q2.block(n2, n2, m, m) = (params_.c2 - params_.c3) * dc.delta_a * dc.abar;
  return q;
}

OmegaResult OutputFeedbackDesign::ComputeOmega(double x1,
                                               double a_zeta1) const {
  return ComputeOmega(x1, a_zeta1, ComputeA(x1));
}

OmegaResult OutputFeedbackDesign::ComputeOmega(double x1, double a_zeta1,
                                               double a) const {
  return SolveOmega(
      [&](double az) { return BuildOmegaMatrices(x1, az, a); }, a_zeta1,
      params_.q_a, params_.max_iterations, tol_);
}

double OutputFeedbackDesign::ComputeKappa(double x1, double zeta1) const {
  if (!(zeta1 > 0.0)) {
    std::ostringstream os;
    os << "kappa requires zeta1 > 0, got " << zeta1;
    throw ConfigError(os.str());
  }
  const double c = c_design_.c;
  Matrix head(1, 1);
  head(0, 0) = 0.5;
  const Matrix q1 = BlockDiagonal({head, obs_.p, ctrl_.p});
  head(0, 0) = -params_.c3 * zeta1 * spec_.Upper(1, x1);
  const Matrix q2 = BlockDiagonal(
      {head,
       params_.c3 * c *
           LyapunovForm(obs_.p, BuildObserverMatrix(spec_, obs_.gain_coeff, x1)),
       params_.c3 * LyapunovForm(
                        ctrl_.p, BuildControllerMatrix(spec_, ctrl_.gain_coeff, x1))});
  return SmallEnoughValue(q1, q2, tol_, "kappa");
}

Freedoms OutputFeedbackDesign::Evaluate(double x1, double a_zeta1,
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

Vector OutputFeedbackDesign::ObserverRhs(std::span<const double> xhat,
                                         double x1, double r, double rdot,
                                         double u) const {
  const int n = spec_.n;
  if (static_cast<int>(xhat.size()) != n - 1) {
    throw Error("observer state dimension mismatch");
  }
  const Vector gains = EvaluateGains(spec_, obs_.gain_coeff, x1);
  std::vector<double> f(n + 1, 0.0);
  for (int i = 2; i <= n; ++i) f[i] = F(i, x1);
  const double innovation = xhat[0] + r * f[2];
  Vector out(n - 1);
  for (int i = 2; i <= n; ++i) {
    double v = i < n ? spec_.Upper(i, x1) *
                           (xhat[i - 1] + std::pow(r, i) * f[i + 1])
                     : spec_.Mu0(x1) * u;
    v -= std::pow(r, i - 1) * gains(i - 2) * innovation;
    v -= (i - 1) * rdot * std::pow(r, i - 2) * f[i];
    out(i - 2) = v;
  }
  return out;
}

Vector OutputFeedbackDesign::ScaledEstimate(std::span<const double> xhat,
                                            double x1, double r,
                                            double zeta1) const {
  const int m = spec_.n - 1;
  if (static_cast<int>(xhat.size()) != m) {
    throw Error("observer state dimension mismatch");
  }
  Vector eta(m);
  for (int i = 2; i <= spec_.n; ++i) {
    const double scale = std::pow(r, i - 1);
    eta(i - 2) = (xhat[i - 2] + scale * F(i, x1)) / scale;
  }
  eta(0) += x1 * zeta1 / r;
  return eta;
}

Vector OutputFeedbackDesign::ScaledError(std::span<const double> x,
                                         std::span<const double> xhat,
                                         double r) const {
  const int m = spec_.n - 1;
  if (static_cast<int>(x.size()) != spec_.n ||
      static_cast<int>(xhat.size()) != m) {
    throw Error("state dimension mismatch");
  }
  Vector eps(m);
  for (int i = 2; i <= spec_.n; ++i) {
    const double scale = std::pow(r, i - 1);
    eps(i - 2) = (xhat[i - 2] + scale * F(i, x[0]) - x[i - 1]) / scale;
  }
  return eps;
}

double OutputFeedbackDesign::Control(std::span<const double> xhat, double x1,
                                     double r, double zeta1) const {
  const Vector eta = ScaledEstimate(xhat, x1, r, zeta1);
  const Vector k = EvaluateGains(spec_, ctrl_.gain_coeff, x1);
  return -std::pow(r, spec_.n) / spec_.Mu0(x1) * k.dot(eta);
}

double OutputFeedbackDesign::Lyapunov(std::span<const double> x,
                                      std::span<const double> xhat, double r,
                                      double zeta1) const {
  const Vector eta = ScaledEstimate(xhat, x[0], r, zeta1);
  const Vector eps = ScaledError(x, xhat, r);
  return c_design_.c * r * eps.dot(obs_.p * eps) + 0.5 * x[0] * x[0] +
         r * eta.dot(ctrl_.p * eta);
}

Vector OutputFeedbackDesign::ZeroEstimate(double x1, double r) const {
  Vector xhat(spec_.n - 1);
  for (int i = 2; i <= spec_.n; ++i) {
    xhat(i - 2) = -std::pow(r, i - 1) * F(i, x1);
  }
  return xhat;
}

double OutputFeedbackDesign::ConservativeC() const {
  const double lmax = MaxEigenvalue(ctrl_.p);
  return 32.0 * lmax * lmax * obs_.g_bar * obs_.g_bar /
         (3.0 * obs_.nu_tilde * ctrl_.nu);
}

double OutputFeedbackDesign::ConservativeA(double sigma) const {
  return 0.5 * std::min(obs_.nu / obs_.nu_upper,
                        ctrl_.nu * sigma / ctrl_.nu_upper);
}

}  // namespace hgsc
