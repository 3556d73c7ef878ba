#include "hgsc/lyap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {

Vector EvaluateGains(const SystemSpec& spec, const Matrix& coeff, double x1) {
  const int m = spec.n - 1;
  if (coeff.rows() != m || coeff.cols() != spec.n - 2) {
    throw CertificateError("gain coefficient matrix must be " +
                           std::to_string(m) + "x" +
                           std::to_string(spec.n - 2));
  }
  Vector upper(spec.n - 2);
  for (int k = 0; k < spec.n - 2; ++k) upper(k) = spec.Upper(k + 2, x1);
  return coeff * upper;
}

Matrix BuildControllerMatrix(const SystemSpec& spec, const Matrix& gain_coeff,
                             double x1) {
  const int m = spec.n - 1;
  Matrix a = Matrix::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) a(i, i + 1) = spec.Upper(i + 2, x1);
  a.row(m - 1) -= EvaluateGains(spec, gain_coeff, x1).transpose();
  return a;
}

Matrix BuildObserverMatrix(const SystemSpec& spec, const Matrix& gain_coeff,
                           double x1) {
  const int m = spec.n - 1;
  Matrix a = Matrix::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) a(i, i + 1) = spec.Upper(i + 2, x1);
  a.col(0) -= EvaluateGains(spec, gain_coeff, x1);
  return a;
}

Matrix ShiftedDiagonal(int n) {
  Matrix d = Matrix::Zero(n - 1, n - 1);
  for (int i = 0; i < n - 1; ++i) d(i, i) = i + 0.5;
  return d;
}

Matrix LyapunovForm(const Matrix& p, const Matrix& m) {
  const Matrix pm = p * m;
  return pm + pm.transpose();
}

namespace {

void RequirePositiveDefinite(const Matrix& p, const char* name) {
  if (p.rows() != p.cols()) {
    throw CertificateError(std::string(name) + " must be square");
  }
  if ((p - p.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
    throw CertificateError(std::string(name) + " must be symmetric");
  }
  if (!(JacobiEigen(p).values(0) > 0.0)) {
    throw CertificateError(std::string(name) + " is not positive definite");
  }
}

std::pair<double, double> EigenRange(const Matrix& m) {
  const Vector v = JacobiEigen(m).values;
  return {v(0), v(v.size() - 1)};
}

double GainNormBound(const SystemSpec& spec, const Matrix& coeff) {
  double g_bar = 0.0;
  for (double x1 : spec.grid.Points()) {
    g_bar = std::max(g_bar, EvaluateGains(spec, coeff, x1).norm() /
                                spec.Upper(2, x1));
  }
  return g_bar;
}

}  // namespace

ControllerCertificate ExtractControllerConstants(const SystemSpec& spec,
                                                 const Matrix& p,
                                                 const Matrix& gain_coeff) {
  RequirePositiveDefinite(p, "P_c");
  if (p.rows() != spec.n - 1) {
    throw CertificateError("P_c must be (n-1)x(n-1)");
  }
  ControllerCertificate cert;
  cert.p = p;
  cert.gain_coeff = gain_coeff;
  double worst = -std::numeric_limits<double>::infinity();
  for (double x1 : spec.grid.Points()) {
    const Matrix l = LyapunovForm(p, BuildControllerMatrix(spec, gain_coeff, x1));
    worst = std::max(worst, MaxEigenvalue(l / spec.Upper(2, x1)));
  }
  cert.nu = -worst;
  if (!(cert.nu > 0.0)) {
    std::ostringstream os;
    os << "controller certificate is invalid: nu_c = " << cert.nu;
    throw CertificateError(os.str());
  }
  std::tie(cert.nu_lower, cert.nu_upper) =
      EigenRange(LyapunovForm(p, ShiftedDiagonal(spec.n)));
  return cert;
}

ObserverCheck VerifyObserverConstants(const SystemSpec& spec, const Matrix& p,
                                      const Matrix& gain_coeff, double nu,
                                      double nu_tilde, double tol) {
  RequirePositiveDefinite(p, "P_o");
  if (p.rows() != spec.n - 1) {
    throw CertificateError("P_o must be (n-1)x(n-1)");
  }
  ObserverCheck check;
  check.max_violation = -std::numeric_limits<double>::infinity();
  const int m = spec.n - 1;
  for (double x1 : spec.grid.Points()) {
    const Matrix l = LyapunovForm(p, BuildObserverMatrix(spec, gain_coeff, x1));
    Matrix shifted = l + nu * Matrix::Identity(m, m);
    shifted(0, 0) += nu_tilde * spec.Upper(2, x1);
    const double violation = MaxEigenvalue(shifted) / l.norm();
    if (violation > check.max_violation) {
      check.max_violation = violation;
      check.witness_x1 = x1;
    }
  }
  check.ok = check.max_violation <= tol;
  std::tie(check.nu_lower, check.nu_upper) =
      EigenRange(LyapunovForm(p, ShiftedDiagonal(spec.n)));
  check.g_bar = GainNormBound(spec, gain_coeff);
  return check;
}

ObserverCertificate MakeObserverCertificate(const SystemSpec& spec,
                                            const Matrix& p,
                                            const Matrix& gain_coeff,
                                            double nu, double nu_tilde) {
  const ObserverCheck check =
      VerifyObserverConstants(spec, p, gain_coeff, nu, nu_tilde);
  if (!check.ok) {
    std::ostringstream os;
    os << "observer certificate fails at x1=" << check.witness_x1
       << " (relative violation " << check.max_violation << ")";
    throw CertificateError(os.str());
  }
  ObserverCertificate cert;
  cert.p = p;
  cert.gain_coeff = gain_coeff;
  cert.nu = nu;
  cert.nu_tilde = nu_tilde;
  cert.nu_lower = check.nu_lower;
  cert.nu_upper = check.nu_upper;
  cert.g_bar = check.g_bar;
  return cert;
}

DeltaFactors ComputeDeltas(const Matrix& p, const Matrix& drift) {
  DeltaFactors f;
  const Matrix l = LyapunovForm(p, drift);
  const Matrix d = LyapunovForm(p, ShiftedDiagonal(static_cast<int>(p.rows()) + 1));
  f.abar = l.diagonal().asDiagonal();
  f.dbar = d.diagonal().asDiagonal();
  f.delta_a = SigmaMin(l, f.abar);
  f.delta_d = SigmaMin(d, f.dbar);
  return f;
}

bool IsProportionalToLeadingGain(const SystemSpec& spec, const Matrix& coeff,
                                 bool observer, double rel) {
  const std::vector<double> points = spec.grid.Points();
  if (points.empty()) return false;
  auto normalized = [&](double x1) {
    const Matrix a = observer ? BuildObserverMatrix(spec, coeff, x1)
                              : BuildControllerMatrix(spec, coeff, x1);
    return Matrix(a / spec.Upper(2, x1));
  };
  const Matrix ref = normalized(points.front());
  for (double x1 : points) {
    const Matrix diff = (normalized(x1) - ref).cwiseAbs();
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      if (diff(i) > rel * std::max(1.0, std::fabs(ref(i)))) return false;
    }
  }
  return true;
}

DeltaTable::DeltaTable(const SystemSpec& spec, const ControllerCertificate& ctrl,
                       const std::optional<ObserverCertificate>& obs)
    : spec_(spec), ctrl_(ctrl), obs_(obs) {
  const double x0 = spec.grid.Points().front();
  if (IsProportionalToLeadingGain(spec, ctrl.gain_coeff, false)) {
    ctrl_unit_ = ComputeDeltas(
        ctrl.p, BuildControllerMatrix(spec, ctrl.gain_coeff, x0) / spec.Upper(2, x0));
  }
  if (obs && IsProportionalToLeadingGain(spec, obs->gain_coeff, true)) {
    obs_unit_ = ComputeDeltas(
        obs->p, BuildObserverMatrix(spec, obs->gain_coeff, x0) / spec.Upper(2, x0));
  }
}

DeltaFactors DeltaTable::Controller(double x1) const {
  if (ctrl_unit_) {
    DeltaFactors f = *ctrl_unit_;
    f.abar *= spec_.Upper(2, x1);
    return f;
  }
  return ComputeDeltas(ctrl_.p, BuildControllerMatrix(spec_, ctrl_.gain_coeff, x1));
}

DeltaFactors DeltaTable::Observer(double x1) const {
  if (!obs_) throw Error("no observer certificate loaded");
  if (obs_unit_) {
    DeltaFactors f = *obs_unit_;
    f.abar *= spec_.Upper(2, x1);
    return f;
  }
  return ComputeDeltas(obs_->p, BuildObserverMatrix(spec_, obs_->gain_coeff, x1));
}

}  // namespace hgsc
