#include "hgsc/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hgsc/errors.hpp"

namespace hgsc {
namespace {

constexpr int kMaxSweeps = 100;

void CheckSymmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw PencilError(std::string(name) + " is not square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw PencilError(std::string(name) + " is not symmetric");
  }
}

void CheckPair(const Matrix& a, const Matrix& b) {
  CheckSymmetric(a, "A");
  CheckSymmetric(b, "B");
  if (a.rows() != b.rows()) {
    throw PencilError("pencil dimension mismatch: " + std::to_string(a.rows()) +
                      " vs " + std::to_string(b.rows()));
  }
}

Matrix Symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Lower Cholesky factor of a symmetric matrix; returns false when a pivot
// falls below `floor`.
bool Cholesky(const Matrix& m, double floor, Matrix* l) {
  const Eigen::Index n = m.rows();
  l->setZero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= (*l)(j, k) * (*l)(j, k);
    if (!(d > floor)) return false;
    const double ljj = std::sqrt(d);
    (*l)(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= (*l)(i, k) * (*l)(j, k);
      (*l)(i, j) = s / ljj;
    }
  }
  return true;
}

// L⁻¹ M L⁻ᵀ for lower-triangular L.
Matrix Congruence(const Matrix& l, const Matrix& m) {
  const auto lower = l.triangularView<Eigen::Lower>();
  const Matrix x = lower.solve(m);
  return Symmetrized(lower.solve(x.transpose()));
}

}  // namespace

SymmetricEigen JacobiEigen(const Matrix& m) {
  CheckSymmetric(m, "matrix");
  const Eigen::Index n = m.rows();
  Matrix a = Symmetrized(m);
  Matrix v = Matrix::Identity(n, n);
  const double norm = a.norm();
  const double target = std::numeric_limits<double>::epsilon() * norm;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(2.0 * off) <= target) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
        double t = 1.0 / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          if (k != p && k != q) {
            const double g = a(k, p);
            const double h = a(k, q);
            a(k, p) = a(p, k) = g - s * (h + g * tau);
            a(k, q) = a(q, k) = h + s * (g - h * tau);
          }
          const double g = v(k, p);
          const double h = v(k, q);
          v(k, p) = g - s * (h + g * tau);
          v(k, q) = h + s * (g - h * tau);
        }
      }
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double MaxEigenvalue(const Matrix& m) {
  if (m.rows() == 0) return -std::numeric_limits<double>::infinity();
  return JacobiEigen(m).values.maxCoeff();
}

double PsdTolerance(const Matrix& m, double rel) { return rel * m.norm(); }

NsdCertificate CertifyNsd(const Matrix& m, double tol) {
  NsdCertificate cert;
  cert.max_eig = MaxEigenvalue(m);
  cert.ok = cert.max_eig <= tol;
  return cert;
}

std::vector<double> DefinitePencilEigenvalues(const Matrix& a,
                                              const Matrix& b) {
  CheckPair(a, b);
  const Eigen::Index n = a.rows();
  const double floor = 1e-14 * std::max(1.0, static_cast<double>(n)) *
                       b.cwiseAbs().maxCoeff();
  const Matrix bs = Symmetrized(b);
  Matrix l;
  double sign = 1.0;
  if (!Cholesky(bs, floor, &l)) {
    if (!Cholesky(-bs, floor, &l)) {
      throw PencilError("right-hand matrix of the pencil is not definite");
    }
    sign = -1.0;
  }
  const Vector mu = JacobiEigen(Congruence(l, Symmetrized(a))).values;
  std::vector<double> s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = sign * mu(i);
  std::sort(s.begin(), s.end());
  return s;
}

double SigmaMin(const Matrix& a, const Matrix& b) {
  const std::vector<double> s = DefinitePencilEigenvalues(a, b);
  if (s.empty()) throw PencilError("empty pencil");
  return s.front();
}

PencilResult SigmaMaxFinite(const Matrix& a, const Matrix& b, double rank_tol,
                            double psd_rel) {
  CheckPair(a, b);
  const Matrix as = Symmetrized(a);
  const SymmetricEigen eb = JacobiEigen(b);
  const double norm_b = eb.values.cwiseAbs().maxCoeff();
  const double threshold = rank_tol * norm_b;
  if (eb.values.size() > 0 && eb.values(0) < -threshold) {
    throw PencilError("right-hand matrix has a negative eigenvalue " +
                      std::to_string(eb.values(0)));
  }

  std::vector<Eigen::Index> kernel, range;
  for (Eigen::Index i = 0; i < eb.values.size(); ++i) {
    (eb.values(i) <= threshold || norm_b == 0.0 ? kernel : range).push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(kernel.size());
  const auto m = static_cast<Eigen::Index>(range.size());
  Matrix vk(as.rows(), k), vr(as.rows(), m);
  for (Eigen::Index i = 0; i < k; ++i) vk.col(i) = eb.vectors.col(kernel[i]);
  for (Eigen::Index i = 0; i < m; ++i) vr.col(i) = eb.vectors.col(range[i]);

  PencilResult out;
  out.infinite_count = static_cast<int>(k);
  Matrix schur = Symmetrized(vr.transpose() * as * vr);
  if (k > 0) {
    const Matrix a11 = Symmetrized(vk.transpose() * as * vk);
    const double a11_max = MaxEigenvalue(a11);
    const double tol = psd_rel * as.norm();
    if (!(a11_max < -tol)) {
      out.feasible = false;
      out.value = std::numeric_limits<double>::quiet_NaN();
      out.margin = a11_max;
      return out;
    }
    Matrix l;
    if (!Cholesky(-a11, 0.0, &l)) {
      out.feasible = false;
      out.value = std::numeric_limits<double>::quiet_NaN();
      out.margin = a11_max;
      return out;
    }
    const Matrix a12 = vk.transpose() * as * vr;
    // A22 − A21·A11⁻¹·A12 = A22 + (L⁻¹A12)ᵀ(L⁻¹A12) with −A11 = LLᵀ.
    const Matrix y = l.triangularView<Eigen::Lower>().solve(a12);
    schur = Symmetrized(schur + y.transpose() * y);
  }

  out.feasible = true;
  if (m == 0) {
    out.value = -std::numeric_limits<double>::infinity();
    out.margin = MaxEigenvalue(as);
    return out;
  }
  Vector scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    scale(i) = 1.0 / std::sqrt(eb.values(range[i]));
  }
  const Matrix reduced = scale.asDiagonal() * schur * scale.asDiagonal();
  const Vector s = JacobiEigen(reduced).values;
  out.eigenvalues.assign(s.data(), s.data() + s.size());
  out.value = out.eigenvalues.back();
  out.margin = MaxEigenvalue(as - out.value * Symmetrized(b));
  return out;
}

}  // namespace hgsc
