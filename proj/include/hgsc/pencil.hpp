#pragma once

#include <vector>

#include <Eigen/Dense>

namespace hgsc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending and
/// eigenvectors in the matching columns.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

/// Cyclic Jacobi eigensolver for small dense symmetric matrices.
/// @throws PencilError if `m` is not square or not symmetric.
SymmetricEigen JacobiEigen(const Matrix& m);

/// Largest eigenvalue of a symmetric matrix.
double MaxEigenvalue(const Matrix& m);

/// Scale-relative tolerance `rel`·‖m‖_F used for all NSD certifications.
double PsdTolerance(const Matrix& m, double rel = 1e-9);

struct NsdCertificate {
  bool ok{false};
  double max_eig{0.0};
};

/// ok iff λ_max(m) ≤ tol.
NsdCertificate CertifyNsd(const Matrix& m, double tol);

/// All generalized eigenvalues s of det(A − sB) = 0, ascending, for
/// symmetric A and definite B (either sign). Solved by Cholesky reduction of
/// ±B and a symmetric eigensolve.
/// @throws PencilError on shape mismatch, asymmetry or indefinite B.
std::vector<double> DefinitePencilEigenvalues(const Matrix& a, const Matrix& b);

/// Smallest generalized eigenvalue of the definite pencil (A, B).
double SigmaMin(const Matrix& a, const Matrix& b);

struct PencilResult {
  /// Finite generalized eigenvalues, ascending (empty when infeasible).
  std::vector<double> eigenvalues;
  /// Number of infinite eigenvalues (dimension of the kernel of B).
  int infinite_count{0};
  /// True when the kernel block of A is negative definite, so that A − sB is
  /// negative semidefinite for every s ≥ value.
  bool feasible{false};
  /// Largest finite eigenvalue (σ_max,f); NaN when infeasible.
  double value{0.0};
  /// λ_max(A − value·B) when feasible, otherwise λ_max of the kernel block.
  double margin{0.0};
};

/// Largest finite generalized eigenvalue of (A, B) for positive semidefinite
/// B, via kernel/range splitting of B and the Schur complement of the
/// kernel block of A.
/// @param rank_tol eigenvalues of B at most rank_tol·λ_max(B) span the kernel.
/// @param psd_rel the kernel block must satisfy λ_max < −psd_rel·‖A‖_F.
/// @throws PencilError on shape mismatch, asymmetry or a clearly negative B.
PencilResult SigmaMaxFinite(const Matrix& a, const Matrix& b,
                            double rank_tol = 1e-10, double psd_rel = 1e-9);

}  // namespace hgsc
