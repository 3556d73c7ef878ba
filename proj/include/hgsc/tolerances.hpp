#pragma once

namespace hgsc {

struct Tolerances {
  /// NSD certificates accept λ_max ≤ psd_rel·‖M‖_F.
  double psd_rel{1e-9};
  /// Eigenvalues of a semidefinite pencil side at most rank_tol·λ_max count
  /// as kernel.
  double rank_tol{1e-10};
  /// Absolute tolerance of the f_i quadrature.
  double quad_tol{1e-10};

  bool operator==(const Tolerances&) const = default;
};

}  // namespace hgsc
