#pragma once

#include <cstdint>
#include <vector>

#include "hgsc/expr.hpp"

namespace hgsc {

/// Uniform sampling grid over x1.
struct Grid {
  double lo{-5.0};
  double hi{5.0};
  int count{2001};

  std::vector<double> Points() const;
  bool operator==(const Grid&) const = default;
};

/// Strict-feedback system
///   ẋ_i = φ_i(x) + φ_(i,i+1)(x1)·x_{i+1},  i < n
///   ẋ_n = φ_n(x) + μ0(x1)·u
/// with uncertain φ_i bounded by |φ_i| ≤ Σ_j φ_(i,j)(x1)|x_j|.
struct SystemSpec {
  int n{3};
  /// upper[i-1] is φ_(i,i+1), i = 1..n-1, functions of x1 only.
  std::vector<Expr> upper;
  /// Input gain μ0(x1).
  Expr mu0;
  /// bound[i-1][j-1] is φ_(i,j), j ≤ i, nonnegative functions of x1.
  std::vector<std::vector<Expr>> bound;
  /// Plant truth φ_i(x), used only by the simulator and the bound check.
  /// Any state may appear as long as the row bound holds. May be empty.
  std::vector<Expr> true_phi;
  /// Verification grid for the assumption checks and constant extraction.
  Grid grid;
  /// Half-width of the state box sampled by the bound check.
  double sample_box{5.0};
  int sample_count{10000};

  /// φ_(i,i+1)(x1), 1-based i.
  double Upper(int i, double x1) const;
  double Mu0(double x1) const;
  /// φ_(i,j)(x1), 1-based.
  double Bound(int i, int j, double x1) const;
  /// Γ(x1) = Σ_{i≥2} Σ_{j≤i} φ_(i,j)(x1) as an expression.
  Expr GammaExpr() const;

  /// Structural validation plus nonnegativity of the bounds on the grid.
  /// @throws ConfigError on any violation.
  void Validate() const;
};

/// Smallest value of all φ_(i,i+1) and μ0 over the grid.
/// @throws AssumptionError naming the function and x1 if any value is ≤ 0.
double CheckLowerBound(const SystemSpec& spec);

struct BoundCheckReport {
  double worst_ratio{0.0};
  std::vector<double> witness;
  int worst_row{0};
};

/// Samples random states in the box |x_i| ≤ sample_box and checks
/// |φ_i(x)| ≤ Σ_j φ_(i,j)(x1)|x_j| for every row.
/// @throws AssumptionError with the witness state on violation.
BoundCheckReport CheckUncertaintyBounds(const SystemSpec& spec, int samples,
                                        std::uint64_t seed = 1);

struct DominanceReport {
  /// rho_min[k], rho_max[k] belong to i = k + 3 (i = 3..n-1).
  std::vector<double> rho_min;
  std::vector<double> rho_max;
};

/// Grid estimates of the ratios φ_(i,i+1)/φ_(i-1,i), i = 3..n-1.
/// @throws AssumptionError if a ratio is non-finite or non-positive.
DominanceReport CheckCascadingDominance(const SystemSpec& spec);

}  // namespace hgsc
