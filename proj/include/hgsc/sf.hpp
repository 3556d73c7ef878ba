#pragma once

#include <span>

#include "hgsc/freedoms.hpp"
#include "hgsc/lyap.hpp"
#include "hgsc/model.hpp"

namespace hgsc {

struct SfParams {
  double c1{0.1};
  double c2{1e-4};
  double c_zeta1{1e-3};
  double q_a{0.02};
  double a_zeta1_init{1.0};
  int max_iterations{10000};

  /// @throws ConfigError unless 0 < c2 < c1 < 1 and the rest are positive.
  void Validate() const;
};

/// State-feedback design: scaled state, control law and the pencil-based
/// design freedoms a, ζ1, Ω, κ evaluated at a given x1.
///
/// All methods are const and free of hidden state, so one instance may be
/// shared by concurrent simulations.
class StateFeedbackDesign {
 public:
  StateFeedbackDesign(SystemSpec spec, ControllerCertificate ctrl,
                      SfParams params, Tolerances tol = {});

  const SystemSpec& spec() const { return spec_; }
  const ControllerCertificate& controller() const { return ctrl_; }
  const SfParams& params() const { return params_; }
  const Tolerances& tolerances() const { return tol_; }

  /// ζ1 = a_ζ1·[1 + c_ζ1·Γ(x1)].
  Zeta1 Zeta(double x1, double a_zeta1) const;

  /// a(x1) = σ_min(Q_a2, −Q_a1).
  double ComputeA(double x1) const;

  /// Q_Ω1, Q_Ω2 over X = [|x1|, √r|η|, r|η|] for the given a(x1).
  OmegaMatrices BuildOmegaMatrices(double x1, double a_zeta1, double a) const;
  OmegaMatrices BuildOmegaMatrices(double x1, double a_zeta1) const;

  OmegaResult ComputeOmega(double x1, double a_zeta1) const;
  OmegaResult ComputeOmega(double x1, double a_zeta1, double a) const;

  /// κ(x1) = σ_min(Q_κ2, −Q_κ1).
  double ComputeKappa(double x1, double zeta1) const;

  /// a, Ω (with the a_ζ1 loop) and optionally κ at x1.
  Freedoms Evaluate(double x1, double a_zeta1, bool with_kappa = true) const;

  /// η2 = (x2 + x1·ζ1)/r, η_i = x_i/r^(i-1).
  Vector ScaledState(std::span<const double> x, double r, double zeta1) const;

  /// u = −(rⁿ/μ0)·K_c·η.
  double Control(std::span<const double> x, double r, double zeta1) const;

  /// V = ½x1² + r·ηᵀP_cη.
  double Lyapunov(std::span<const double> x, double r, double zeta1) const;

  /// Closed-form baseline a = ν_c·σ/(2·ν̄_c).
  double ConservativeA(double sigma) const;

 private:
  SystemSpec spec_;
  ControllerCertificate ctrl_;
  SfParams params_;
  Tolerances tol_;
  DeltaTable deltas_;
  Expr shape_;        // 1 + c_ζ1·Γ
  Expr shape_prime_;  // its x1-derivative
};

namespace internal {

/// Magnitude-domain blocks shared by the state- and output-feedback Q_Ω2.
struct BoundBlocks {
  /// Ã: φ_(i+1,j+1) on and below the diagonal.
  Matrix lower_bounds;
  /// φ̃ζ = φ̃1 + φ̃2·|ζ1|.
  Vector phi_zeta;
  /// (ζ1'·x1 + ζ1)·φ_(1,2), the only nonzero entry of H.
  double h{0.0};
  /// Ξ̄ = (φ_(1,1) + |ζ1|·φ_(1,2))·|ζ1'·x1 + ζ1|.
  double xi_bar{0.0};
};

BoundBlocks MakeBoundBlocks(const SystemSpec& spec, double x1,
                            const Zeta1& zeta);

}  // namespace internal
}  // namespace hgsc
