#pragma once

#include <memory>
#include <span>
#include <vector>

#include "hgsc/freedoms.hpp"
#include "hgsc/lyap.hpp"
#include "hgsc/model.hpp"
#include "hgsc/quadrature.hpp"

namespace hgsc {

struct OfParams {
  double c1{0.3};
  double c2{0.1};
  double c3{1e-4};
  double c_zeta1{1e-3};
  double q_a{0.02};
  double a_zeta1_init{1.0};
  int max_iterations{10000};

  /// @throws ConfigError unless 0 < c3 < c2 < c1 < 1 and the rest are
  /// positive.
  void Validate() const;
};

/// Result of the constant-c pencil over the polytope of normalized drifts.
struct CDesign {
  double c{0.0};
  int vertices{0};
  /// λ_max(1.001·c·Q̄c1 + Q̄c2).
  double margin{0.0};
};

/// Output-feedback design: reduced-order observer, f_i quadrature, the
/// constant c and the pencil-based a, ζ1, Ω, κ.
///
/// c is computed once at construction and frozen.
class OutputFeedbackDesign {
 public:
  OutputFeedbackDesign(SystemSpec spec, ControllerCertificate ctrl,
                       ObserverCertificate obs, OfParams params,
                       Tolerances tol = {});

  const SystemSpec& spec() const { return spec_; }
  const ControllerCertificate& controller() const { return ctrl_; }
  const ObserverCertificate& observer() const { return obs_; }
  const OfParams& params() const { return params_; }
  const Tolerances& tolerances() const { return tol_; }
  double c() const { return c_design_.c; }
  const CDesign& c_design() const { return c_design_; }

  /// f_i(x1) = ∫_0^x1 g_i/φ_(1,2), 2 ≤ i ≤ n.
  double F(int i, double x1) const;

  /// ζ1 = a_ζ1·[1 + c_ζ1·φ_(1,2)² + c_ζ1·(|G|²/φ_(1,2)²)·Γ² + c_ζ1·Γ].
  Zeta1 Zeta(double x1, double a_zeta1) const;

  double ComputeA(double x1) const;

  /// Q_Ω1, Q_Ω2 over X = [|x1|, √r|ε|, √r|η|, r|ε|, r|η|].
  OmegaMatrices BuildOmegaMatrices(double x1, double a_zeta1, double a) const;
  OmegaMatrices BuildOmegaMatrices(double x1, double a_zeta1) const;

  OmegaResult ComputeOmega(double x1, double a_zeta1) const;
  OmegaResult ComputeOmega(double x1, double a_zeta1, double a) const;

  double ComputeKappa(double x1, double zeta1) const;

  Freedoms Evaluate(double x1, double a_zeta1, bool with_kappa = true) const;

  /// dx̂/dt for the observer state x̂ = [x̂2..x̂n].
  Vector ObserverRhs(std::span<const double> xhat, double x1, double r,
                     double rdot, double u) const;

  /// η from the observer estimates.
  Vector ScaledEstimate(std::span<const double> xhat, double x1, double r,
                        double zeta1) const;

  /// ε from the true state x = [x1..xn].
  Vector ScaledError(std::span<const double> x, std::span<const double> xhat,
                     double r) const;

  double Control(std::span<const double> xhat, double x1, double r,
                 double zeta1) const;

  /// V = c·r·εᵀP_oε + ½x1² + r·ηᵀP_cη.
  double Lyapunov(std::span<const double> x, std::span<const double> xhat,
                  double r, double zeta1) const;

  /// x̂_i = −r^(i-1)·f_i(x1), so every estimate starts at zero.
  Vector ZeroEstimate(double x1, double r) const;

  /// 32·λ_max(P_c)²·Ḡ²/(3·ν̃_o·ν_c).
  double ConservativeC() const;
  /// ½·min(ν_o/ν̄_o, ν_c·σ/ν̄_c).
  double ConservativeA(double sigma) const;

 private:
  CDesign ComputeC() const;

  SystemSpec spec_;
  ControllerCertificate ctrl_;
  ObserverCertificate obs_;
  OfParams params_;
  Tolerances tol_;
  DeltaTable deltas_;
  Expr shape_;
  Expr shape_prime_;
  // ∫_0^x1 φ_(m,m+1)/φ_(1,2) for m = 2..n-1.
  std::vector<std::unique_ptr<CumulativeIntegral>> basis_;
  CDesign c_design_;
};

/// The stacked c-pencil pair for given normalized upper-diagonal values
/// (ratios[k] = φ_(k+3,k+4)/φ_(2,3)).
OmegaMatrices BuildCPencilVertex(const ControllerCertificate& ctrl,
                                 const ObserverCertificate& obs, double c1,
                                 std::span<const double> ratios);

}  // namespace hgsc
