#pragma once

#include <optional>

#include "hgsc/model.hpp"
#include "hgsc/pencil.hpp"

namespace hgsc {

/// Gains of the form gain_i(x1) = Σ_m coeff(i-2, m-2)·φ_(m,m+1)(x1) for
/// i = 2..n and m = 2..n-1, so `coeff` is (n-1)×(n-2).
Vector EvaluateGains(const SystemSpec& spec, const Matrix& coeff, double x1);

/// Scaled-state drift A_c(x1): superdiagonal φ_(i+1,i+2), last row −k.
Matrix BuildControllerMatrix(const SystemSpec& spec, const Matrix& gain_coeff,
                             double x1);

/// Observer-error drift A_o(x1): superdiagonal φ_(i+1,i+2), first column −g.
Matrix BuildObserverMatrix(const SystemSpec& spec, const Matrix& gain_coeff,
                           double x1);

/// D̃ = diag(1, ..., n-1) − ½I.
Matrix ShiftedDiagonal(int n);

/// P·M + Mᵀ·P.
Matrix LyapunovForm(const Matrix& p, const Matrix& m);

struct ControllerCertificate {
  Matrix p;
  Matrix gain_coeff;
  /// P·A_c + A_cᵀ·P ⪯ −nu·φ_(2,3)·I on the grid.
  double nu{0.0};
  /// nu_lower·I ⪯ P·D̃ + D̃·P ⪯ nu_upper·I.
  double nu_lower{0.0};
  double nu_upper{0.0};
};

struct ObserverCertificate {
  Matrix p;
  Matrix gain_coeff;
  /// P·A_o + A_oᵀ·P ⪯ −nu·I − nu_tilde·φ_(2,3)·CᵀC on the grid.
  double nu{0.0};
  double nu_tilde{0.0};
  double nu_lower{0.0};
  double nu_upper{0.0};
  /// |G(x1)| ≤ g_bar·φ_(2,3)(x1) on the grid.
  double g_bar{0.0};
};

/// Computes the best controller constants for (P, gains) over the grid.
/// @throws CertificateError if P is not positive definite or nu ≤ 0.
ControllerCertificate ExtractControllerConstants(const SystemSpec& spec,
                                                 const Matrix& p,
                                                 const Matrix& gain_coeff);

struct ObserverCheck {
  bool ok{false};
  /// Largest λ_max(P·A_o + A_oᵀ·P + nu·I + nu_tilde·φ_(2,3)·CᵀC) over the
  /// grid, relative to ‖P·A_o + A_oᵀ·P‖_F at the same point.
  double max_violation{0.0};
  double witness_x1{0.0};
  double nu_lower{0.0};
  double nu_upper{0.0};
  double g_bar{0.0};
};

/// Checks supplied observer constants on the grid (relative tolerance `tol`).
ObserverCheck VerifyObserverConstants(const SystemSpec& spec, const Matrix& p,
                                      const Matrix& gain_coeff, double nu,
                                      double nu_tilde, double tol = 1e-6);

/// Verifies and packages an observer certificate.
/// @throws CertificateError with the witness x1 on failure.
ObserverCertificate MakeObserverCertificate(const SystemSpec& spec,
                                            const Matrix& p,
                                            const Matrix& gain_coeff,
                                            double nu, double nu_tilde);

/// Diagonal dominance factors of one certificate at one x1:
///   L ⪯ delta_a·diag(L) with L = P·A + Aᵀ·P,
///   D ⪰ delta_d·diag(D) with D = P·D̃ + D̃·P.
struct DeltaFactors {
  double delta_a{0.0};
  double delta_d{0.0};
  Matrix abar;
  Matrix dbar;
};

DeltaFactors ComputeDeltas(const Matrix& p, const Matrix& drift);

/// Evaluates the δ factors of the controller (and optionally the observer)
/// certificate. When A(x1)/φ_(2,3)(x1) is constant over the grid the factors
/// are computed once and reused; the abar matrices are always rescaled to
/// the requested x1.
class DeltaTable {
 public:
  DeltaTable(const SystemSpec& spec, const ControllerCertificate& ctrl,
             const std::optional<ObserverCertificate>& obs = std::nullopt);

  DeltaFactors Controller(double x1) const;
  DeltaFactors Observer(double x1) const;

  bool controller_constant() const { return ctrl_unit_.has_value(); }
  bool observer_constant() const { return obs_unit_.has_value(); }

 private:
  SystemSpec spec_;
  ControllerCertificate ctrl_;
  std::optional<ObserverCertificate> obs_;
  // Factors of the normalized drift A/φ_(2,3) when it is constant.
  std::optional<DeltaFactors> ctrl_unit_;
  std::optional<DeltaFactors> obs_unit_;
};

/// True when every entry of f(x1)/φ_(2,3)(x1) varies by less than `rel`
/// (relative) over the grid.
bool IsProportionalToLeadingGain(const SystemSpec& spec, const Matrix& coeff,
                                 bool observer, double rel = 1e-9);

}  // namespace hgsc
