#include <cmath>

#include <gtest/gtest.h>

#include "example_systems.hpp"
#include "hgsc/errors.hpp"
#include "hgsc/lyap.hpp"
#include "hgsc/pencil.hpp"

namespace hgsc {
namespace {

using testing::BenchmarkController;
using testing::BenchmarkObserver;
using testing::BenchmarkSystem;
using testing::ControllerGains;
using testing::ControllerShape;
using testing::ObserverGains;
using testing::ObserverShape;
using testing::SimpleSystem;

Matrix M2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(DriftMatrices, ControllerStructure) {
  const SystemSpec s = BenchmarkSystem();
  for (double x1 : {0.0, 0.7, -2.0}) {
    const double f = 1 + std::pow(x1, 4);
    const Matrix a = BuildControllerMatrix(s, ControllerGains(), x1);
    EXPECT_LE((a - M2(0, f, -8 * f, -15 * f)).norm(), 1e-12 * f);
  }
}

TEST(DriftMatrices, ObserverStructure) {
  const SystemSpec s = BenchmarkSystem();
  EXPECT_LE((BuildObserverMatrix(s, ObserverGains(), 0.0) - M2(-8, 1, -6, 0))
                .norm(),
            1e-12);
  const double f = 1 + std::pow(1.5, 4);
  EXPECT_LE((BuildObserverMatrix(s, ObserverGains(), 1.5) -
             M2(-8 * f, f, -6 * f, 0))
                .norm(),
            1e-12 * f);
  const Matrix zero = BuildObserverMatrix(s, Matrix::Zero(2, 1), 1.0);
  EXPECT_EQ(zero.col(0).norm(), 0.0);
}

TEST(DriftMatrices, FourthOrderStructure) {
  const SystemSpec s = SimpleSystem({"1", "1+x1^2", "2+x1^2"}, "1");
  const Matrix ones = Matrix::Ones(3, 2);
  const double x1 = 0.5;
  const double f23 = 1.25, f34 = 2.25;
  const Matrix a = BuildControllerMatrix(s, ones, x1);
  Matrix expected(3, 3);
  expected << 0, f23, 0, 0, 0, f34, -(f23 + f34), -(f23 + f34), -(f23 + f34);
  EXPECT_LE((a - expected).norm(), 1e-12);
  const Matrix o = BuildObserverMatrix(s, ones, x1);
  Matrix expected_o(3, 3);
  expected_o << -(f23 + f34), f23, 0, -(f23 + f34), 0, f34, -(f23 + f34), 0, 0;
  EXPECT_LE((o - expected_o).norm(), 1e-12);
}

TEST(ControllerConstants, BenchmarkValues) {
  const SystemSpec s = BenchmarkSystem();
  for (double a_c : {1.0, 5.0}) {
    const ControllerCertificate c = BenchmarkController(s, a_c);
    // λ_max of [[−8,−13.5],[−13.5,−29]] in closed form.
    const double nu = (37.0 - std::sqrt(21.0 * 21.0 + 4 * 182.25)) / 2.0;
    EXPECT_NEAR(c.nu / a_c, nu, 1e-9);
    EXPECT_NEAR(c.nu / a_c, 1.397, 1.397e-3);
    EXPECT_NEAR(c.nu_lower / a_c, (5 - std::sqrt(5.0)) / 2, 1e-12);
    EXPECT_NEAR(c.nu_upper / a_c, (5 + std::sqrt(5.0)) / 2, 1e-12);
    EXPECT_NEAR(c.nu_lower / a_c, 1.382, 1.382e-3);
    EXPECT_NEAR(c.nu_upper / a_c, 3.618, 3.618e-3);
  }
}

TEST(ControllerConstants, LinearInScale) {
  const SystemSpec s = BenchmarkSystem();
  const ControllerCertificate one = BenchmarkController(s, 1.0);
  const ControllerCertificate two = BenchmarkController(s, 2.0);
  EXPECT_NEAR(two.nu, 2 * one.nu, 1e-12);
  EXPECT_NEAR(two.nu_lower, 2 * one.nu_lower, 1e-12);
  EXPECT_NEAR(two.nu_upper, 2 * one.nu_upper, 1e-12);
}

TEST(ControllerConstants, InequalityHoldsOnGrid) {
  const SystemSpec s = BenchmarkSystem();
  const ControllerCertificate c = BenchmarkController(s, 3.0);
  for (double x1 : s.grid.Points()) {
    const Matrix l = LyapunovForm(c.p, BuildControllerMatrix(s, c.gain_coeff, x1));
    const Matrix m = l + c.nu * s.Upper(2, x1) * Matrix::Identity(2, 2);
    ASSERT_LE(MaxEigenvalue(m), 1e-6 * (c.p * BuildControllerMatrix(s, c.gain_coeff, x1)).norm())
        << "x1 = " << x1;
  }
}

TEST(ControllerConstants, RejectsBadCertificates) {
  const SystemSpec s = BenchmarkSystem();
  EXPECT_THROW(ExtractControllerConstants(s, M2(1, 2, 2, 1), ControllerGains()),
               CertificateError);
  EXPECT_THROW(
      ExtractControllerConstants(s, ControllerShape(), Matrix::Zero(2, 1)),
      CertificateError);
}

TEST(ObserverConstants, BenchmarkValues) {
  const SystemSpec s = BenchmarkSystem();
  const ObserverCheck check = VerifyObserverConstants(
      s, ObserverShape(), ObserverGains(), 5.95, 18.989);
  EXPECT_TRUE(check.ok) << check.max_violation;
  EXPECT_NEAR(check.nu_lower, 10.0, 1e-12);
  EXPECT_NEAR(check.nu_upper, 35.0, 1e-12);
  EXPECT_NEAR(check.g_bar, 10.0, 1e-12);

  const ObserverCertificate c = BenchmarkObserver(s, 100.0);
  EXPECT_NEAR(c.nu_lower, 1000.0, 1e-9);
  EXPECT_NEAR(c.nu_upper, 3500.0, 1e-9);
  EXPECT_NEAR(c.g_bar, 10.0, 1e-12);
}

TEST(ObserverConstants, OverclaimedConstantsFailWithWitness) {
  const SystemSpec s = BenchmarkSystem();
  const ObserverCheck check = VerifyObserverConstants(
      s, ObserverShape(), ObserverGains(), 8.0, 18.989);
  EXPECT_FALSE(check.ok);
  EXPECT_GT(check.max_violation, 0.0);
  EXPECT_THROW(MakeObserverCertificate(s, ObserverShape(), ObserverGains(),
                                       8.0, 18.989),
               CertificateError);
}

TEST(Deltas, BenchmarkController) {
  const SystemSpec s = BenchmarkSystem();
  const ControllerCertificate c = BenchmarkController(s, 1.0);
  const DeltaTable table(s, c);
  EXPECT_TRUE(table.controller_constant());
  const double delta_a = 1.0 - std::sqrt(182.25 / 232.0);
  const double delta_d = 1.0 - std::sqrt(1.0 / 6.0);
  for (double x1 : {0.0, 0.3, 1.0, -2.5}) {
    const DeltaFactors d = table.Controller(x1);
    EXPECT_NEAR(d.delta_a, delta_a, 1e-9);
    EXPECT_NEAR(d.delta_d, delta_d, 1e-9);
    const Matrix l = LyapunovForm(c.p, BuildControllerMatrix(s, c.gain_coeff, x1));
    const Matrix gap = l - d.delta_a * d.abar;
    EXPECT_TRUE(CertifyNsd(gap, PsdTolerance(gap, 1e-8)).ok);
    const Matrix dform = LyapunovForm(c.p, ShiftedDiagonal(3));
    const Matrix dgap = d.delta_d * d.dbar - dform;
    EXPECT_TRUE(CertifyNsd(dgap, PsdTolerance(dgap, 1e-8)).ok);
    EXPECT_LE((d.abar - Matrix(l.diagonal().asDiagonal())).norm(),
              1e-9 * l.norm());
  }
}

TEST(Deltas, InvariantToCertificateScale) {
  const SystemSpec s = BenchmarkSystem();
  const DeltaFactors one = DeltaTable(s, BenchmarkController(s, 1.0)).Controller(0.4);
  const DeltaFactors many =
      DeltaTable(s, BenchmarkController(s, 37.0)).Controller(0.4);
  EXPECT_NEAR(one.delta_a, many.delta_a, 1e-10);
  EXPECT_NEAR(one.delta_d, many.delta_d, 1e-10);
}

TEST(Deltas, ConstantOverGridMatchesPointwise) {
  const SystemSpec s = BenchmarkSystem();
  const ControllerCertificate c = BenchmarkController(s, 1.0);
  const ObserverCertificate o = BenchmarkObserver(s, 1.0);
  const DeltaTable table(s, c, o);
  EXPECT_TRUE(table.observer_constant());
  for (double x1 : s.grid.Points()) {
    const DeltaFactors cached = table.Observer(x1);
    const DeltaFactors direct =
        ComputeDeltas(o.p, BuildObserverMatrix(s, o.gain_coeff, x1));
    ASSERT_NEAR(cached.delta_a, direct.delta_a, 1e-9) << x1;
    ASSERT_NEAR(cached.delta_d, direct.delta_d, 1e-9) << x1;
    ASSERT_LE((cached.abar - direct.abar).norm(), 1e-9 * direct.abar.norm());
  }
}

TEST(Deltas, NonProportionalGainsAreNotCached) {
  const SystemSpec s = SimpleSystem({"1", "1+x1^2", "2+sin(x1)"}, "1");
  EXPECT_FALSE(IsProportionalToLeadingGain(s, Matrix::Ones(3, 2), false));
  Matrix leading = Matrix::Zero(3, 2);
  leading.col(0).setOnes();
  EXPECT_FALSE(IsProportionalToLeadingGain(s, leading, false));
  EXPECT_TRUE(IsProportionalToLeadingGain(BenchmarkSystem(), ControllerGains(),
                                          false));
}

}  // namespace
}  // namespace hgsc
