#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "domination_oracle.hpp"
#include "example_systems.hpp"
#include "hgsc/errors.hpp"
#include "hgsc/freedoms.hpp"
#include "hgsc/of.hpp"
#include "hgsc/pencil.hpp"

namespace hgsc {
namespace {

using testing::BenchmarkController;
using testing::BenchmarkObserver;
using testing::BenchmarkSystem;
using testing::SignedPlant;
using testing::SimpleSystem;

OutputFeedbackDesign MakeDesign(double a_c = 5.0, double a_o = 100.0) {
  const SystemSpec s = BenchmarkSystem();
  return OutputFeedbackDesign(s, BenchmarkController(s, a_c),
                              BenchmarkObserver(s, a_o), OfParams{});
}

const OutputFeedbackDesign& Shared() {
  static const OutputFeedbackDesign design = MakeDesign();
  return design;
}

// Central difference of a vector-valued function of a step h, extrapolated.
Vector Derivative(const std::function<Vector(double)>& at, double h) {
  const Vector d1 = (at(h) - at(-h)) / (2 * h);
  const Vector d2 = (at(h / 2) - at(-h / 2)) / h;
  return (4 * d2 - d1) / 3;
}

TEST(OfParams, Validation) {
  EXPECT_NO_THROW(OfParams{}.Validate());
  OfParams p;
  p.c3 = p.c2;
  EXPECT_THROW(p.Validate(), ConfigError);
  p = OfParams{};
  p.c1 = 1.5;
  EXPECT_THROW(p.Validate(), ConfigError);
}

TEST(OfIntegrals, ClosedForms) {
  const OutputFeedbackDesign& d = Shared();
  const double base = 1.0 / 3.0 - 1.0 + std::numbers::pi / 2.0;
  EXPECT_EQ(d.F(2, 0.0), 0.0);
  EXPECT_EQ(d.F(3, 0.0), 0.0);
  EXPECT_NEAR(d.F(2, 1.0), 8 * base, 1e-6);
  EXPECT_NEAR(d.F(3, 1.0), 6 * base, 1e-6);
  EXPECT_NEAR(d.F(2, 1.0), 7.2330, 5e-5);
  EXPECT_NEAR(d.F(3, 1.0), 5.4248, 5e-5);
  // (1+π⁴)/(1+π²) = π² − 1 + 2/(1+π²), integrated to x.
  for (double x : {-2.3, -0.4, 0.25, 1.7, 3.0}) {
    const double exact = 8 * (x * x * x / 3 - x + 2 * std::atan(x));
    EXPECT_NEAR(d.F(2, x), exact, 1e-8 * std::max(1.0, std::fabs(exact))) << x;
  }
  EXPECT_THROW(d.F(1, 0.5), Error);
  EXPECT_THROW(d.F(4, 0.5), Error);
}

TEST(OfIntegrals, ZeroEstimateInitialization) {
  const Vector xhat = Shared().ZeroEstimate(1.0, 2.0);
  EXPECT_NEAR(xhat(0), -14.466, 5e-4);
  EXPECT_NEAR(xhat(1), -21.699, 5e-4);
}

TEST(OfObserver, Examples) {
  const OutputFeedbackDesign& d = Shared();
  const Vector zero = d.ObserverRhs(std::vector<double>{0, 0}, 0.0, 3.0, 0.0, 0.0);
  EXPECT_EQ(zero.norm(), 0.0);

  const double x1 = 0.6, f23 = 1 + std::pow(x1, 4);
  const std::vector<double> xhat = {0.3, -0.8};
  const Vector top = d.ObserverRhs(xhat, x1, 1.0, 0.0, 0.0);
  const double g2 = 8 * f23;
  EXPECT_NEAR(top(0),
              f23 * (xhat[1] + d.F(3, x1)) - g2 * (xhat[0] + d.F(2, x1)),
              1e-10);

  const Vector u0 = d.ObserverRhs(xhat, x1, 2.0, 0.5, 0.0);
  const Vector u1 = d.ObserverRhs(xhat, x1, 2.0, 0.5, 1.0);
  EXPECT_NEAR(u1(1) - u0(1), d.spec().Mu0(x1), 1e-12);
  EXPECT_NEAR(u1(0) - u0(0), 0.0, 1e-12);
}

TEST(OfObserver, ErrorDynamicsMatchClosedForm) {
  const OutputFeedbackDesign& d = Shared();
  const SystemSpec& s = d.spec();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), ur(1, 5), us(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x = {ux(rng), ux(rng), ux(rng)};
    const std::vector<double> xhat = {ux(rng), ux(rng)};
    const double r = ur(rng), rdot = 2 * std::fabs(us(rng)), u = 3 * us(rng);
    const SignedPlant plant{{us(rng), us(rng), us(rng)}};
    const std::vector<double> dx = plant.Rhs(s, x, u);
    const Vector dxhat = d.ObserverRhs(xhat, x[0], r, rdot, u);
    auto eps_at = [&](double h) {
      std::vector<double> xs = x, xh = xhat;
      for (int i = 0; i < 3; ++i) xs[i] += h * dx[i];
      for (int i = 0; i < 2; ++i) xh[i] += h * dxhat(i);
      return d.ScaledError(xs, xh, r + h * rdot);
    };
    const Vector numeric = Derivative(eps_at, 1e-5);

    const Vector eps = d.ScaledError(x, xhat, r);
    const Matrix a_o = BuildObserverMatrix(s, d.observer().gain_coeff, x[0]);
    const Vector g = EvaluateGains(s, d.observer().gain_coeff, x[0]);
    const double ratio = plant.Phi(s, 1, x) / s.Upper(1, x[0]);
    Vector phi_bar(2);
    phi_bar << -plant.Phi(s, 2, x) / r + g(0) * ratio,
        -plant.Phi(s, 3, x) / (r * r) + g(1) * ratio;
    Matrix d_o = Matrix::Zero(2, 2);
    d_o.diagonal() << 1, 2;
    const Vector closed = r * a_o * eps - rdot / r * d_o * eps + phi_bar;
    EXPECT_LE((numeric - closed).norm(), 1e-6 * std::max(1.0, closed.norm()))
        << "trial " << trial;
  }
}

TEST(OfObserver, EstimateDynamicsMatchClosedForm) {
  const OutputFeedbackDesign& d = Shared();
  const SystemSpec& s = d.spec();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), ur(1, 5), us(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> x = {ux(rng), ux(rng), ux(rng)};
    const std::vector<double> xhat = {ux(rng), ux(rng)};
    const double r = ur(rng), rdot = 2 * std::fabs(us(rng)), az = 1.5;
    const SignedPlant plant{{us(rng), us(rng), us(rng)}};
    const Zeta1 z = d.Zeta(x[0], az);
    const double u = d.Control(xhat, x[0], r, z.value);
    const std::vector<double> dx = plant.Rhs(s, x, u);
    const Vector dxhat = d.ObserverRhs(xhat, x[0], r, rdot, u);
    auto eta_at = [&](double h) {
      std::vector<double> xh = xhat;
      for (int i = 0; i < 2; ++i) xh[i] += h * dxhat(i);
      const double x1 = x[0] + h * dx[0];
      return d.ScaledEstimate(xh, x1, r + h * rdot, d.Zeta(x1, az).value);
    };
    const Vector numeric = Derivative(eta_at, 1e-5);

    const Vector eta = d.ScaledEstimate(xhat, x[0], r, z.value);
    const Vector eps = d.ScaledError(x, xhat, r);
    const Matrix a_c = BuildControllerMatrix(s, d.controller().gain_coeff, x[0]);
    const Vector g = EvaluateGains(s, d.observer().gain_coeff, x[0]);
    const double phi1 = plant.Phi(s, 1, x), phi12 = s.Upper(1, x[0]);
    const double slope = z.derivative * x[0] + z.value;
    Vector h = Vector::Zero(2), xi = Vector::Zero(2);
    h(0) = slope * phi12;
    xi(0) = (phi1 - z.value * x[0] * phi12) * slope / r;
    Matrix d_c = Matrix::Zero(2, 2);
    d_c.diagonal() << 1, 2;
    const Vector closed = r * a_c * eta - rdot / r * d_c * eta +
                          phi1 / phi12 * g - r * g * eps(0) +
                          h * (eta(0) - eps(0)) + xi;
    EXPECT_LE((numeric - closed).norm(), 1e-6 * std::max(1.0, closed.norm()))
        << "trial " << trial;
  }
}

TEST(OfControl, Examples) {
  const OutputFeedbackDesign& d = Shared();
  // Estimates cancel the integral terms and x1 = 0 gives ζ = 0.
  const Vector xhat = d.ZeroEstimate(0.0, 2.5);
  EXPECT_EQ(d.Control(std::vector<double>{xhat(0), xhat(1)}, 0.0, 2.5, 1.0), 0.0);
  // Doubling η doubles u.
  const double x1 = 0.4, r = 1.7, zeta1 = 1.3;
  const Vector base = d.ZeroEstimate(x1, r);
  const std::vector<double> one = {base(0) + r * 0.2 - x1 * zeta1,
                                   base(1) + r * r * -0.3};
  const std::vector<double> two = {base(0) + r * 0.4 - 2 * x1 * zeta1,
                                   base(1) + r * r * -0.6};
  const Vector eta_one = d.ScaledEstimate(one, x1, r, zeta1);
  EXPECT_NEAR(eta_one(0), 0.2, 1e-12);
  EXPECT_NEAR(eta_one(1), -0.3, 1e-12);
  // The second estimate doubles η but must keep the ζ offset once.
  std::vector<double> doubled = two;
  doubled[0] += x1 * zeta1;
  EXPECT_NEAR(d.Control(doubled, x1, r, zeta1),
              2 * d.Control(one, x1, r, zeta1), 1e-9);
}

TEST(OfZeta, Examples) {
  EXPECT_NEAR(Shared().Zeta(0.0, 1.0).value, 1.001, 1e-12);
  const SystemSpec s = SimpleSystem({"1", "1+x1^4"}, "1");
  const OutputFeedbackDesign flat(s, BenchmarkController(s, 5.0),
                                  BenchmarkObserver(s, 100.0), OfParams{});
  EXPECT_NEAR(flat.Zeta(0.7, 2.0).value, 2.0 * 1.001, 1e-12);
  EXPECT_NEAR(flat.Zeta(0.7, 2.0).derivative, 0.0, 1e-12);
  // Monotone in a_ζ1 and matches a hand evaluation at x1 = 1.
  const OutputFeedbackDesign& d = Shared();
  EXPECT_LT(d.Zeta(1.0, 1.0).value, d.Zeta(1.0, 1.1).value);
  const double phi12 = 2, gamma = 2, g2 = 100 * 4;
  const double hand = 1 + 1e-3 * phi12 * phi12 +
                      1e-3 * (g2 / (phi12 * phi12)) * gamma * gamma + 1e-3 * gamma;
  EXPECT_NEAR(d.Zeta(1.0, 1.0).value, hand, 1e-12);
}

// c oracle for a single polytope vertex: the block matrix
// [[c·A, −Mᵀ], [−M, B]] with A, B negative definite and only the first
// column of M nonzero is NSD iff c ≥ |(A⁻¹)₀₀|·vᵀ(−B)⁻¹v with v = M·e1.
double SingleVertexC(const ControllerCertificate& ctrl,
                     const ObserverCertificate& obs, double c1) {
  Matrix a0(2, 2), k0(2, 2);
  a0 << -8, 1, -6, 0;
  k0 << 0, 1, -8, -15;
  const Matrix a = (1 - c1) * LyapunovForm(obs.p, a0);
  const Matrix b = (1 - c1) * LyapunovForm(ctrl.p, k0);
  const Vector v = ctrl.p * obs.gain_coeff.col(0);
  return std::fabs(a.inverse()(0, 0)) * v.dot((-b).inverse() * v);
}

TEST(OfC, MatchesSchurOracle) {
  const OutputFeedbackDesign& d = Shared();
  EXPECT_EQ(d.c_design().vertices, 1);
  const double oracle = SingleVertexC(d.controller(), d.observer(), 0.3);
  EXPECT_NEAR(d.c(), oracle, 1e-9 * oracle);
  EXPECT_LE(d.c_design().margin, 0.0 + 1e-9);
}

TEST(OfC, SmallestLargeEnoughValue) {
  const OutputFeedbackDesign& d = Shared();
  const std::vector<double> none;
  const OmegaMatrices q =
      BuildCPencilVertex(d.controller(), d.observer(), 0.3, none);
  const Matrix below = 0.999 * d.c() * q.q1 + q.q2;
  const Matrix above = 1.001 * d.c() * q.q1 + q.q2;
  EXPECT_FALSE(CertifyNsd(below, PsdTolerance(below)).ok);
  EXPECT_TRUE(CertifyNsd(above, PsdTolerance(above)).ok);
}

TEST(OfC, InvariantToJointScaling) {
  const double c = MakeDesign(5.0, 100.0).c();
  EXPECT_NEAR(MakeDesign(0.05, 1.0).c(), c, 1e-9 * c);
  EXPECT_NEAR(MakeDesign(50.0, 1000.0).c(), c, 1e-9 * c);
}

TEST(OfC, UnitCertificateRatio) {
  // With equal certificate scales the pencil value is 0.969 (±5%).
  EXPECT_NEAR(MakeDesign(1.0, 1.0).c(), 0.969, 0.05 * 0.969);
}

TEST(OfC, BelowConservativeBaseline) {
  const OutputFeedbackDesign d = MakeDesign(0.05, 1.0);
  EXPECT_NEAR(d.ConservativeC(), 9.791, 0.002 * 9.791);
  EXPECT_LT(d.c(), d.ConservativeC());
  // λ_max(P_c) = ã_c·(3+√2)/2 closed form.
  const double lmax = 0.05 * (3 + std::sqrt(2.0)) / 2;
  const double hand = 32 * lmax * lmax * 100 / (3 * 18.989 * d.controller().nu);
  EXPECT_NEAR(d.ConservativeC(), hand, 1e-9 * hand);
}

TEST(OfC, PolytopeVerticesForVaryingRatios) {
  SystemSpec s = SimpleSystem({"1", "1+x1^2", "(1+x1^2)*(2+sin(x1))"}, "1",
                              -2, 2, 401);
  Matrix p(3, 3);
  p << 3, 1, 0, 1, 2, 0.5, 0, 0.5, 1;
  Matrix k(3, 2);
  k << 1, 0, 0, 1, 1, 1;
  ControllerCertificate ctrl;
  ctrl.p = p;
  ctrl.gain_coeff = k;
  ObserverCertificate obs;
  obs.p = p;
  obs.gain_coeff = k;
  // Vertices are formed from the ratio range even if a certificate is not
  // valid; here only the vertex construction is exercised.
  const std::vector<double> lo = {1.0}, hi = {3.0};
  const OmegaMatrices a = BuildCPencilVertex(ctrl, obs, 0.3, lo);
  const OmegaMatrices b = BuildCPencilVertex(ctrl, obs, 0.3, hi);
  EXPECT_EQ(a.q1.rows(), 6);
  EXPECT_GT((a.q2 - b.q2).norm(), 0.0);
  EXPECT_LE((a.q2 - a.q2.transpose()).norm(), 0.0);
}

TEST(OfA, BlockDecoupling) {
  const OutputFeedbackDesign& d = Shared();
  const SystemSpec& s = d.spec();
  for (double x1 : {0.0, 0.5, -1.2}) {
    const double k = 0.3 - 0.1;
    // c cancels inside the observer block.
    const double obs_block = SigmaMin(
        k * LyapunovForm(d.observer().p,
                         BuildObserverMatrix(s, d.observer().gain_coeff, x1)),
        -LyapunovForm(d.observer().p, ShiftedDiagonal(3)));
    const double ctrl_block = SigmaMin(
        k * LyapunovForm(d.controller().p,
                         BuildControllerMatrix(s, d.controller().gain_coeff, x1)),
        -LyapunovForm(d.controller().p, ShiftedDiagonal(3)));
    const double a = d.ComputeA(x1);
    EXPECT_NEAR(a, std::min(obs_block, ctrl_block), 1e-10 * a);
  }
  EXPECT_NEAR(d.ComputeA(0.0), 0.0922, 1e-4);
}

TEST(OfA, ConservativeBaseline) {
  EXPECT_NEAR(Shared().ConservativeA(1.0), 0.5 * 5.95 / 35.0, 1e-9);
}

TEST(OfKappa, MinimumOverBlocks) {
  const OutputFeedbackDesign& d = Shared();
  const SystemSpec& s = d.spec();
  const double c3 = 1e-4;
  for (double x1 : {0.0, 0.8}) {
    const double zeta1 = d.Zeta(x1, 1.0).value;
    const double head = 2 * c3 * zeta1 * s.Upper(1, x1);
    const double obs = SigmaMin(
        c3 * d.c() *
            LyapunovForm(d.observer().p,
                         BuildObserverMatrix(s, d.observer().gain_coeff, x1)),
        -d.observer().p);
    const double ctrl = SigmaMin(
        c3 * LyapunovForm(d.controller().p,
                          BuildControllerMatrix(s, d.controller().gain_coeff, x1)),
        -d.controller().p);
    const double kappa = d.ComputeKappa(x1, zeta1);
    EXPECT_NEAR(kappa, std::min({head, obs, ctrl}), 1e-10 * kappa);
  }
}

TEST(OfKappa, InvariantToJointScaling) {
  const double a = MakeDesign(5.0, 100.0).ComputeKappa(0.3, 1.2);
  EXPECT_NEAR(MakeDesign(10.0, 200.0).ComputeKappa(0.3, 1.2), a, 1e-10 * a);
}

TEST(OfOmegaMatrices, SymmetricWithExpectedShape) {
  const OutputFeedbackDesign& d = Shared();
  for (double x1 : {0.0, 0.9, -1.4}) {
    const OmegaMatrices q = d.BuildOmegaMatrices(x1, 1.0);
    ASSERT_EQ(q.q2.rows(), 9);
    EXPECT_LE((q.q2 - q.q2.transpose()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(q.q1.row(0).norm(), 0.0);
    EXPECT_EQ(q.q1.bottomRightCorner(4, 4).norm(), 0.0);
    // r blocks are diagonal.
    EXPECT_EQ(q.q2.block(5, 7, 2, 2).norm(), 0.0);
  }
}

TEST(OfOmegaMatrices, ZeroBoundsAndGainsReduceToStateFeedbackPattern) {
  const SystemSpec s = SimpleSystem({"1+x1^2", "1+x1^4"}, "1");
  const OutputFeedbackDesign d(s, BenchmarkController(s, 5.0),
                               BenchmarkObserver(s, 100.0), OfParams{});
  const OmegaMatrices q = d.BuildOmegaMatrices(0.5, 1.0);
  // Without bounds, the x1 row reaches the errors only through ½φ_(1,2).
  EXPECT_EQ(q.q2.block(0, 1, 1, 2).norm(), 0.0);
  EXPECT_NEAR(q.q2(0, 5), 0.5 * 1.25, 1e-12);
  EXPECT_EQ(q.q2(0, 6), 0.0);
  // With no bounds the error diagonal block is only the a-weighted damping.
  const double a = d.ComputeA(0.5);
  EXPECT_LE((q.q2.block(1, 1, 2, 2) - a * q.q1.block(1, 1, 2, 2)).norm(),
            1e-12 * q.q1.norm());
}

TEST(OfDomination, QuadraticFormDominatesDirectEvaluation) {
  const std::vector<testing::DominationPoint> points =
      testing::OfDominationSweep(Shared(), 200, 23);
  for (std::size_t k = 0; k < points.size(); ++k) {
    EXPECT_LE(points[k].direct, points[k].bound + points[k].tol) << "point " << k;
    EXPECT_LE(points[k].bound, points[k].tol) << "point " << k;
  }
}

TEST(OfDomination, LyapunovDecayAtRandomStates) {
  const OutputFeedbackDesign& d = Shared();
  const SystemSpec& s = d.spec();
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> ux(-1.5, 1.5), ur(1, 10), us(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::vector<double> x = {ux(rng), ux(rng), ux(rng)};
    const double r = ur(rng);
    const Vector zero = d.ZeroEstimate(x[0], r);
    const std::vector<double> xhat = {zero(0) + r * ux(rng),
                                      zero(1) + r * r * ux(rng)};
    const SignedPlant plant{{us(rng), us(rng), us(rng)}};
    const Freedoms f = d.Evaluate(x[0], 1.0);
    const double az = f.a_zeta1;
    const double u = d.Control(xhat, x[0], r, f.zeta1);
    const std::vector<double> dx = plant.Rhs(s, x, u);
    const double dr = GainRate(f.a, f.omega, r);
    const Vector dxhat = d.ObserverRhs(xhat, x[0], r, dr, u);
    auto v_at = [&](double h) {
      std::vector<double> xs = x, xh = xhat;
      for (int i = 0; i < 3; ++i) xs[i] += h * dx[i];
      for (int i = 0; i < 2; ++i) xh[i] += h * dxhat(i);
      Vector out(1);
      out(0) = d.Lyapunov(xs, xh, r + h * dr, d.Zeta(xs[0], az).value);
      return out;
    };
    double speed = dr * dr;
    for (double v : dx) speed += v * v;
    speed += dxhat.squaredNorm();
    const double h = 1e-6 / std::max(1.0, std::sqrt(speed));
    const double vdot = Derivative(v_at, h)(0);
    const double v = d.Lyapunov(x, xhat, r, f.zeta1);
    EXPECT_LE(vdot, -f.kappa * v + 1e-6 * std::max(std::fabs(vdot), v))
        << "trial " << trial << " vdot " << vdot << " v " << v;
  }
}

TEST(OfCertificates, HoldAlongGrid) {
  const OutputFeedbackDesign& d = Shared();
  double az = 1.0;
  for (double x1 = 0.0; x1 <= 1.5; x1 += 0.1) {
    const Freedoms f = d.Evaluate(x1, az);
    EXPECT_GE(f.a_zeta1, az);
    az = f.a_zeta1;
    EXPECT_GE(f.omega, 0.0);
    EXPECT_GT(f.kappa, 0.0);
    const OmegaMatrices q = d.BuildOmegaMatrices(x1, f.a_zeta1, f.a);
    const Matrix m = f.omega * q.q1 + q.q2;
    EXPECT_TRUE(CertifyNsd(m, PsdTolerance(m)).ok) << x1;
  }
}

}  // namespace
}  // namespace hgsc
