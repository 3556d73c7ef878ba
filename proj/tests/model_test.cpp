#include <gtest/gtest.h>

#include "example_systems.hpp"
#include "hgsc/errors.hpp"
#include "hgsc/model.hpp"

namespace hgsc {
namespace {

using testing::BenchmarkSystem;
using testing::SimpleSystem;

TEST(CheckLowerBound, BenchmarkSigmaIsOne) {
  SystemSpec s = BenchmarkSystem();
  s.grid = {-3, 3, 601};
  EXPECT_DOUBLE_EQ(CheckLowerBound(s), 1.0);
}

TEST(CheckLowerBound, VanishingInputGainIsRejected) {
  SystemSpec s = SimpleSystem({"1", "1"}, "x1", -1, 1, 21);
  try {
    CheckLowerBound(s);
    FAIL() << "expected AssumptionError";
  } catch (const AssumptionError& e) {
    EXPECT_NE(std::string(e.what()).find("mu0"), std::string::npos) << e.what();
  }
}

TEST(CheckLowerBound, ConstantGains) {
  EXPECT_DOUBLE_EQ(CheckLowerBound(SimpleSystem({"2", "2"}, "3")), 2.0);
}

TEST(CheckUncertaintyBounds, BenchmarkPasses) {
  const BoundCheckReport r = CheckUncertaintyBounds(BenchmarkSystem(), 10000);
  EXPECT_LE(r.worst_ratio, 1.0);
  EXPECT_GT(r.worst_ratio, 0.5);
}

TEST(CheckUncertaintyBounds, ViolationReportsWitness) {
  SystemSpec s = SimpleSystem({"1", "1"}, "1");
  s.bound[1][1] = Parse("1");
  s.true_phi = {Parse("0"), Parse("2*x2"), Parse("0")};
  try {
    CheckUncertaintyBounds(s, 1000);
    FAIL() << "expected AssumptionError";
  } catch (const AssumptionError& e) {
    EXPECT_NE(std::string(e.what()).find("at x=("), std::string::npos)
        << e.what();
  }
}

TEST(CheckUncertaintyBounds, ZeroTruthHasZeroRatio) {
  SystemSpec s = SimpleSystem({"1", "1"}, "1");
  s.true_phi = {Parse("0"), Parse("0"), Parse("0")};
  EXPECT_DOUBLE_EQ(CheckUncertaintyBounds(s, 1000).worst_ratio, 0.0);
}

TEST(CheckCascadingDominance, VacuousForThirdOrder) {
  const DominanceReport r = CheckCascadingDominance(BenchmarkSystem());
  EXPECT_TRUE(r.rho_min.empty());
  EXPECT_TRUE(r.rho_max.empty());
}

TEST(CheckCascadingDominance, FourthOrderRatios) {
  const DominanceReport same =
      CheckCascadingDominance(SimpleSystem({"1", "1+x1^2", "1+x1^2"}, "1"));
  ASSERT_EQ(same.rho_min.size(), 1u);
  EXPECT_DOUBLE_EQ(same.rho_min[0], 1.0);
  EXPECT_DOUBLE_EQ(same.rho_max[0], 1.0);

  const DominanceReport twice = CheckCascadingDominance(
      SimpleSystem({"1", "1+x1^2", "2*(1+x1^2)"}, "1"));
  ASSERT_EQ(twice.rho_min.size(), 1u);
  EXPECT_NEAR(twice.rho_min[0], 2.0, 1e-14);
  EXPECT_NEAR(twice.rho_max[0], 2.0, 1e-14);
}

TEST(CheckCascadingDominance, RatioRangeOverGrid) {
  const DominanceReport r = CheckCascadingDominance(
      SimpleSystem({"1", "1", "2+sin(x1)"}, "1", -5, 5, 2001));
  ASSERT_EQ(r.rho_min.size(), 1u);
  EXPECT_NEAR(r.rho_min[0], 1.0, 1e-4);
  EXPECT_NEAR(r.rho_max[0], 3.0, 1e-4);
}

TEST(CheckAssumptions, StableUnderGridRefinement) {
  SystemSpec coarse = BenchmarkSystem();
  coarse.grid.count = 1001;
  SystemSpec fine = coarse;
  fine.grid.count = 8001;
  EXPECT_NEAR(CheckLowerBound(coarse), CheckLowerBound(fine), 0.01);
}

TEST(SystemSpec, ValidateRejectsNegativeBounds) {
  SystemSpec s = BenchmarkSystem();
  s.bound[1][1] = Parse("x1^3");
  EXPECT_THROW(s.Validate(), ConfigError);
}

TEST(SystemSpec, ValidateRejectsUpperDependingOnOtherStates) {
  SystemSpec s = BenchmarkSystem();
  s.upper[0] = Parse("1 + x2^2");
  EXPECT_THROW(s.Validate(), ConfigError);
}

TEST(SystemSpec, ValidateRejectsShapeErrors) {
  SystemSpec s = BenchmarkSystem();
  s.bound[2].pop_back();
  EXPECT_THROW(s.Validate(), ConfigError);
  SystemSpec small = BenchmarkSystem();
  small.n = 2;
  EXPECT_THROW(small.Validate(), ConfigError);
}

TEST(SystemSpec, GammaSumsBoundRowsFromTwo) {
  const SystemSpec s = BenchmarkSystem();
  const std::vector<double> x = {2.0};
  EXPECT_DOUBLE_EQ(s.GammaExpr().Evaluate(x), 8.0 + 4.0);
}

}  // namespace
}  // namespace hgsc
