#include "hgsc/model.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {
namespace {

double At(const Expr& e, double x1) { return e.Evaluate(std::span(&x1, 1)); }

std::string Where(double x1) {
  std::ostringstream os;
  os << "x1=" << x1;
  return os.str();
}

}  // namespace

std::vector<double> Grid::Points() const {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {lo};
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    out.push_back(lo + (hi - lo) * k / (count - 1));
  }
  return out;
}

double SystemSpec::Upper(int i, double x1) const { return At(upper[i - 1], x1); }

double SystemSpec::Mu0(double x1) const { return At(mu0, x1); }

double SystemSpec::Bound(int i, int j, double x1) const {
  return At(bound[i - 1][j - 1], x1);
}

Expr SystemSpec::GammaExpr() const {
  Expr sum;
  for (int i = 2; i <= n; ++i) {
    for (int j = 1; j <= i; ++j) sum = sum + bound[i - 1][j - 1];
  }
  return sum;
}

void SystemSpec::Validate() const {
  if (n < 3) throw ConfigError("system order n must be at least 3");
  if (static_cast<int>(upper.size()) != n - 1) {
    throw ConfigError("expected n-1 upper-diagonal functions");
  }
  if (static_cast<int>(bound.size()) != n) {
    throw ConfigError("expected n rows of bound functions");
  }
  for (int i = 1; i <= n; ++i) {
    if (static_cast<int>(bound[i - 1].size()) != i) {
      throw ConfigError("bound row " + std::to_string(i) + " must have " +
                        std::to_string(i) + " entries");
    }
  }
  if (!true_phi.empty() && static_cast<int>(true_phi.size()) != n) {
    throw ConfigError("expected n plant functions");
  }
  auto x1_only = [](const Expr& e, const std::string& what) {
    if (e.max_variable() > 1) {
      throw ConfigError(what + " may depend on x1 only");
    }
  };
  for (int i = 1; i < n; ++i) {
    x1_only(upper[i - 1], "phi_(" + std::to_string(i) + "," +
                              std::to_string(i + 1) + ")");
  }
  x1_only(mu0, "mu0");
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= i; ++j) {
      x1_only(bound[i - 1][j - 1], "bound (" + std::to_string(i) + "," +
                                       std::to_string(j) + ")");
    }
    if (!true_phi.empty() && true_phi[i - 1].max_variable() > n) {
      throw ConfigError("plant function " + std::to_string(i) +
                        " may depend on x1..x" + std::to_string(n) + " only");
    }
  }
  if (grid.count < 1 || !(grid.hi >= grid.lo)) {
    throw ConfigError("verification grid is empty");
  }
  for (double x1 : grid.Points()) {
    for (int i = 1; i <= n; ++i) {
      for (int j = 1; j <= i; ++j) {
        const double v = Bound(i, j, x1);
        if (!(v >= 0.0)) {
          throw ConfigError("bound (" + std::to_string(i) + "," +
                            std::to_string(j) + ") is negative at " +
                            Where(x1));
        }
      }
    }
  }
}

double CheckLowerBound(const SystemSpec& spec) {
  double sigma = std::numeric_limits<double>::infinity();
  for (double x1 : spec.grid.Points()) {
    for (int i = 1; i < spec.n; ++i) {
      const double v = spec.Upper(i, x1);
      if (!(v > 0.0)) {
        throw AssumptionError("phi_(" + std::to_string(i) + "," +
                              std::to_string(i + 1) +
                              ") is not bounded away from zero at " + Where(x1));
      }
      sigma = std::min(sigma, v);
    }
    const double m = spec.Mu0(x1);
    if (!(m > 0.0)) {
      throw AssumptionError("mu0 is not bounded away from zero at " +
                            Where(x1));
    }
    sigma = std::min(sigma, m);
  }
  if (!std::isfinite(sigma)) throw AssumptionError("verification grid is empty");
  return sigma;
}

BoundCheckReport CheckUncertaintyBounds(const SystemSpec& spec, int samples,
                                        std::uint64_t seed) {
  BoundCheckReport report;
  if (spec.true_phi.empty()) return report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> box(-spec.sample_box, spec.sample_box);
  std::vector<double> x(spec.n);
  for (int s = 0; s < samples; ++s) {
    for (double& v : x) v = box(rng);
    for (int i = 1; i <= spec.n; ++i) {
      const double value = std::fabs(spec.true_phi[i - 1].Evaluate(x));
      double limit = 0.0;
      for (int j = 1; j <= i; ++j) {
        limit += spec.Bound(i, j, x[0]) * std::fabs(x[j - 1]);
      }
      double ratio = 0.0;
      if (value > 0.0) {
        ratio = limit > 0.0 ? value / limit
                            : std::numeric_limits<double>::infinity();
      }
      if (ratio > report.worst_ratio) {
        report.worst_ratio = ratio;
        report.witness = x;
        report.worst_row = i;
      }
    }
  }
  if (report.worst_ratio > 1.0 + 1e-12) {
    std::ostringstream os;
    os << "plant function " << report.worst_row
       << " exceeds its bound (ratio " << report.worst_ratio << ") at x=(";
    for (std::size_t k = 0; k < report.witness.size(); ++k) {
      os << (k ? ", " : "") << report.witness[k];
    }
    os << ")";
    throw AssumptionError(os.str());
  }
  return report;
}

DominanceReport CheckCascadingDominance(const SystemSpec& spec) {
  DominanceReport report;
  const std::vector<double> points = spec.grid.Points();
  for (int i = 3; i <= spec.n - 1; ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double x1 : points) {
      const double ratio = spec.Upper(i, x1) / spec.Upper(i - 1, x1);
      if (!std::isfinite(ratio) || !(ratio > 0.0)) {
        throw AssumptionError("ratio phi_(" + std::to_string(i) + "," +
                              std::to_string(i + 1) + ")/phi_(" +
                              std::to_string(i - 1) + "," + std::to_string(i) +
                              ") is unbounded or non-positive at " + Where(x1));
      }
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    report.rho_min.push_back(lo);
    report.rho_max.push_back(hi);
  }
  return report;
}

}  // namespace hgsc
