#include "hgsc/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {
namespace {

struct Simpson {
  const std::function<double(double)>& f;
  int max_depth;

  double Recurse(double a, double b, double fa, double fm, double fb,
                 double whole, double tol, int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= max_depth) {
      std::ostringstream os;
      os << "adaptive Simpson did not converge on [" << a << ", " << b << "]";
      throw Error(os.str());
    }
    return Recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           Recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

double AdaptiveSimpson(const std::function<double(double)>& f, double lo,
                       double hi, double tol, int max_depth) {
  if (lo == hi) return 0.0;
  const double fa = f(lo);
  const double fb = f(hi);
  const double fm = f(0.5 * (lo + hi));
  // Always split once so that symmetric integrands cannot fool the first
  // error estimate.
  const Simpson s{f, max_depth};
  const double m = 0.5 * (lo + hi);
  const double left_m = f(0.5 * (lo + m));
  const double right_m = f(0.5 * (m + hi));
  const double left = (m - lo) / 6.0 * (fa + 4.0 * left_m + fm);
  const double right = (hi - m) / 6.0 * (fm + 4.0 * right_m + fb);
  return s.Recurse(lo, m, fa, left_m, fm, left, 0.5 * tol, 1) +
         s.Recurse(m, hi, fm, right_m, fb, right, 0.5 * tol, 1);
}

CumulativeIntegral::CumulativeIntegral(std::function<double(double)> f,
                                       double tol, double bucket)
    : f_(std::move(f)), tol_(tol), bucket_(bucket) {
  if (!(bucket_ > 0.0)) throw Error("quadrature bucket must be positive");
}

double CumulativeIntegral::Node(long k) const {
  std::vector<double>& side = k >= 0 ? positive_ : negative_;
  const auto index = static_cast<std::size_t>(std::labs(k));
  const double dir = k >= 0 ? 1.0 : -1.0;
  while (side.size() <= index) {
    const auto j = static_cast<double>(side.size());
    const double a = dir * (j - 1.0) * bucket_;
    const double b = dir * j * bucket_;
    side.push_back(side.back() + AdaptiveSimpson(f_, a, b, tol_));
  }
  return side[index];
}

double CumulativeIntegral::operator()(double x) const {
  if (!std::isfinite(x)) throw Error("quadrature argument is not finite");
  const long k = std::lround(x / bucket_);
  const double node_x = static_cast<double>(k) * bucket_;
  double base;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    base = Node(k);
  }
  return base + AdaptiveSimpson(f_, node_x, x, tol_);
}

}  // namespace hgsc
