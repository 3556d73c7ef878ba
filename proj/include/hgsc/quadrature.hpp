#pragma once

#include <functional>
#include <mutex>
#include <vector>

namespace hgsc {

/// Adaptive Simpson integral of `f` over [lo, hi] to absolute tolerance
/// `tol`.
/// @throws Error if the recursion depth limit is hit before convergence.
double AdaptiveSimpson(const std::function<double(double)>& f, double lo,
                       double hi, double tol, int max_depth = 50);

/// F(x) = ∫_0^x f with cumulative values memoized at multiples of
/// `bucket`, so repeated evaluations cost one short integral each.
///
/// The cache grows on demand under a mutex; instances are not copyable.
class CumulativeIntegral {
 public:
  CumulativeIntegral(std::function<double(double)> f, double tol,
                     double bucket = 1e-3);
  CumulativeIntegral(const CumulativeIntegral&) = delete;
  CumulativeIntegral& operator=(const CumulativeIntegral&) = delete;

  double operator()(double x) const;

 private:
  // Cumulative value at k·bucket, k ≥ 0 (positive) or k ≤ 0 (negative).
  double Node(long k) const;

  std::function<double(double)> f_;
  double tol_;
  double bucket_;
  mutable std::mutex mutex_;
  mutable std::vector<double> positive_{0.0};
  mutable std::vector<double> negative_{0.0};
};

}  // namespace hgsc
