#pragma once

#include <string>
#include <vector>

#include "hgsc/of.hpp"
#include "hgsc/sf.hpp"

namespace hgsc {

enum class Mode { kStateFeedback, kOutputFeedback };
enum class EstimatePolicy { kExplicit, kZeroEstimate };

struct SimConfig {
  Mode mode{Mode::kStateFeedback};
  double t_end{10.0};
  double dt{1e-4};
  std::vector<double> x0;
  double r0{1.0};
  EstimatePolicy xhat0_policy{EstimatePolicy::kZeroEstimate};
  /// Initial observer state [x̂2..x̂n] for the explicit policy.
  std::vector<double> xhat0;
  /// Log every `log_stride` integration steps (the last step is always
  /// logged).
  int log_stride{1};
  /// Constant added to the computed input before it reaches the plant.
  /// Zero in normal runs; used to check that the decay monitor notices a
  /// corrupted loop.
  double input_offset{0.0};

  /// @throws ConfigError on dt ≤ 0, r0 < 1, bad dimensions and so on.
  void Validate(int n) const;
};

struct TrajectoryRow {
  double t{0.0};
  std::vector<double> x;
  /// Observer state [x̂2..x̂n]; empty in state-feedback mode.
  std::vector<double> xhat;
  double r{1.0};
  double u{0.0};
  double a{0.0};
  double omega{0.0};
  double zeta1{0.0};
  double kappa{0.0};
  double v{0.0};
  double a_zeta1{0.0};
  /// An a_ζ1 increase happened since the previous logged row.
  bool event{false};
};

struct TrajectoryLog {
  Mode mode{Mode::kStateFeedback};
  int n{0};
  /// The constant c (output feedback only).
  double c{0.0};
  int event_count{0};
  long steps{0};
  std::vector<TrajectoryRow> rows;
};

/// Fixed-step RK4 over plant, r and (in output-feedback mode) observer.
/// Freedoms are recomputed at every stage; an a_ζ1 increase required by any
/// stage makes the whole step restart with the larger value.
/// @throws SimulationError on a non-finite state, reporting the time.
TrajectoryLog Simulate(const StateFeedbackDesign& design,
                       const SimConfig& config);
TrajectoryLog Simulate(const OutputFeedbackDesign& design,
                       const SimConfig& config);

struct DecayReport {
  int checked{0};
  int passed{0};
  /// passed/checked, or 1 when nothing was checked.
  double fraction{1.0};
  /// Largest V̇ + κV − tol over the checked intervals.
  double worst_excess{0.0};
  double worst_t{0.0};
  double tol{0.0};
};

/// Forward-difference check of V̇ ≤ −κV + rel_tol·V(0) between consecutive
/// logged rows, skipping intervals that contain an a_ζ1 increase.
DecayReport MonitorDecay(const TrajectoryLog& log, double rel_tol = 1e-6);

/// Pointwise check of V̇ ≤ −κV + rel_tol·V(0) at every logged state, with
/// V̇ taken along the closed-loop vector field whose input is shifted by
/// `input_offset`. With a zero offset this re-verifies the logged run; a
/// nonzero offset replays the same states under a corrupted input.
DecayReport ReplayDecay(const StateFeedbackDesign& design,
                        const TrajectoryLog& log, double input_offset = 0.0,
                        double rel_tol = 1e-6);
DecayReport ReplayDecay(const OutputFeedbackDesign& design,
                        const TrajectoryLog& log, double input_offset = 0.0,
                        double rel_tol = 1e-6);

}  // namespace hgsc
