#include "hgsc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hgsc/errors.hpp"

namespace hgsc {

void SimConfig::Validate(int n) const {
  if (!(dt > 0.0)) throw ConfigError("sim.dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("sim.t_end must be positive");
  if (!(r0 >= 1.0)) throw ConfigError("sim.r0 must be at least 1");
  if (static_cast<int>(x0.size()) != n) {
    throw ConfigError("sim.x0 must have n entries");
  }
  if (log_stride < 1) throw ConfigError("sim.log_stride must be >= 1");
  if (mode == Mode::kOutputFeedback &&
      xhat0_policy == EstimatePolicy::kExplicit &&
      static_cast<int>(xhat0.size()) != n - 1) {
    throw ConfigError("sim.xhat0 must have n-1 entries");
  }
  if (!std::isfinite(input_offset)) {
    throw ConfigError("sim.input_offset must be finite");
  }
}

namespace {

// Freedoms needed by the vector field at one x1.
struct StageFreedoms {
  double a{0.0};
  double omega{0.0};
  double zeta1{0.0};
  double a_zeta1{0.0};
};

struct StageResult {
  Vector derivative;
  double u{0.0};
  StageFreedoms freedoms;
};

template <class Design>
class ClosedLoop {
 public:
  ClosedLoop(const Design& design, const SimConfig& config, bool observer)
      : design_(design),
        config_(config),
        n_(design.spec().n),
        observer_(observer) {}

  int size() const { return n_ + (observer_ ? n_ - 1 : 0) + 1; }
  int r_index() const { return size() - 1; }

  StageFreedoms Freedoms(double x1, double a_zeta1) const {
    if (memo_valid_ && memo_x1_ == x1 && memo_a_zeta1_ == a_zeta1) {
      return memo_;
    }
    StageFreedoms f;
    f.a = design_.ComputeA(x1);
    const OmegaResult omega = design_.ComputeOmega(x1, a_zeta1, f.a);
    f.omega = omega.omega;
    f.a_zeta1 = omega.a_zeta1;
    f.zeta1 = design_.Zeta(x1, f.a_zeta1).value;
    memo_ = f;
    memo_x1_ = x1;
    memo_a_zeta1_ = a_zeta1;
    memo_valid_ = true;
    return f;
  }

  double Control(const Vector& s, const StageFreedoms& f) const {
    return ControlImpl(s, s(r_index()), f.zeta1);
  }

  StageResult Evaluate(const Vector& s, double a_zeta1) const {
    StageResult out;
    const double x1 = s(0);
    const double r = s(r_index());
    out.freedoms = Freedoms(x1, a_zeta1);
    out.u = Control(s, out.freedoms);
    const double rdot = GainRate(out.freedoms.a, out.freedoms.omega, r);

    out.derivative = Vector::Zero(size());
    const SystemSpec& spec = design_.spec();
    const std::span<const double> x(s.data(), n_);
    for (int i = 1; i <= n_; ++i) {
      double v = spec.true_phi.empty()
                     ? 0.0
                     : spec.true_phi[i - 1].Evaluate(x);
      v += i < n_ ? spec.Upper(i, x1) * x[i]
                  : spec.Mu0(x1) * (out.u + config_.input_offset);
      out.derivative(i - 1) = v;
    }
    if (observer_) {
      out.derivative.segment(n_, n_ - 1) = ObserverRhs(s, x1, r, rdot, out.u);
    }
    out.derivative(r_index()) = rdot;
    return out;
  }

  double Lyapunov(const Vector& s, double zeta1) const;

 private:
  double ControlImpl(const Vector& s, double r, double zeta1) const;
  Vector ObserverRhs(const Vector& s, double x1, double r, double rdot,
                     double u) const;

  const Design& design_;
  const SimConfig& config_;
  int n_;
  bool observer_;
  mutable bool memo_valid_{false};
  mutable double memo_x1_{0.0};
  mutable double memo_a_zeta1_{0.0};
  mutable StageFreedoms memo_;
};

template <>
double ClosedLoop<StateFeedbackDesign>::ControlImpl(const Vector& s, double r,
                                                    double zeta1) const {
  return design_.Control(std::span<const double>(s.data(), n_), r, zeta1);
}

template <>
double ClosedLoop<OutputFeedbackDesign>::ControlImpl(const Vector& s, double r,
                                                   double zeta1) const {
  return design_.Control(std::span<const double>(s.data() + n_, n_ - 1), s(0),
                         r, zeta1);
}

template <>
Vector ClosedLoop<StateFeedbackDesign>::ObserverRhs(const Vector&, double,
                                                    double, double,
                                                    double) const {
  throw Error("state-feedback loop has no observer");
}

template <>
Vector ClosedLoop<OutputFeedbackDesign>::ObserverRhs(const Vector& s,
                                                     double x1, double r,
                                                     double rdot,
                                                     double u) const {
  return design_.ObserverRhs(std::span<const double>(s.data() + n_, n_ - 1),
                             x1, r, rdot, u);
}

template <>
double ClosedLoop<StateFeedbackDesign>::Lyapunov(const Vector& s,
                                                 double zeta1) const {
  return design_.Lyapunov(std::span<const double>(s.data(), n_), s(r_index()),
                          zeta1);
}

template <>
double ClosedLoop<OutputFeedbackDesign>::Lyapunov(const Vector& s,
                                                  double zeta1) const {
  return design_.Lyapunov(std::span<const double>(s.data(), n_),
                          std::span<const double>(s.data() + n_, n_ - 1),
                          s(r_index()), zeta1);
}

template <class Design>
TrajectoryRow MakeRow(const ClosedLoop<Design>& loop, const Design& design,
                      const Vector& s, double t, double a_zeta1, int n,
                      bool observer) {
  TrajectoryRow row;
  row.t = t;
  row.x.assign(s.data(), s.data() + n);
  if (observer) row.xhat.assign(s.data() + n, s.data() + 2 * n - 1);
  row.r = s(loop.r_index());
  const StageFreedoms f = loop.Freedoms(s(0), a_zeta1);
  row.u = loop.Control(s, f);
  row.a = f.a;
  row.omega = f.omega;
  row.zeta1 = f.zeta1;
  row.a_zeta1 = f.a_zeta1;
  row.kappa = design.ComputeKappa(s(0), f.zeta1);
  row.v = loop.Lyapunov(s, f.zeta1);
  return row;
}

void RequireFinite(const Vector& s, double t) {
  if (!s.allFinite()) {
    std::ostringstream os;
    os << "state became non-finite at t = " << t;
    throw SimulationError(os.str());
  }
}

template <class Design>
TrajectoryLog Run(const Design& design, const SimConfig& config,
                  bool observer, const Vector& initial) {
  const int n = design.spec().n;
  ClosedLoop<Design> loop(design, config, observer);
  TrajectoryLog log;
  log.mode = config.mode;
  log.n = n;
  log.steps = std::max<long>(1, std::lround(config.t_end / config.dt));
  const double dt = config.dt;

  Vector s = initial;
  RequireFinite(s, 0.0);
  double a_zeta1 = design.params().a_zeta1_init;
  // Settle a_ζ1 at the initial point before the first row is logged.
  const double settled = loop.Freedoms(s(0), a_zeta1).a_zeta1;
  bool pending_event = settled > a_zeta1;
  if (pending_event) ++log.event_count;
  a_zeta1 = settled;
  log.rows.push_back(MakeRow(loop, design, s, 0.0, a_zeta1, n, observer));
  log.rows.back().event = pending_event;
  pending_event = false;

  const int r_at = loop.r_index();
  for (long step = 1; step <= log.steps; ++step) {
    Vector next;
    for (int attempt = 0;; ++attempt) {
      const StageResult k1 = loop.Evaluate(s, a_zeta1);
      const StageResult k2 = loop.Evaluate(s + 0.5 * dt * k1.derivative, a_zeta1);
      const StageResult k3 = loop.Evaluate(s + 0.5 * dt * k2.derivative, a_zeta1);
      const StageResult k4 = loop.Evaluate(s + dt * k3.derivative, a_zeta1);
      const double required =
          std::max({k1.freedoms.a_zeta1, k2.freedoms.a_zeta1,
                    k3.freedoms.a_zeta1, k4.freedoms.a_zeta1});
      if (required > a_zeta1) {
        if (attempt >= 100) {
          throw SimulationError("a_zeta1 did not settle within one step");
        }
        a_zeta1 = required;
        ++log.event_count;
        pending_event = true;
        continue;
      }
      next = s + dt / 6.0 *
                     (k1.derivative + 2.0 * k2.derivative +
                      2.0 * k3.derivative + k4.derivative);
      break;
    }
    next(r_at) = std::max(next(r_at), std::max(1.0, s(r_at)));
    const double t = static_cast<double>(step) * dt;
    RequireFinite(next, t);
    s = next;
    if (step % config.log_stride == 0 || step == log.steps) {
      log.rows.push_back(MakeRow(loop, design, s, t, a_zeta1, n, observer));
      log.rows.back().event = pending_event;
      pending_event = false;
    }
  }
  return log;
}

template <class Design>
DecayReport Replay(const Design& design, const TrajectoryLog& log,
                   bool observer, double input_offset, double rel_tol) {
  DecayReport report;
  if (log.rows.empty()) return report;
  SimConfig config;
  config.input_offset = input_offset;
  ClosedLoop<Design> loop(design, config, observer);
  const int n = log.n;
  report.tol = rel_tol * log.rows.front().v;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (const TrajectoryRow& row : log.rows) {
    Vector s(loop.size());
    for (int i = 0; i < n; ++i) s(i) = row.x[i];
    if (observer) {
      for (int i = 0; i < n - 1; ++i) s(n + i) = row.xhat[i];
    }
    s(loop.r_index()) = row.r;
    const Vector field = loop.Evaluate(s, row.a_zeta1).derivative;
    // Central difference along the (possibly corrupted) vector field.
    const double h = 1e-6 / std::max(1.0, field.norm());
    auto v_at = [&](const Vector& p) {
      return loop.Lyapunov(p, design.Zeta(p(0), row.a_zeta1).value);
    };
    const double vdot =
        (v_at(s + h * field) - v_at(s - h * field)) / (2.0 * h);
    const double excess = vdot + row.kappa * row.v - report.tol;
    ++report.checked;
    if (excess <= 0.0) ++report.passed;
    if (excess > report.worst_excess) {
      report.worst_excess = excess;
      report.worst_t = row.t;
    }
  }
  report.fraction = static_cast<double>(report.passed) / report.checked;
  return report;
}

}  // namespace

DecayReport ReplayDecay(const StateFeedbackDesign& design,
                        const TrajectoryLog& log, double input_offset,
                        double rel_tol) {
  return Replay(design, log, false, input_offset, rel_tol);
}

DecayReport ReplayDecay(const OutputFeedbackDesign& design,
                        const TrajectoryLog& log, double input_offset,
                        double rel_tol) {
  return Replay(design, log, true, input_offset, rel_tol);
}

TrajectoryLog Simulate(const StateFeedbackDesign& design,
                       const SimConfig& config) {
  if (config.mode != Mode::kStateFeedback) {
    throw ConfigError("state-feedback design needs sim.mode = sf");
  }
  const int n = design.spec().n;
  config.Validate(n);
  Vector s(n + 1);
  for (int i = 0; i < n; ++i) s(i) = config.x0[i];
  s(n) = config.r0;
  return Run(design, config, false, s);
}

TrajectoryLog Simulate(const OutputFeedbackDesign& design,
                       const SimConfig& config) {
  if (config.mode != Mode::kOutputFeedback) {
    throw ConfigError("output-feedback design needs sim.mode = of");
  }
  const int n = design.spec().n;
  config.Validate(n);
  Vector s(2 * n);
  for (int i = 0; i < n; ++i) s(i) = config.x0[i];
  const Vector xhat =
      config.xhat0_policy == EstimatePolicy::kZeroEstimate
          ? design.ZeroEstimate(config.x0[0], config.r0)
          : Eigen::Map<const Vector>(config.xhat0.data(), n - 1).eval();
  s.segment(n, n - 1) = xhat;
  s(2 * n - 1) = config.r0;
  TrajectoryLog log = Run(design, config, true, s);
  log.c = design.c();
  return log;
}

DecayReport MonitorDecay(const TrajectoryLog& log, double rel_tol) {
  DecayReport report;
  if (log.rows.empty()) return report;
  report.tol = rel_tol * log.rows.front().v;
  report.worst_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < log.rows.size(); ++k) {
    const TrajectoryRow& now = log.rows[k];
    const TrajectoryRow& next = log.rows[k + 1];
    if (next.event) continue;
    const double vdot = (next.v - now.v) / (next.t - now.t);
    const double excess = vdot + now.kappa * now.v - report.tol;
    ++report.checked;
    if (excess <= 0.0) ++report.passed;
    if (excess > report.worst_excess) {
      report.worst_excess = excess;
      report.worst_t = now.t;
    }
  }
  if (report.checked == 0) report.worst_excess = 0.0;
  report.fraction = report.checked == 0
                        ? 1.0
                        : static_cast<double>(report.passed) / report.checked;
  return report;
}

}  // namespace hgsc
