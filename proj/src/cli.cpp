#include "hgsc/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hgsc/config.hpp"
#include "hgsc/errors.hpp"
#include "hgsc/of.hpp"
#include "hgsc/sf.hpp"
#include "hgsc/sim.hpp"

namespace hgsc::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string x1_grid;
  bool force{false};
};

std::vector<double> ParseGridArgument(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ':');) parts.push_back(part);
  if (parts.size() != 3) {
    throw UsageError("--x1-grid expects LO:HI:N, got '" + text + "'");
  }
  double lo, hi;
  long count;
  try {
    std::size_t used = 0;
    lo = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument("lo");
    hi = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument("hi");
    count = std::stol(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument("n");
  } catch (const std::exception&) {
    throw UsageError("--x1-grid expects LO:HI:N, got '" + text + "'");
  }
  if (count < 1 || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw UsageError("--x1-grid is empty: '" + text + "'");
  }
  std::vector<double> points(count);
  for (long k = 0; k < count; ++k) {
    points[k] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
  }
  return points;
}

std::string Format(double value) {
  std::ostringstream os;
  os << std::setprecision(12) << value;
  return os.str();
}

// Assumption gate shared by every command. Prints the verified constants.
void CheckAssumptions(const SystemSpec& spec, std::ostream& out) {
  const double sigma = CheckLowerBound(spec);
  out << "sigma = " << Format(sigma) << "\n";
  const BoundCheckReport bounds =
      CheckUncertaintyBounds(spec, spec.sample_count);
  out << "uncertainty bounds: worst ratio " << Format(bounds.worst_ratio)
      << " over " << spec.sample_count << " samples\n";
  const DominanceReport dom = CheckCascadingDominance(spec);
  for (std::size_t k = 0; k < dom.rho_min.size(); ++k) {
    out << "rho_" << k + 3 << " in [" << Format(dom.rho_min[k]) << ", "
        << Format(dom.rho_max[k]) << "]\n";
  }
}

void GateAssumptions(const SystemSpec& spec, const Options& options,
                     std::ostream& err) {
  std::ostringstream sink;
  try {
    CheckAssumptions(spec, sink);
  } catch (const AssumptionError& e) {
    if (!options.force) throw;
    err << "warning: " << e.what() << " (continuing because of --force)\n";
  }
}

struct Designs {
  Config config;
  SystemSpec spec;
  std::optional<StateFeedbackDesign> sf;
  std::optional<OutputFeedbackDesign> of;
  double sigma{0.0};
};

Designs LoadDesigns(const Options& options, std::ostream& err) {
  Designs d;
  d.config = LoadConfig(options.config_path);
  d.spec = BuildSystem(d.config);
  GateAssumptions(d.spec, options, err);
  try {
    d.sigma = CheckLowerBound(d.spec);
  } catch (const AssumptionError&) {
    d.sigma = std::numeric_limits<double>::quiet_NaN();
  }
  const ControllerCertificate ctrl = BuildController(d.config, d.spec);
  if (d.config.sim.mode == Mode::kStateFeedback) {
    d.sf.emplace(d.spec, ctrl, BuildSfParams(d.config), d.config.tolerances);
  } else {
    d.of.emplace(d.spec, ctrl, BuildObserver(d.config, d.spec),
                 BuildOfParams(d.config), d.config.tolerances);
  }
  return d;
}

std::vector<double> GridOrDefault(const Options& options, const Config& config) {
  if (!options.x1_grid.empty()) return ParseGridArgument(options.x1_grid);
  const double reach = config.sim.x0.empty() ? 1.0 : std::fabs(config.sim.x0[0]);
  return ParseGridArgument("0:" + Format(reach) + ":11");
}

fs::path PrepareOutDir(const std::string& dir) {
  const fs::path path = dir.empty() ? fs::path("hgsc_out") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw IoError("cannot create output directory '" + path.string() +
                  "': " + ec.message());
  }
  return path;
}

std::ofstream OpenForWrite(const fs::path& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  return file;
}

void CloseChecked(std::ofstream& file, const fs::path& path) {
  file.close();
  if (!file) throw IoError("error while writing '" + path.string() + "'");
}

int CmdCheck(const Options& options, std::ostream& out) {
  const Config config = LoadConfig(options.config_path);
  const SystemSpec spec = BuildSystem(config);
  CheckAssumptions(spec, out);
  const ControllerCertificate ctrl = BuildController(config, spec);
  const double ac = config.controller.a_tilde;
  out << "nu_c = " << Format(ctrl.nu) << " (" << Format(ctrl.nu / ac)
      << " a_c)\n"
      << "nu_c_lower = " << Format(ctrl.nu_lower) << " ("
      << Format(ctrl.nu_lower / ac) << " a_c)\n"
      << "nu_c_upper = " << Format(ctrl.nu_upper) << " ("
      << Format(ctrl.nu_upper / ac) << " a_c)\n";
  if (config.observer) {
    const Config::Observer& o = *config.observer;
    const Matrix p = o.a_tilde * Eigen::Map<const Eigen::Matrix<
                                     double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(o.p.data(), spec.n - 1,
                                                       spec.n - 1);
    Matrix gains(spec.n - 1, spec.n - 2);
    if (static_cast<int>(o.gain_coeff.size()) != gains.size()) {
      throw ConfigError("gamma_coeff must have (n-1)(n-2) entries");
    }
    for (int i = 0; i < gains.rows(); ++i) {
      for (int j = 0; j < gains.cols(); ++j) {
        gains(i, j) = o.gain_coeff[i * gains.cols() + j];
      }
    }
    const ObserverCheck check = VerifyObserverConstants(
        spec, p, gains, o.nu * o.a_tilde, o.nu_tilde * o.a_tilde);
    const double ao = o.a_tilde;
    out << "observer max relative violation = "
        << Format(check.max_violation) << " at x1 = "
        << Format(check.witness_x1) << "\n"
        << "nu_o_lower = " << Format(check.nu_lower) << " ("
        << Format(check.nu_lower / ao) << " a_o)\n"
        << "nu_o_upper = " << Format(check.nu_upper) << " ("
        << Format(check.nu_upper / ao) << " a_o)\n"
        << "G_bar = " << Format(check.g_bar) << "\n";
    if (!check.ok) {
      throw CertificateError("observer constants do not hold on the grid");
    }
  }
  out << "check passed\n";
  return kOk;
}

int CmdFreedoms(const Options& options, std::ostream& out, std::ostream& err) {
  const Config config = LoadConfig(options.config_path);
  const std::vector<double> grid = GridOrDefault(options, config);
  const Designs d = LoadDesigns(options, err);
  const bool of = d.of.has_value();
  const double a_zeta1 = d.config.params.a_zeta1_init;

  std::ostringstream csv;
  csv << std::setprecision(12);
  csv << "x1,a,omega,zeta1,kappa" << (of ? ",c" : "") << "\n";
  for (double x1 : grid) {
    const Freedoms f = of ? d.of->Evaluate(x1, a_zeta1)
                          : d.sf->Evaluate(x1, a_zeta1);
    csv << x1 << "," << f.a << "," << f.omega << "," << f.zeta1 << ","
        << f.kappa;
    if (of) csv << "," << d.of->c();
    csv << "\n";
  }

  std::ostringstream baseline;
  if (of) {
    baseline << "conservative_a = " << Format(d.of->ConservativeA(d.sigma))
             << "\n"
             << "conservative_c = " << Format(d.of->ConservativeC()) << "\n"
             << "pencil_c = " << Format(d.of->c()) << "\n";
  } else {
    baseline << "conservative_a = " << Format(d.sf->ConservativeA(d.sigma))
             << "\n";
  }

  if (options.out_dir.empty()) {
    out << csv.str();
    err << baseline.str();
  } else {
    const fs::path dir = PrepareOutDir(options.out_dir);
    const fs::path path = dir / "freedoms.csv";
    std::ofstream file = OpenForWrite(path);
    file << csv.str();
    CloseChecked(file, path);
    out << baseline.str() << "wrote " << path.string() << "\n";
  }
  return kOk;
}

void WriteTrajectory(const TrajectoryLog& log, const fs::path& path) {
  std::ofstream file = OpenForWrite(path);
  file << std::setprecision(12);
  file << "t";
  for (int i = 1; i <= log.n; ++i) file << ",x" << i;
  if (log.mode == Mode::kOutputFeedback) {
    for (int i = 2; i <= log.n; ++i) file << ",xhat" << i;
  }
  file << ",r,u,a,omega,zeta1,kappa,V,a_zeta1,event\n";
  for (const TrajectoryRow& row : log.rows) {
    file << row.t;
    for (double v : row.x) file << "," << v;
    for (double v : row.xhat) file << "," << v;
    file << "," << row.r << "," << row.u << "," << row.a << "," << row.omega
         << "," << row.zeta1 << "," << row.kappa << "," << row.v << ","
         << row.a_zeta1 << "," << (row.event ? 1 : 0) << "\n";
  }
  CloseChecked(file, path);
}

nlohmann::json Summarize(const TrajectoryLog& log, const DecayReport& decay,
                         const Designs& d) {
  auto range = [&](auto field) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const TrajectoryRow& row : log.rows) {
      lo = std::min(lo, field(row));
      hi = std::max(hi, field(row));
    }
    return nlohmann::json::array({lo, hi});
  };
  const TrajectoryRow& last = log.rows.back();
  double x_inf = 0.0;
  for (double v : last.x) x_inf = std::max(x_inf, std::fabs(v));
  nlohmann::json s;
  s["mode"] = ModeName(log.mode);
  s["steps"] = log.steps;
  s["t_end"] = last.t;
  s["final_state"] = last.x;
  s["final_state_inf_norm"] = x_inf;
  s["final_r"] = last.r;
  s["a_range"] = range([](const TrajectoryRow& r) { return r.a; });
  s["omega_range"] = range([](const TrajectoryRow& r) { return r.omega; });
  s["r_range"] = range([](const TrajectoryRow& r) { return r.r; });
  s["u_range"] = range([](const TrajectoryRow& r) { return r.u; });
  s["event_count"] = log.event_count;
  s["final_a_zeta1"] = last.a_zeta1;
  s["decay_checked"] = decay.checked;
  s["decay_pass_fraction"] = decay.fraction;
  if (d.of) {
    s["c"] = log.c;
    s["initial_xhat"] = log.rows.front().xhat;
    const Vector eps = d.of->ScaledError(last.x, last.xhat, last.r);
    s["final_error_norm"] = eps.norm();
  }
  return s;
}

int CmdSimulate(const Options& options, std::ostream& out, std::ostream& err) {
  const fs::path dir = PrepareOutDir(options.out_dir);
  const Designs d = LoadDesigns(options, err);
  const SimConfig sim = BuildSimConfig(d.config);
  TrajectoryLog log;
  try {
    log = d.of ? Simulate(*d.of, sim) : Simulate(*d.sf, sim);
  } catch (const CertificateError& e) {
    throw SimulationError(std::string("during simulation: ") + e.what());
  }
  const DecayReport decay = MonitorDecay(log);
  WriteTrajectory(log, dir / "trajectory.csv");
  const nlohmann::json summary = Summarize(log, decay, d);
  {
    const fs::path path = dir / "summary.json";
    std::ofstream file = OpenForWrite(path);
    file << summary.dump(2) << "\n";
    CloseChecked(file, path);
  }
  {
    const fs::path path = dir / "plot_trajectory.py";
    std::ofstream file = OpenForWrite(path);
    file << PlotScript();
    CloseChecked(file, path);
  }
  out << summary.dump(2) << "\n";
  return kOk;
}

int CmdCompare(const Options& options, std::ostream& out, std::ostream& err) {
  const Config config = LoadConfig(options.config_path);
  const std::vector<double> grid = GridOrDefault(options, config);
  const Designs d = LoadDesigns(options, err);
  const double a_zeta1 = d.config.params.a_zeta1_init;
  double a0 = 0.0;
  double a_lo = std::numeric_limits<double>::infinity(), a_hi = -a_lo;
  double w_lo = a_lo, w_hi = -a_lo;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Freedoms f = d.of ? d.of->Evaluate(grid[k], a_zeta1, false)
                            : d.sf->Evaluate(grid[k], a_zeta1, false);
    if (k == 0) a0 = f.a;
    a_lo = std::min(a_lo, f.a);
    a_hi = std::max(a_hi, f.a);
    w_lo = std::min(w_lo, f.omega);
    w_hi = std::max(w_hi, f.omega);
  }
  const double a_cons =
      d.of ? d.of->ConservativeA(d.sigma) : d.sf->ConservativeA(d.sigma);
  out << std::setprecision(6);
  out << "mode " << ModeName(config.sim.mode) << ", x1 grid [" << grid.front()
      << ", " << grid.back() << "] with " << grid.size() << " points\n";
  out << "quantity  pencil            conservative  ratio\n";
  out << "a(x1_0)   " << std::setw(16) << std::left << a0 << "  "
      << std::setw(12) << a_cons << "  " << a0 / a_cons << "\n";
  out << "a range   [" << a_lo << ", " << a_hi << "]\n";
  out << "omega     [" << w_lo << ", " << w_hi << "]\n";
  if (d.of) {
    const double c = d.of->c();
    const double c_cons = d.of->ConservativeC();
    out << "c         " << std::setw(16) << std::left << c << "  "
        << std::setw(12) << c_cons << "  " << c / c_cons << "\n";
  }
  return kOk;
}

}  // namespace

std::string PlotScript() {
  return R"PY(#!/usr/bin/env python3
"""Plot trajectory.csv written by `hgsc simulate` (same directory)."""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "trajectory.csv"), newline="") as f:
    rows = list(csv.DictReader(f))
if not rows:
    sys.exit("trajectory.csv has no rows")

cols = {k: [float(r[k]) for r in rows] for k in rows[0]}
t = cols["t"]
states = sorted((k for k in cols if k.startswith("x") and not k.startswith("xhat")),
                key=lambda k: int(k[1:]))
estimates = sorted((k for k in cols if k.startswith("xhat")), key=lambda k: int(k[4:]))

panels = 3 if estimates else 2
fig, axes = plt.subplots(panels + 1, 1, figsize=(7, 2.4 * (panels + 1)), sharex=True)
for k in states:
    axes[0].plot(t, cols[k], label=k)
axes[0].set_ylabel("state")
axes[0].legend(loc="upper right")
row = 1
if estimates:
    for k in estimates:
        axes[row].plot(t, cols[k], label=k)
    axes[row].set_ylabel("observer")
    axes[row].legend(loc="upper right")
    row += 1
axes[row].plot(t, cols["u"])
axes[row].set_ylabel("u")
axes[row + 1].plot(t, cols["r"])
axes[row + 1].set_ylabel("r")
axes[-1].set_xlabel("t")
fig.tight_layout()
out = os.path.join(here, "trajectory.png")
fig.savefig(out, dpi=120)
print("wrote", out)
)PY";
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Dynamic high-gain scaling controller designer and simulator",
               "hgsc"};
  app.require_subcommand(1);
  Options options;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", options.config_path, "Configuration file (JSON)")
        ->required();
    cmd->add_flag("--force", options.force,
                  "Continue past failed assumption checks");
  };
  CLI::App* check = app.add_subcommand("check", "Verify assumptions and certificates");
  add_common(check);
  CLI::App* freedoms =
      app.add_subcommand("freedoms", "Tabulate design freedoms over an x1 grid");
  add_common(freedoms);
  freedoms->add_option("--x1-grid", options.x1_grid, "LO:HI:N");
  freedoms->add_option("--out", options.out_dir, "Write freedoms.csv here");
  CLI::App* simulate = app.add_subcommand("simulate", "Run the closed loop");
  add_common(simulate);
  simulate->add_option("--out", options.out_dir, "Output directory");
  CLI::App* compare =
      app.add_subcommand("compare", "Pencil values against the conservative baselines");
  add_common(compare);
  compare->add_option("--x1-grid", options.x1_grid, "LO:HI:N");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    if (check->parsed()) return CmdCheck(options, out);
    if (freedoms->parsed()) return CmdFreedoms(options, out, err);
    if (simulate->parsed()) return CmdSimulate(options, out, err);
    if (compare->parsed()) return CmdCompare(options, out, err);
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const AssumptionError& e) {
    err << "assumption failed: " << e.what() << "\n";
    return kAssumptionFailure;
  } catch (const CertificateError& e) {
    err << "certificate failed: " << e.what() << "\n";
    return kCertificateFailure;
  } catch (const SimulationError& e) {
    err << "simulation failed: " << e.what() << "\n";
    return kSimulationFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSimulationFailure;
  }
}

}  // namespace hgsc::cli
