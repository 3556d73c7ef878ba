#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hgsc::cli {

enum ExitCode : int {
  kOk = 0,
  kAssumptionFailure = 2,
  kCertificateFailure = 3,
  kSimulationFailure = 4,
  kUsage = 64,
  kIoFailure = 74,
};

/// Runs `hgsc <command> ...` with argv[0] being the program name. Normal
/// output goes to `out`, diagnostics to `err`.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

/// Standalone plotting script that reads trajectory.csv from its own
/// directory.
std::string PlotScript();

}  // namespace hgsc::cli
