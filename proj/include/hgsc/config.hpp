#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hgsc/lyap.hpp"
#include "hgsc/model.hpp"
#include "hgsc/of.hpp"
#include "hgsc/sf.hpp"
#include "hgsc/sim.hpp"
#include "hgsc/tolerances.hpp"

namespace hgsc {

/// Text-level configuration. Expressions stay as the strings the user
/// wrote so that load → dump → load is exact.
struct Config {
  struct System {
    int n{3};
    std::vector<std::string> phi_upper;
    std::string mu0;
    std::vector<std::vector<std::string>> bounds;
    std::vector<std::string> true_phi;
    Grid grid;
    double sample_box{5.0};
    int sample_count{10000};
    bool operator==(const System&) const = default;
  };
  struct Controller {
    /// Shape of P_c, row-major; the certificate uses a_c_tilde·P_c.
    std::vector<double> p;
    /// (n-1)×(n-2) gain coefficients, row-major.
    std::vector<double> gain_coeff;
    double a_tilde{1.0};
    bool operator==(const Controller&) const = default;
  };
  struct Observer {
    std::vector<double> p;
    std::vector<double> gain_coeff;
    /// ν_o and ν̃_o in units of a_o_tilde.
    double nu{0.0};
    double nu_tilde{0.0};
    double a_tilde{1.0};
    bool operator==(const Observer&) const = default;
  };
  struct Params {
    double c1{0.1};
    double c2{1e-4};
    double c3{1e-5};
    double c_zeta1{1e-3};
    double q_a{0.02};
    double a_zeta1_init{1.0};
    int max_iterations{10000};
    bool operator==(const Params&) const = default;
  };
  struct Sim {
    Mode mode{Mode::kStateFeedback};
    double t_end{10.0};
    double dt{1e-4};
    std::vector<double> x0;
    double r0{1.0};
    EstimatePolicy xhat0_policy{EstimatePolicy::kZeroEstimate};
    std::vector<double> xhat0;
    int log_stride{1};
    double input_offset{0.0};
    bool operator==(const Sim&) const = default;
  };

  System system;
  Controller controller;
  std::optional<Observer> observer;
  Params params;
  Sim sim;
  Tolerances tolerances;

  bool operator==(const Config&) const = default;
};

/// @throws ConfigError on malformed JSON, unknown keys, missing or
/// mistyped fields.
Config ParseConfig(const std::string& text);
/// @throws Error if the file cannot be read (I/O) and ConfigError on content.
Config LoadConfig(const std::string& path);
std::string DumpConfig(const Config& config);

/// Parses and validates the system description.
SystemSpec BuildSystem(const Config& config);
/// Extracts the controller constants from (a_c_tilde·P_c, gains).
ControllerCertificate BuildController(const Config& config,
                                      const SystemSpec& spec);
/// Verifies the observer certificate against the stated constants.
ObserverCertificate BuildObserver(const Config& config, const SystemSpec& spec);

SfParams BuildSfParams(const Config& config);
OfParams BuildOfParams(const Config& config);
SimConfig BuildSimConfig(const Config& config);

std::string ModeName(Mode mode);

}  // namespace hgsc
