#include "hgsc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hgsc/errors.hpp"

namespace hgsc {

using nlohmann::json;

namespace {

void RejectUnknownKeys(const json& object, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : object.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

template <class T>
T Get(const json& object, const std::string& key, const std::string& where) {
  if (!object.contains(key)) {
    throw ConfigError("missing key '" + key + "' in " + where);
  }
  try {
    return object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
  }
}

template <class T>
void GetOptional(const json& object, const std::string& key,
                 const std::string& where, T* out) {
  if (object.contains(key)) *out = Get<T>(object, key, where);
}

Mode ParseMode(const std::string& text) {
  if (text == "sf") return Mode::kStateFeedback;
  if (text == "of") return Mode::kOutputFeedback;
  throw ConfigError("sim.mode must be 'sf' or 'of', got '" + text + "'");
}

EstimatePolicy ParsePolicy(const std::string& text) {
  if (text == "explicit") return EstimatePolicy::kExplicit;
  if (text == "zero-estimate") return EstimatePolicy::kZeroEstimate;
  throw ConfigError("sim.xhat0_policy must be 'explicit' or 'zero-estimate'");
}

std::string PolicyName(EstimatePolicy policy) {
  return policy == EstimatePolicy::kExplicit ? "explicit" : "zero-estimate";
}

Matrix SquareFromRowMajor(const std::vector<double>& values, int size,
                          const std::string& what) {
  if (static_cast<int>(values.size()) != size * size) {
    throw ConfigError(what + " must have " + std::to_string(size * size) +
                      " entries");
  }
  Matrix out(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) out(i, j) = values[i * size + j];
  }
  return out;
}

Matrix GainsFromRowMajor(const std::vector<double>& values, int n,
                         const std::string& what) {
  const int rows = n - 1, cols = n - 2;
  if (static_cast<int>(values.size()) != rows * cols) {
    throw ConfigError(what + " must have (n-1)(n-2) = " +
                      std::to_string(rows * cols) + " entries");
  }
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = values[i * cols + j];
  }
  return out;
}

Expr ParseField(const std::string& text, int n, const std::string& what) {
  try {
    return Parse(text, n);
  } catch (const ParseError& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::string ModeName(Mode mode) {
  return mode == Mode::kStateFeedback ? "sf" : "of";
}

Config ParseConfig(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RejectUnknownKeys(root,
                    {"system", "controller_cert", "observer_cert", "params",
                     "sim", "tolerances"},
                    "config");
  Config config;

  const json& sys = Get<json>(root, "system", "config");
  RejectUnknownKeys(sys,
                    {"n", "phi_upper", "mu0", "bounds", "true_phi", "grid",
                     "sample_box", "sample_count"},
                    "system");
  config.system.n = Get<int>(sys, "n", "system");
  config.system.phi_upper =
      Get<std::vector<std::string>>(sys, "phi_upper", "system");
  config.system.mu0 = Get<std::string>(sys, "mu0", "system");
  config.system.bounds =
      Get<std::vector<std::vector<std::string>>>(sys, "bounds", "system");
  GetOptional(sys, "true_phi", "system", &config.system.true_phi);
  GetOptional(sys, "sample_box", "system", &config.system.sample_box);
  GetOptional(sys, "sample_count", "system", &config.system.sample_count);
  if (sys.contains("grid")) {
    const json& grid = sys.at("grid");
    RejectUnknownKeys(grid, {"lo", "hi", "count"}, "system.grid");
    GetOptional(grid, "lo", "system.grid", &config.system.grid.lo);
    GetOptional(grid, "hi", "system.grid", &config.system.grid.hi);
    GetOptional(grid, "count", "system.grid", &config.system.grid.count);
  }

  const json& ctrl = Get<json>(root, "controller_cert", "config");
  RejectUnknownKeys(ctrl, {"P_c", "kappa_coeff", "a_c_tilde"},
                    "controller_cert");
  config.controller.p = Get<std::vector<double>>(ctrl, "P_c", "controller_cert");
  config.controller.gain_coeff =
      Get<std::vector<double>>(ctrl, "kappa_coeff", "controller_cert");
  GetOptional(ctrl, "a_c_tilde", "controller_cert", &config.controller.a_tilde);

  if (root.contains("observer_cert")) {
    const json& obs = root.at("observer_cert");
    RejectUnknownKeys(
        obs, {"P_o", "gamma_coeff", "nu_o", "nu_o_tilde", "a_o_tilde"},
        "observer_cert");
    Config::Observer o;
    o.p = Get<std::vector<double>>(obs, "P_o", "observer_cert");
    o.gain_coeff = Get<std::vector<double>>(obs, "gamma_coeff", "observer_cert");
    o.nu = Get<double>(obs, "nu_o", "observer_cert");
    o.nu_tilde = Get<double>(obs, "nu_o_tilde", "observer_cert");
    GetOptional(obs, "a_o_tilde", "observer_cert", &o.a_tilde);
    config.observer = o;
  }

  if (root.contains("params")) {
    const json& p = root.at("params");
    RejectUnknownKeys(p,
                      {"c1", "c2", "c3", "c_zeta1", "q_a", "a_zeta1_init",
                       "max_iterations"},
                      "params");
    GetOptional(p, "c1", "params", &config.params.c1);
    GetOptional(p, "c2", "params", &config.params.c2);
    GetOptional(p, "c3", "params", &config.params.c3);
    GetOptional(p, "c_zeta1", "params", &config.params.c_zeta1);
    GetOptional(p, "q_a", "params", &config.params.q_a);
    GetOptional(p, "a_zeta1_init", "params", &config.params.a_zeta1_init);
    GetOptional(p, "max_iterations", "params", &config.params.max_iterations);
  }

  const json& sim = Get<json>(root, "sim", "config");
  RejectUnknownKeys(sim,
                    {"mode", "t_end", "dt", "x0", "r0", "xhat0_policy", "xhat0",
                     "log_stride", "input_offset"},
                    "sim");
  config.sim.mode = ParseMode(Get<std::string>(sim, "mode", "sim"));
  GetOptional(sim, "t_end", "sim", &config.sim.t_end);
  GetOptional(sim, "dt", "sim", &config.sim.dt);
  config.sim.x0 = Get<std::vector<double>>(sim, "x0", "sim");
  GetOptional(sim, "r0", "sim", &config.sim.r0);
  if (sim.contains("xhat0_policy")) {
    config.sim.xhat0_policy =
        ParsePolicy(Get<std::string>(sim, "xhat0_policy", "sim"));
  }
  GetOptional(sim, "xhat0", "sim", &config.sim.xhat0);
  GetOptional(sim, "log_stride", "sim", &config.sim.log_stride);
  GetOptional(sim, "input_offset", "sim", &config.sim.input_offset);

  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    RejectUnknownKeys(t, {"psd_tol", "rank_tol", "quad_tol"}, "tolerances");
    GetOptional(t, "psd_tol", "tolerances", &config.tolerances.psd_rel);
    GetOptional(t, "rank_tol", "tolerances", &config.tolerances.rank_tol);
    GetOptional(t, "quad_tol", "tolerances", &config.tolerances.quad_tol);
  }

  if (config.sim.mode == Mode::kOutputFeedback && !config.observer) {
    throw ConfigError("sim.mode 'of' requires an observer_cert section");
  }
  return config;
}

Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

std::string DumpConfig(const Config& config) {
  json root;
  const Config::System& s = config.system;
  root["system"] = {{"n", s.n},
                    {"phi_upper", s.phi_upper},
                    {"mu0", s.mu0},
                    {"bounds", s.bounds},
                    {"true_phi", s.true_phi},
                    {"grid", {{"lo", s.grid.lo}, {"hi", s.grid.hi},
                              {"count", s.grid.count}}},
                    {"sample_box", s.sample_box},
                    {"sample_count", s.sample_count}};
  root["controller_cert"] = {{"P_c", config.controller.p},
                             {"kappa_coeff", config.controller.gain_coeff},
                             {"a_c_tilde", config.controller.a_tilde}};
  if (config.observer) {
    const Config::Observer& o = *config.observer;
    root["observer_cert"] = {{"P_o", o.p},
                             {"gamma_coeff", o.gain_coeff},
                             {"nu_o", o.nu},
                             {"nu_o_tilde", o.nu_tilde},
                             {"a_o_tilde", o.a_tilde}};
  }
  const Config::Params& p = config.params;
  root["params"] = {{"c1", p.c1},           {"c2", p.c2},
                    {"c3", p.c3},           {"c_zeta1", p.c_zeta1},
                    {"q_a", p.q_a},         {"a_zeta1_init", p.a_zeta1_init},
                    {"max_iterations", p.max_iterations}};
  const Config::Sim& m = config.sim;
  root["sim"] = {{"mode", ModeName(m.mode)},
                 {"t_end", m.t_end},
                 {"dt", m.dt},
                 {"x0", m.x0},
                 {"r0", m.r0},
                 {"xhat0_policy", PolicyName(m.xhat0_policy)},
                 {"xhat0", m.xhat0},
                 {"log_stride", m.log_stride},
                 {"input_offset", m.input_offset}};
  root["tolerances"] = {{"psd_tol", config.tolerances.psd_rel},
                        {"rank_tol", config.tolerances.rank_tol},
                        {"quad_tol", config.tolerances.quad_tol}};
  return root.dump(2) + "\n";
}

SystemSpec BuildSystem(const Config& config) {
  const Config::System& s = config.system;
  SystemSpec spec;
  spec.n = s.n;
  if (s.n < 3) throw ConfigError("system.n must be at least 3");
  for (std::size_t i = 0; i < s.phi_upper.size(); ++i) {
    spec.upper.push_back(ParseField(s.phi_upper[i], s.n,
                                    "system.phi_upper[" + std::to_string(i) + "]"));
  }
  spec.mu0 = ParseField(s.mu0, s.n, "system.mu0");
  for (std::size_t i = 0; i < s.bounds.size(); ++i) {
    std::vector<Expr> row;
    for (std::size_t j = 0; j < s.bounds[i].size(); ++j) {
      row.push_back(ParseField(s.bounds[i][j], s.n,
                               "system.bounds[" + std::to_string(i) + "][" +
                                   std::to_string(j) + "]"));
    }
    spec.bound.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < s.true_phi.size(); ++i) {
    spec.true_phi.push_back(ParseField(
        s.true_phi[i], s.n, "system.true_phi[" + std::to_string(i) + "]"));
  }
  spec.grid = s.grid;
  spec.sample_box = s.sample_box;
  spec.sample_count = s.sample_count;
  spec.Validate();
  return spec;
}

ControllerCertificate BuildController(const Config& config,
                                      const SystemSpec& spec) {
  const Config::Controller& c = config.controller;
  if (!(c.a_tilde > 0.0)) throw ConfigError("a_c_tilde must be positive");
  const Matrix p = c.a_tilde * SquareFromRowMajor(c.p, spec.n - 1, "P_c");
  return ExtractControllerConstants(
      spec, p, GainsFromRowMajor(c.gain_coeff, spec.n, "kappa_coeff"));
}

ObserverCertificate BuildObserver(const Config& config, const SystemSpec& spec) {
  if (!config.observer) throw ConfigError("config has no observer_cert");
  const Config::Observer& o = *config.observer;
  if (!(o.a_tilde > 0.0)) throw ConfigError("a_o_tilde must be positive");
  const Matrix p = o.a_tilde * SquareFromRowMajor(o.p, spec.n - 1, "P_o");
  return MakeObserverCertificate(
      spec, p, GainsFromRowMajor(o.gain_coeff, spec.n, "gamma_coeff"),
      o.nu * o.a_tilde, o.nu_tilde * o.a_tilde);
}

SfParams BuildSfParams(const Config& config) {
  const Config::Params& p = config.params;
  SfParams out{p.c1, p.c2, p.c_zeta1, p.q_a, p.a_zeta1_init, p.max_iterations};
  out.Validate();
  return out;
}

OfParams BuildOfParams(const Config& config) {
  const Config::Params& p = config.params;
  OfParams out{p.c1,  p.c2,           p.c3,
               p.c_zeta1, p.q_a, p.a_zeta1_init, p.max_iterations};
  out.Validate();
  return out;
}

SimConfig BuildSimConfig(const Config& config) {
  const Config::Sim& s = config.sim;
  SimConfig out;
  out.mode = s.mode;
  out.t_end = s.t_end;
  out.dt = s.dt;
  out.x0 = s.x0;
  out.r0 = s.r0;
  out.xhat0_policy = s.xhat0_policy;
  out.xhat0 = s.xhat0;
  out.log_stride = s.log_stride;
  out.input_offset = s.input_offset;
  out.Validate(config.system.n);
  return out;
}

}  // namespace hgsc
