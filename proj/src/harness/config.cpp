#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mhe/errors.hpp"
#include "mhe/harness.hpp"
#include "util/format.hpp"

namespace mhe {

using util::format_number;

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError("config: '" + key + "' expects a number, got '" + text + "'");
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty())
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError("config: '" + key + "' expects true or false, got '" + text + "'");
}

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

void validate(const ExperimentConfig& c) {
  if (c.T < 1) throw ConfigError("config: T must be positive");
  if (c.K < 1 || c.K_min < 1 || c.K_min > c.K_max) throw ConfigError("config: need 1 <= K_min <= K_max and K >= 1");
  if (!(c.A >= 1.0)) throw ConfigError("config: A must be >= 1");
  if (c.seeds < 1) throw ConfigError("config: seeds must be positive");
  if (c.scenarios.empty()) throw ConfigError("config: no scenarios");
  for (const auto& s : c.scenarios) {
    try {
      parse_scenario(s, c.T);
    } catch (const ParseError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (!(c.grid.r_min > 0.0 && c.grid.r_max > c.grid.r_min && c.grid.per_decade > 0))
    throw ConfigError("config: invalid grid");
  if (c.cost != "default" && c.cost != "explicit") throw ConfigError("config: cost.derivation must be default or explicit");
  if (c.cost == "explicit" && (c.beta_hat.empty() || c.gamma_hat.empty() || c.delta_hat.empty()))
    throw ConfigError("config: explicit cost needs beta_hat, gamma_hat and delta_hat");
}

}  // namespace

const char* to_string(Verb verb) {
  switch (verb) {
    case Verb::Analyze:
      return "analyze";
    case Verb::Run:
      return "run";
    case Verb::Sweep:
      return "sweep";
    case Verb::Probe:
      return "probe";
  }
  return "?";
}

Verb parse_verb(const std::string& text) {
  if (text == "analyze") return Verb::Analyze;
  if (text == "run") return Verb::Run;
  if (text == "sweep") return Verb::Sweep;
  if (text == "probe") return Verb::Probe;
  throw ConfigError("unknown verb '" + text + "'");
}

std::string ExperimentConfig::certificate_id() const {
  return certificate.empty() ? plant + "_" + mhe::to_string(mode) : certificate;
}

void set_config_value(ExperimentConfig& c, const std::string& dotted, const std::string& raw) {
  const std::string v = trim(raw);
  const auto& k = dotted;
  auto size = [&] { return static_cast<std::size_t>(to_unsigned(k, v)); };
  if (k == "experiment.plant") c.plant = v;
  else if (k == "experiment.certificate") c.certificate = v;
  else if (k == "experiment.mode") {
    try {
      c.mode = parse_plus_mode(v);
    } catch (const Error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (k == "experiment.A") c.A = to_double(k, v);
  else if (k == "experiment.estimator") {
    if (v == "fie") c.estimator = ExperimentConfig::Estimator::FIE;
    else if (v == "mhe") c.estimator = ExperimentConfig::Estimator::MHE;
    else throw ConfigError("config: experiment.estimator must be fie or mhe");
  } else if (k == "experiment.K") c.K = size();
  else if (k == "experiment.K_min") c.K_min = size();
  else if (k == "experiment.K_max") c.K_max = size();
  else if (k == "experiment.scenarios") c.scenarios = split_ws(v);
  else if (k == "experiment.T") c.T = size();
  else if (k == "experiment.T_max") c.T_max = size();
  else if (k == "experiment.seeds") c.seeds = size();
  else if (k == "experiment.seed") c.seed = to_unsigned(k, v);
  else if (k == "experiment.x0_range") c.x0_range = to_double(k, v);
  else if (k == "experiment.prior_offset") c.prior_offset = to_double(k, v);
  else if (k == "experiment.tol_cert") c.tol_cert = to_double(k, v);
  else if (k == "experiment.input_amplitude") c.input_amplitude = to_double(k, v);
  else if (k == "cost.derivation") c.cost = v;
  else if (k == "cost.beta_hat") c.beta_hat = v;
  else if (k == "cost.gamma_hat") c.gamma_hat = v;
  else if (k == "cost.delta_hat") c.delta_hat = v;
  else if (k == "grid.r_min") c.grid.r_min = to_double(k, v);
  else if (k == "grid.r_max") c.grid.r_max = to_double(k, v);
  else if (k == "grid.per_decade") c.grid.per_decade = static_cast<int>(size());
  else if (k == "grid.s_max") c.s_max = static_cast<std::int64_t>(size());
  else if (k == "solver.method") {
    try {
      c.solver.method = parse_solver_method(v);
    } catch (const Error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  } else if (k == "solver.multistart") c.solver.multistart = static_cast<int>(size());
  else if (k == "solver.max_iterations") c.solver.max_iterations = static_cast<int>(size());
  else if (k == "solver.penalty_initial") c.solver.penalty_initial = to_double(k, v);
  else if (k == "solver.penalty_growth") c.solver.penalty_growth = to_double(k, v);
  else if (k == "solver.penalty_stages") c.solver.penalty_stages = static_cast<int>(size());
  else if (k == "solver.tol_objective") c.solver.tol_objective = to_double(k, v);
  else if (k == "solver.tol_dyn") c.solver.tol_dyn = to_double(k, v);
  else if (k == "solver.polish_max_dim") c.solver.polish_max_dim = static_cast<int>(size());
  else if (k == "solver.seed") c.solver.seed = to_unsigned(k, v);
  else if (k == "falsification.pairs") c.falsification_pairs = size();
  else if (k == "probe.time") c.probe_time = size();
  else if (k == "probe.magnitude") c.probe_magnitude = to_double(k, v);
  else if (k == "output.plots") c.plots = to_bool(k, v);
  else throw ConfigError("config: unknown key '" + k + "'");
}

ExperimentConfig parse_config(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) set_config_value(c, section + "." + key, value.data());
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream os;
  std::string scen;
  for (const auto& s : c.scenarios) scen += (scen.empty() ? "" : " ") + s;
  os << "[experiment]\n"
     << "plant = " << c.plant << "\n"
     << "certificate = " << c.certificate_id() << "\n"
     << "mode = " << mhe::to_string(c.mode) << "\n"
     << "A = " << format_number(c.A) << "\n"
     << "estimator = " << (c.estimator == ExperimentConfig::Estimator::FIE ? "fie" : "mhe") << "\n"
     << "K = " << c.K << "\n"
     << "K_min = " << c.K_min << "\n"
     << "K_max = " << c.K_max << "\n"
     << "scenarios = " << scen << "\n"
     << "T = " << c.T << "\n"
     << "T_max = " << c.T_max << "\n"
     << "seeds = " << c.seeds << "\n"
     << "seed = " << c.seed << "\n"
     << "x0_range = " << format_number(c.x0_range) << "\n"
     << "prior_offset = " << format_number(c.prior_offset) << "\n"
     << "tol_cert = " << format_number(c.tol_cert) << "\n"
     << "input_amplitude = " << format_number(c.input_amplitude) << "\n\n"
     << "[cost]\n"
     << "derivation = " << c.cost << "\n";
  if (c.cost == "explicit")
    os << "beta_hat = " << c.beta_hat << "\n"
       << "gamma_hat = " << c.gamma_hat << "\n"
       << "delta_hat = " << c.delta_hat << "\n";
  os << "\n[grid]\n"
     << "r_min = " << format_number(c.grid.r_min) << "\n"
     << "r_max = " << format_number(c.grid.r_max) << "\n"
     << "per_decade = " << c.grid.per_decade << "\n"
     << "s_max = " << c.s_max << "\n\n"
     << "[solver]\n"
     << "method = " << to_string(c.solver.method) << "\n"
     << "multistart = " << c.solver.multistart << "\n"
     << "max_iterations = " << c.solver.max_iterations << "\n"
     << "penalty_initial = " << format_number(c.solver.penalty_initial) << "\n"
     << "penalty_growth = " << format_number(c.solver.penalty_growth) << "\n"
     << "penalty_stages = " << c.solver.penalty_stages << "\n"
     << "tol_objective = " << format_number(c.solver.tol_objective) << "\n"
     << "tol_dyn = " << format_number(c.solver.tol_dyn) << "\n"
     << "polish_max_dim = " << c.solver.polish_max_dim << "\n"
     << "seed = " << c.solver.seed << "\n\n"
     << "[falsification]\n"
     << "pairs = " << c.falsification_pairs << "\n\n"
     << "[probe]\n"
     << "time = " << c.probe_time << "\n"
     << "magnitude = " << format_number(c.probe_magnitude) << "\n\n"
     << "[output]\n"
     << "plots = " << (c.plots ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace mhe
