#include "rlk/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rlk/error.hpp"

namespace rlk {

using nlohmann::json;

namespace {

json defaults_json(const RunConfig& c) {
  json j;
  j["grid"] = {{"N", c.grid.N}, {"p_max", c.grid.p_max}, {"Nx", c.grid.Nx}, {"L", c.grid.L},
               {"stencil", c.grid.stencil}};
  j["background"] = {{"n", c.background.n}, {"u", c.background.u}, {"T", c.background.T},
                     {"amplitude", c.background.amplitude}};
  j["initial"] = {{"T", c.initial.T}, {"u", c.initial.u}, {"phi_amplitude", c.initial.phi_amplitude},
                  {"perturbation", c.initial.perturbation}};
  j["physics"] = {{"eps", c.physics.eps}, {"eps_list", c.physics.eps_list}, {"nbar", c.physics.nbar}, {"k", c.physics.k}};
  j["solver"] = {{"kinetic_mode", c.solver.kinetic_mode}, {"dt", c.solver.dt},
                 {"t_end", c.solver.t_end}, {"steps", c.solver.steps},
                 {"snapshot_every", c.solver.snapshot_every}, {"report_every", c.solver.report_every},
                 {"limiter", c.solver.limiter}, {"closure", c.solver.closure}, {"kernel_cache", c.solver.kernel_cache},
                 {"positivity_tol", c.solver.positivity_tol}};
  j["weights"] = {{"Nc", c.weights.Nc}, {"Tc", c.weights.Tc}};
  j["expand"] = {{"slices", c.expand.slices}, {"corrupt", c.expand.corrupt}};
  j["report"] = {{"source", c.report.source}};
  j["out"] = c.out;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  return j;
}

bool compatible(const json& ref, const json& v) {
  if (ref.is_number()) return v.is_number();
  if (ref.is_string()) return v.is_string();
  if (ref.is_array()) return v.is_array();
  if (ref.is_object()) return v.is_object();
  if (ref.is_boolean()) return v.is_boolean();
  return true;
}

// user values over defaults, every key must already exist in `base`
void merge(json& base, const json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError(prefix.empty() ? "config" : prefix, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string name = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError(name, "unknown key");
    json& slot = base[it.key()];
    if (!compatible(slot, it.value())) throw ConfigError(name, "wrong type");
    if (slot.is_object())
      merge(slot, it.value(), name);
    else
      slot = it.value();
  }
}

void apply_override(json& base, const std::string& ov) {
  auto eq = ov.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must look like key.path=value");
  std::string path = ov.substr(0, eq), text = ov.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &base;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) throw ConfigError(path, "unknown key");
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!compatible(*node, value)) throw ConfigError(path, "wrong type");
  *node = value;
}

template <class T>
T get(const json& j, const char* section, const char* key) {
  const json& v = section ? j.at(section).at(key) : j.at(key);
  std::string name = section ? std::string(section) + "." + key : std::string(key);
  if constexpr (std::is_integral_v<T>) {
    double d = v.get<double>();
    if (std::floor(d) != d) throw ConfigError(name, "must be an integer");
    if (std::is_unsigned_v<T> && d < 0) throw ConfigError(name, "must be nonnegative");
    return static_cast<T>(d);
  } else {
    return v.get<T>();
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.grid.N = get<std::size_t>(j, "grid", "N");
  c.grid.p_max = get<double>(j, "grid", "p_max");
  c.grid.Nx = get<std::size_t>(j, "grid", "Nx");
  c.grid.L = get<double>(j, "grid", "L");
  c.grid.stencil = get<std::string>(j, "grid", "stencil");
  c.background.n = get<double>(j, "background", "n");
  const json& u = j.at("background").at("u");
  if (u.size() != 3) throw ConfigError("background.u", "needs three components");
  for (int d = 0; d < 3; ++d) {
    if (!u[d].is_number()) throw ConfigError("background.u", "components must be numbers");
    c.background.u[d] = u[d].get<double>();
  }
  c.background.T = get<double>(j, "background", "T");
  c.background.amplitude = get<double>(j, "background", "amplitude");
  c.initial.T = get<double>(j, "initial", "T");
  c.initial.u = get<double>(j, "initial", "u");
  c.initial.phi_amplitude = get<double>(j, "initial", "phi_amplitude");
  c.initial.perturbation = get<double>(j, "initial", "perturbation");
  c.physics.eps = get<double>(j, "physics", "eps");
  c.physics.eps_list.clear();
  for (const auto& e : j.at("physics").at("eps_list")) {
    if (!e.is_number()) throw ConfigError("physics.eps_list", "entries must be numbers");
    c.physics.eps_list.push_back(e.get<double>());
  }
  c.physics.nbar = get<double>(j, "physics", "nbar");
  c.physics.k = get<int>(j, "physics", "k");
  c.solver.kinetic_mode = get<std::string>(j, "solver", "kinetic_mode");
  c.solver.dt = get<double>(j, "solver", "dt");
  c.solver.t_end = get<double>(j, "solver", "t_end");
  c.solver.steps = get<long>(j, "solver", "steps");
  c.solver.snapshot_every = get<long>(j, "solver", "snapshot_every");
  c.solver.report_every = get<long>(j, "solver", "report_every");
  c.solver.limiter = get<std::string>(j, "solver", "limiter");
  c.solver.closure = get<std::string>(j, "solver", "closure");
  c.solver.kernel_cache = get<std::string>(j, "solver", "kernel_cache");
  c.solver.positivity_tol = get<double>(j, "solver", "positivity_tol");
  c.weights.Nc = get<int>(j, "weights", "Nc");
  c.weights.Tc = get<double>(j, "weights", "Tc");
  c.expand.slices = get<std::size_t>(j, "expand", "slices");
  c.expand.corrupt = get<double>(j, "expand", "corrupt");
  c.report.source = get<std::string>(j, "report", "source");
  c.out = get<std::string>(j, nullptr, "out");
  c.seed = get<std::uint64_t>(j, nullptr, "seed");
  c.workers = get<int>(j, nullptr, "workers");
  return c;
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError(field, msg);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate(const RunConfig& c) {
  require(c.grid.N >= 4 && c.grid.N <= 64, "grid.N", "must be in [4, 64]");
  require(finite(c.grid.p_max) && c.grid.p_max >= 0.0, "grid.p_max", "must be nonnegative (0 selects the default)");
  require(c.grid.Nx >= 4 && c.grid.Nx <= 4096, "grid.Nx", "must be in [4, 4096]");
  require(finite(c.grid.L) && c.grid.L > 0.0, "grid.L", "must be positive");
  require(c.grid.stencil == "one_sided" || c.grid.stencil == "centered", "grid.stencil",
          "must be one_sided or centered");
  require(finite(c.background.n) && c.background.n > 0.0, "background.n", "must be positive");
  for (double v : c.background.u) require(finite(v), "background.u", "must be finite");
  require(finite(c.background.T) && c.background.T > 0.0, "background.T", "must be positive");
  require(finite(c.background.amplitude) && std::abs(c.background.amplitude) < 0.5, "background.amplitude",
          "must satisfy |amplitude| < 0.5");
  require(finite(c.initial.T) && c.initial.T > 0.0, "initial.T", "must be positive");
  require(finite(c.initial.u), "initial.u", "must be finite");
  require(finite(c.initial.phi_amplitude) && std::abs(c.initial.phi_amplitude) <= 1.0, "initial.phi_amplitude",
          "must satisfy |phi_amplitude| <= 1");
  require(finite(c.initial.perturbation) && std::abs(c.initial.perturbation) < 1.0, "initial.perturbation",
          "must satisfy |perturbation| < 1");
  require(finite(c.physics.eps) && c.physics.eps > 0.0, "physics.eps", "must be positive");
  require(!c.physics.eps_list.empty(), "physics.eps_list", "must not be empty");
  for (double e : c.physics.eps_list)
    require(finite(e) && e > 0.0 && e <= 1.0, "physics.eps_list", "entries must be in (0, 1]");
  require(finite(c.physics.nbar) && c.physics.nbar > 0.0, "physics.nbar", "must be positive");
  const auto& m = c.solver.kinetic_mode;
  require(m == "homogeneous" || m == "rlan" || m == "vlasov_ampere", "solver.kinetic_mode",
          "must be homogeneous, rlan or vlasov_ampere");
  require(finite(c.solver.dt) && c.solver.dt >= 0.0, "solver.dt", "must be nonnegative (0 selects the bound)");
  require(finite(c.solver.t_end) && c.solver.t_end > 0.0, "solver.t_end", "must be positive");
  require(c.solver.steps > 0, "solver.steps", "must be positive");
  require(c.solver.snapshot_every >= 0, "solver.snapshot_every", "must be nonnegative");
  require(c.solver.report_every > 0, "solver.report_every", "must be positive");
  const auto& l = c.solver.limiter;
  require(l == "minmod" || l == "mc" || l == "vanleer" || l == "none", "solver.limiter",
          "must be minmod, mc, vanleer or none");
  require(c.physics.k >= 1 && c.physics.k <= 10, "physics.k", "must be in [1, 10]");
  require(c.solver.closure == "continuum" || c.solver.closure == "grid", "solver.closure",
          "must be continuum or grid");
  const auto& k = c.solver.kernel_cache;
  require(k == "auto" || k == "on" || k == "off", "solver.kernel_cache", "must be auto, on or off");
  require(finite(c.solver.positivity_tol) && c.solver.positivity_tol >= 0.0, "solver.positivity_tol",
          "must be nonnegative");
  require(c.weights.Nc >= 3, "weights.Nc", "must be at least 3");
  require(finite(c.weights.Tc) && c.weights.Tc >= 0.0, "weights.Tc", "must be nonnegative (0 selects the default)");
  require(c.expand.slices >= 1, "expand.slices", "must be positive");
  require(finite(c.expand.corrupt) && c.expand.corrupt > 0.0, "expand.corrupt", "must be positive");
  require(!c.out.empty(), "out", "must not be empty");
  require(c.workers >= 0 && c.workers <= 1024, "workers", "must be in [0, 1024]");
}

RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
  json base = defaults_json(RunConfig{});
  bool blank = json_text.find_first_not_of(" \t\r\n") == std::string::npos;
  if (!blank) {
    json user;
    try {
      user = json::parse(json_text);
    } catch (const json::parse_error& e) {
      throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    merge(base, user, "");
  }
  for (const auto& ov : overrides) apply_override(base, ov);
  RunConfig c;
  try {
    c = from_json(base);
  } catch (const json::exception& e) {
    throw ConfigError("config", e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string to_json(const RunConfig& c) { return defaults_json(c).dump(2) + "\n"; }

}  // namespace rlk
