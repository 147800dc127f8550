#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rlk {

// Every field has a default; a config file only lists what it changes.
// Unknown keys are rejected so that typos do not silently fall back.
struct RunConfig {
  struct Grid {
    std::size_t N = 10;
    double p_max = 0.0;  // 0: default_p_max from the temperatures and drifts below
    std::size_t Nx = 32;
    double L = 1.0;
    std::string stencil = "one_sided";
  } grid;

  struct Background {
    double n = 1.0;
    std::array<double, 3> u{0.05, 0.0, 0.0};
    double T = 0.5;
    double amplitude = 2e-4;  // sine wave in n, u1 and T
  } background;

  struct Initial {
    // relax: two Juttner states of density n/2 at drifts +-u (second one tilted in p2)
    double T = 0.4;
    double u = 0.2;
    double phi_amplitude = 0.5;  // limit: F = M (1 + eps phi)
    double perturbation = 0.01;  // vlasov_ampere: density modulation
  } initial;

  struct Physics {
    double eps = 1.0;
    std::vector<double> eps_list{0.1, 0.05};
    double nbar = 1.0;
    int k = 3;  // expansion order in the energy bound
  } physics;

  struct Solver {
    std::string kinetic_mode = "homogeneous";
    double dt = 0.0;  // 0: the stability bound of the chosen solver
    double t_end = 0.5;
    long steps = 100;
    long snapshot_every = 0;
    long report_every = 5;
    std::string limiter = "mc";
    std::string closure = "continuum";  // fluid command only; the others use the grid closure
    std::string kernel_cache = "auto";
    double positivity_tol = 1e-12;
  } solver;

  struct Weights {
    int Nc = 3;
    double Tc = 0.0;  // 0: 1.05 times the largest background temperature
  } weights;

  struct Expand {
    std::size_t slices = 8;
    double corrupt = 0.01;  // relative corruption of dt prim for the orthogonality check
  } expand;

  struct Report {
    std::string source;  // run directory with snapshots; empty: the output directory
  } report;

  std::string out = "run";
  std::uint64_t seed = 12345;
  int workers = 0;  // 0: RLK_WORKERS, else 1
};

// Parses a JSON document (possibly empty) over the defaults, applies
// "a.b.c=value" overrides, then validates. Throws ConfigError naming the field.
RunConfig parse_config(const std::string& json_text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
void validate(const RunConfig& c);

// Canonical JSON of the effective config, 17 significant digits.
std::string to_json(const RunConfig& c);

}  // namespace rlk
