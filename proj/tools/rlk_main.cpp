// rlk: run one subcommand into a run directory.
//
//   rlk relax --config relax.json --out runs/a --override solver.steps=200
//
// Exit status: 0 all asserted invariants hold, 1 an invariant failed or a
// solver error stopped the run, 2 bad command line or config.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rlk/config.hpp"
#include "rlk/drivers.hpp"
#include "rlk/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relativistic Landau kinetics"};
  std::string command, config_path, out;
  int workers = -1;
  std::vector<std::string> overrides;
  app.add_option("command", command, "subcommand")->required()->check(CLI::IsMember(rlk::command_names()));
  app.add_option("--config,-c", config_path, "JSON config file (defaults for anything missing)");
  app.add_option("--out,-o", out, "run directory, overrides the config's out");
  app.add_option("--workers,-j", workers, "worker threads, overrides the config");
  app.add_option("--override,-D", overrides, "dotted key=value, e.g. grid.N=12")->take_all();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!out.empty()) overrides.push_back("out=\"" + out + "\"");
    if (workers >= 0) overrides.push_back("workers=" + std::to_string(workers));
    rlk::RunConfig cfg = config_path.empty() ? rlk::parse_config("", overrides) : rlk::load_config(config_path, overrides);
    rlk::RunSummary s = rlk::run_command(command, cfg);
    for (const auto& i : s.invariants)
      std::printf("%s %-28s %.6e (tol %.3e)\n", i.pass ? "ok  " : "FAIL", i.name.c_str(), i.value, i.tolerance);
    for (const auto& [k, v] : s.measured) std::printf("     %-28s %.6e\n", k.c_str(), v);
    if (!s.error.empty()) std::fprintf(stderr, "rlk %s: %s\n", command.c_str(), s.error.c_str());
    std::printf("%s %s in %.2f s -> %s\n", command.c_str(), s.passed() ? "passed" : "FAILED", s.wall_seconds,
                s.run_dir.c_str());
    return s.passed() ? 0 : 1;
  } catch (const rlk::ConfigError& e) {
    std::fprintf(stderr, "rlk: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rlk: %s\n", e.what());
    return 1;
  }
}
