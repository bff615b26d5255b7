#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "moncrief/commands.hpp"
#include "moncrief/errors.hpp"

using namespace moncrief;

int main(int argc, char** argv) {
  CLI::App app{"Moncrief equation on the Bolza surface: solver, inverse map and checks"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  app.set_help_flag("--help", "print help and exit");  // -h would clash with --h

  std::string configPath;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> h, tol;
  std::optional<int> L;
  app.add_option("--config", configPath, "INI or JSON configuration file");
  app.add_option("--out", out, "directory that receives run folders");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--h", h, "grid spacing");
  app.add_option("--L", L, "series truncation length");
  app.add_option("--tol", tol, "Newton tolerance");

  struct Command {
    const char* name;
    const char* help;
    CommandResult (*run)(const RunConfig&, bool);
  };
  const Command commands[] = {
      {"solve", "solve for the configured tensor and check all identities", cmd_solve},
      {"mms", "manufactured-solution refinement study", cmd_mms},
      {"roundtrip", "forward and inverse map over basis and random directions", cmd_roundtrip},
      {"scan", "energy along rays, properness envelopes", cmd_scan},
      {"gen-group", "side pairings, relation and automorphy checks", cmd_gen_group},
  };
  for (const Command& c : commands) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig config;
  try {
    if (!configPath.empty()) config = load_config(configPath);
    if (out) config.outDir = *out;
    if (seed) config.seed = *seed;
    if (h) config.h = *h;
    if (L) config.L = *L;
    if (tol) config.tol = *tol;
    validate(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  for (const Command& c : commands) {
    if (!app.got_subcommand(c.name)) continue;
    try {
      const CommandResult r = c.run(config, true);
      std::cout << "status: " << r.report.value("status", "unknown") << "  exit " << r.exitCode << '\n';
      for (const auto& check : r.report["checks"]) {
        if (!check["pass"].get<bool>()) std::cout << "  FAIL " << check["name"].get<std::string>() << '\n';
      }
      if (r.report.contains("error")) std::cout << "  error: " << r.report["error"].get<std::string>() << '\n';
      if (!r.runDir.empty()) std::cout << "report: " << (r.runDir / "report.json").string() << '\n';
      return r.exitCode;
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  return kExitConfig;
}
