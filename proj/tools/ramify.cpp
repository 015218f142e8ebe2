// ramify <irrigate|treeopt|gamma-table|counterexample|gradcheck>
//        [--config FILE] [--preset NAME] [--out DIR] [--functional max|avg]

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ramify/config.hpp"
#include "ramify/experiments.hpp"
#include "ramify/json_io.hpp"

int main(int argc, char** argv) {
  using namespace ramify;
  CLI::App app{"Optimal irrigation patterns by mollified cost minimization"};
  std::string command, config_path, preset_name, out_dir, functional;
  bool dump = false;
  app.add_option("command", command, "irrigate | treeopt | gamma-table | counterexample | gradcheck")
      ->required()
      ->check(CLI::IsMember({"irrigate", "treeopt", "gamma-table", "counterexample", "gradcheck"}));
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--preset", preset_name, "fig2 | fig3 | fig3-text | fig4 | fig5");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--functional", functional, "max | avg")->check(CLI::IsMember({"max", "avg"}));
  app.add_flag("--print-config", dump, "print the resolved configuration and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!preset_name.empty()) {
      cfg = preset(preset_name);
      if (experiment_name(cfg.experiment) != command)
        throw ConfigError("preset " + preset_name + " is a " + experiment_name(cfg.experiment) + " preset");
    }
    cfg.experiment = parse_experiment(command);
    if (!config_path.empty()) cfg = apply_json(cfg, read_json_file(config_path));
    if (cfg.experiment != parse_experiment(command))
      throw ConfigError("config experiment does not match the command");
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!functional.empty()) cfg.functional = parse_form(functional);
    validate(cfg);
    if (dump) {
      std::printf("%s\n", to_json(cfg).dump(2).c_str());
      return kExitOk;
    }
    return run_command(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const AssertionFailure& e) {
    std::fprintf(stderr, "check failed: %s\n", e.what());
    return kExitNumerical;
  } catch (const DegenerateConfiguration& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const NonDifferentiable& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const TopologyError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
}
