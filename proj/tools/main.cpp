#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bytestorm/cli.hpp"

using namespace bytestorm;

int main(int argc, char** argv) {
  CLI::App app{"Tropical cyclone detection, tracking and evaluation"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  int jobs = 0;
  bool dump_config = false;

  std::string names;
  for (const auto& n : cli::subcommands()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "Subcommand: " + names)->required();
  app.add_option("-c,--config", config_path, "INI configuration file");
  app.add_option("-s,--set", overrides, "Override a config value: section.key=value");
  app.add_option("-j,--jobs", jobs, "Worker threads (overrides run.jobs)")->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cli::error_line(ErrorKind::UnknownCommand, e.what()) << "\n";
    return cli::exit_code(ErrorKind::UnknownCommand);
  }

  if (jobs > 0) overrides.push_back("run.jobs=" + std::to_string(jobs));
  cli::RunConfig cfg;
  try {
    if (config_path.empty()) {
      std::istringstream empty;
      cfg = cli::parse_config(empty, overrides);
    } else {
      cfg = cli::load_config(config_path, overrides);
    }
  } catch (const Error& e) {
    std::cerr << cli::error_line(e.kind(), e.what()) << "\n";
    return cli::exit_code(e.kind());
  }

  if (dump_config) {
    std::cout << cli::serialize_config(cfg);
    return 0;
  }
  return cli::run_subcommand(command, cfg, std::cout, std::cerr);
}
