#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nhqb/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Non-Hermitian quadratic bosonic chain laboratory"};
  app.footer(nhqb::config_schema_help() +
             "\nExit codes: 0 success, 1 usage error, 2 computation error, 3 check failure.");

  std::string config_path;
  nhqb::RunConfig config;
  std::string out_dir = "out";
  app.add_option("--config", config_path, "Config file (key = value with [section] headers)");
  app.add_option("--command", config.command, "spectrum | winding | phase-diagram | quench | amplify | check")
      ->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--format", config.format, "csv | json");
  app.add_option("--threads", config.threads, "Worker threads (0 = auto)");
  app.add_option("--seed", config.seed, "Reserved; all computation is deterministic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? nhqb::kExitOk : nhqb::kExitUsage;
  }

  config.out_dir = out_dir;
  if (!config_path.empty()) {
    try {
      config.values = nhqb::load_config_file(config_path);
    } catch (const nhqb::UsageError& e) {
      config.load_error = e.what();
    }
  }

  const nhqb::RunOutcome outcome = nhqb::run(config);
  if (outcome.exit_code != nhqb::kExitOk) std::cerr << "nhqb: " << outcome.message << "\n";
  return outcome.exit_code;
}
