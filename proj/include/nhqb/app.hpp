#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nhqb/io.hpp"
#include "nhqb/model.hpp"

namespace nhqb {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitComputation = 2, kExitCheckFailed = 3 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::map<std::string, std::string> values;  // "section.key" -> text
  std::filesystem::path out_dir = "out";
  std::string format = "csv";
  int threads = 0;
  long seed = 0;
  std::string load_error;  // set when the config file could not be read or parsed
};

// Parses the flat "key = value" format with "[section]" headers. Keys are
// returned as "section.key". Comments start with '#' or ';'.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

std::string config_schema_help();
const std::vector<std::string>& command_names();

struct Settings {
  std::string command;
  double J = 1.0, delta = 0.5, theta = 0.4;
  Regime regime = Regime::Real;
  BoundaryKind boundary = BoundaryKind::Periodic;
  int cells = 40;

  int k_points = 2001;
  int spectrum_k_points = 400;
  double delta_min = -0.9, delta_max = 0.9, delta_step = 0.05;
  double theta_min = 0.0, theta_max = 1.0, theta_step = 0.1;

  double J_i = 1.0, delta_i = -0.9, theta_i = 0.0;
  double J_f = 1.0, delta_f = 0.9, theta_f = 0.4;
  int k_per_half = 1000;
  double t_max = 12.0;
  int t_samples = 800;
  int n_min = 0, n_max = 9;
  int pgp_k_stride = 10, pgp_t_stride = 4;

  int amp_cells = 10;

  Format format = Format::Csv;
  int threads = 0;
  long seed = 0;
  std::filesystem::path out_dir;

  // Resolved configuration as ordered (key, value) pairs for the manifest.
  std::vector<std::pair<std::string, std::string>> echo;

  std::vector<double> delta_grid() const;
  std::vector<double> theta_grid() const;
};

// Fills defaults, parses values and rejects inconsistent requests with UsageError.
Settings validate(const RunConfig& config);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;
};

// Executes the command and always writes manifest.json into the output directory.
RunOutcome run(const RunConfig& config);

}  // namespace nhqb
