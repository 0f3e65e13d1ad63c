#pragma once

// Subcommands of the repnet tool. Each command reads a RunConfig, writes its
// artifacts under cfg.out and returns a process exit code:
//   0 all checks green, 2 config error, 3 construction failure,
//   4 verification failure.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace repnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitConstruction = 3;
inline constexpr int kExitVerification = 4;

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::size_t dim = 2;
  std::vector<double> box{0, 0, 50, 50};  // lo..., hi...
  double tau = 1.0;
  double eta = 1.0;  // a priori covering radius; the certified one must not exceed it
  double sigma = 3.0;
  double epsilon = 0.2;
  std::size_t frozen = 10;
  double lambda0 = 1.25;
  std::size_t depth = 3;
  double interior_margin = -1;  // negative: tau
  int sandwich_radius = 5;
  std::vector<std::uint32_t> analysis_radii{1, 2, 4};
  std::size_t persistence_sample = 48;
  std::uint32_t persistence_radius = 3;
  std::uint64_t seed = 7;
  std::string out = "out";

  // per-command inputs
  std::string in;
  std::string in2;
  std::string certificate;
  double net_k = 0.0;  // > 0: greedy net of --in at this separation
  std::uint32_t x1 = 0;
  std::uint32_t x2 = 0;
  std::uint32_t r_max = 8;
  std::uint32_t base_point = 0;

  /// Throws ConfigError on any invariant violation.
  void validate() const;
  nlohmann::json to_json() const;
};

/// key = value lines; `#` starts a comment. Unknown keys are rejected.
std::map<std::string, std::string> read_config_file(const std::string& path);
/// Applies key/value overrides on top of cfg. Throws ConfigError on bad values.
void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& kv);
std::vector<std::string> config_keys();

int cmd_net(const RunConfig& cfg);
int cmd_perturb(const RunConfig& cfg);
int cmd_graphify(const RunConfig& cfg);
int cmd_schedule(const RunConfig& cfg);
int cmd_hierarchy(const RunConfig& cfg);
int cmd_analyze(const RunConfig& cfg);
int cmd_gdist(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_pipeline(const RunConfig& cfg);

/// Runs a command, mapping exceptions to exit codes and printing the
/// message with the stage name to stderr.
int run_guarded(const std::string& name, int (*cmd)(const RunConfig&), const RunConfig& cfg);

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::string& path);

}  // namespace repnet::cli
