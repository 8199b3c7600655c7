#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mildmix/arithmetic.hpp"
#include "mildmix/roof.hpp"

namespace mildmix {

/// Commands understood by run_command, in a fixed order.
const std::vector<std::string>& command_names();

/// Default parameters of a command (schema by example: every accepted key
/// with a value of the accepted type). Throws schema_violation for an
/// unknown command.
nlohmann::json command_defaults(std::string_view command);

/// {
///   "rotation": {"alpha": "golden", "depth": 40},
///   "roof": <roof object> | "path/to/roof.json" | null (canonical),
///   "seed": 1,
///   "params": {...}            // command specific, merged over defaults
/// }
struct ExperimentConfig {
  std::string alpha = "golden";
  int depth = 40;
  nlohmann::json roof;  ///< resolved roof object; null means canonical
  std::uint64_t seed = 1;
  nlohmann::json params = nlohmann::json::object();

  /// Validates the top-level shape; a string roof is read relative to base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;

  Rotation rotation() const;
  RoofFunction roof_function() const;
};

struct Artifact {
  std::string name;     ///< file name, e.g. "profile.csv"
  std::string content;
};

struct CommandResult {
  nlohmann::json report;            ///< summary, includes the resolved config
  std::vector<Artifact> tables;     ///< CSV tables; the first is the main one
  bool passed = true;               ///< only meaningful for check-type commands
};

/// Runs one command. params are validated against command_defaults; unknown
/// keys and wrong types raise schema_violation.
CommandResult run_command(std::string_view command, const ExperimentConfig& cfg,
                          unsigned threads = 0);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;      ///< observed error or statistic
  double tolerance = 0.0;  ///< scaled acceptance tolerance
};

/// Fast subset of the acceptance suite on built-in canonical inputs.
/// tolerance_scale multiplies every tolerance (0 forces failures).
std::vector<SelftestCheck> run_selftest(double tolerance_scale = 1.0, std::uint64_t seed = 1);

}  // namespace mildmix
