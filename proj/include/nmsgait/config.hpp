#pragma once

// Run configuration: model tables, controller defaults and bounds, simulation,
// optimizer and robustness settings. JSON on disk; every key is required.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nmsgait/optimizer.hpp"
#include "nmsgait/simulation.hpp"
#include "nmsgait/walker.hpp"

namespace nmsgait {

struct RunConfig {
  WalkerConfig walker;
  ControlParams defaults = ControlParams::defaults();
  ParamBounds bounds = ParamBounds::defaults();
  Terrain terrain;
  double t_max = 20.0;
  OptimizeSettings optimizer;
  StepDownProtocol robustness;
  std::string output_dir = "out";

  static RunConfig builtin();
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::vector<std::string> missing = {})
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

nlohmann::json config_to_json(const RunConfig& c);

/// Throws ConfigError listing every missing key (as dotted paths) or the
/// first invalid value.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Dotted paths present in `reference` but absent from `candidate`.
std::vector<std::string> missing_keys(const nlohmann::json& reference,
                                      const nlohmann::json& candidate);

/// "flat" or "step:<dh>@<x>" with dh < 0 for a drop, e.g. "step:-0.03@5".
Terrain parse_terrain(const std::string& spec);

}  // namespace nmsgait
