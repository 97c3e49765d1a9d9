// Structured-text (JSON) campaign, replay and geometry configs, plus the named
// presets that reproduce the reference protocols in one command.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrayins/harness.hpp"

namespace arrayins {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Geometry from a config file ({"positions": [[x,y,z],...], "centered": bool})
/// or a preset name ("paper-32", "square-4").
ArrayGeometry load_geometry(const std::string& path_or_preset);

/// Campaign config from a JSON file or a preset name
/// (paper-sim-{low,high}-{500,100}). Throws ConfigError on parse/validation
/// problems.
CampaignConfig load_campaign_config(const std::string& path_or_preset);

/// Replay config from a JSON file.
ReplayConfig load_replay_config(const std::string& path);

std::vector<std::string> campaign_preset_names();

/// FNV-1a hash of the canonical serialized config, for output provenance.
std::string campaign_config_hash(const CampaignConfig& config);
std::string replay_config_hash(const ReplayConfig& config);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace arrayins
