#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "bwlab/grpo.hpp"
#include "bwlab/scenario.hpp"

namespace bwlab {

// Everything one configuration file describes.
struct LabConfig {
  ScenarioConfig scenario;
  TrainingSpec training;
  bool operator==(const LabConfig&) const = default;
};

// YAML text <-> config. Parse and validation failures raise ConfigError
// carrying the 1-based line of the offending node and the field path.
LabConfig parse_config(const std::string& yaml_text);
LabConfig load_config(const std::string& path);
std::string emit_config(const LabConfig& cfg);

// Canonical JSON form (sorted keys) and its SHA-256 hex digest.
nlohmann::json config_json(const LabConfig& cfg);
std::string config_hash(const LabConfig& cfg);
std::string sha256_hex(const std::string& data);

// Name of the variable that overrides every remote agent endpoint.
inline constexpr const char* kEndpointEnv = "BWLAB_AGENT_ENDPOINT";
// Applies the endpoint override (if the variable is set); returns true when applied.
bool apply_environment_overrides(LabConfig& cfg);

}  // namespace bwlab
