#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tbrelay/scenarios.hpp"

namespace tbrelay {

/// Parses flat `key = value` text ('#' starts a comment) on top of
/// build_default_config(). Unknown, duplicated or malformed keys throw
/// SchemaViolation naming the key.
ExperimentConfig parse_config(std::string_view text);

/// Reads and parses a config file. Throws ConfigError if it cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every schema key with its resolved value, in schema order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

/// Names of all accepted keys.
std::vector<std::string> config_keys();

}  // namespace tbrelay
