#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dmcc/experiment.hpp"

namespace dmcc::config {

/// Malformed or inconsistent configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a JSON experiment document. Every object is checked for unknown
/// keys so misspelled fields fail loudly.
experiment::ExperimentConfig parse_config(std::string_view text);
experiment::ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON echo of a config (the inverse of parse_config).
nlohmann::ordered_json to_json(const experiment::ExperimentConfig& config);

}  // namespace dmcc::config
