/**
 * @file config_io.hpp
 * @brief JSON trial configuration: load, validate, echo.
 *
 * The file mirrors TrialConfig field names; see docs/config_schema.md.
 * Unknown keys are rejected so typos never silently fall back to defaults.
 */

#pragma once

#include "drillsim/controller.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace drillsim::config {

/// Builds a config from JSON on top of the defaults. Throws
/// controller::ConfigError naming the offending field.
controller::TrialConfig from_json(const nlohmann::json& j);

nlohmann::json to_json(const controller::TrialConfig& config);

/// Parses text; syntax errors are reported with line and column.
controller::TrialConfig parse_config(const std::string& text);

controller::TrialConfig load_config(const std::filesystem::path& path);

}  // namespace drillsim::config
