#pragma once

#include <string>

#include "crossdiff/scheme.hpp"

namespace crossdiff {

/// Strict TOML configuration. Sections: [domain] [grid] [time] [energy]
/// [reaction] [initial] [jko] [fv] [output]. Unknown sections or keys, wrong
/// types and invalid values throw ConfigError(key path, line).
SchemeConfig parse_config(const std::string& path);
SchemeConfig parse_config_string(const std::string& text, const std::string& source = "<string>");

/// Fully resolved configuration (defaults filled in) as TOML; parsing it back
/// gives the same SchemeConfig.
std::string config_to_toml(const SchemeConfig& config);

/// The resolved configuration as a JSON object (same keys as the TOML).
std::string config_to_json(const SchemeConfig& config);

/// Documentation of every key and its default, for --help.
std::string config_reference();

}  // namespace crossdiff
