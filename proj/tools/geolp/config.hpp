#pragma once

#include <geolp/runner.hpp>

#include <string>

namespace geolp::cli {

/// Reads a YAML run configuration; unknown keys and malformed values throw ConfigError.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& yaml_text);

} // namespace geolp::cli
