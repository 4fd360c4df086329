#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "recipcal/model.hpp"

namespace recipcal {

/// Reads `key = value` lines. Keys are the SystemConfig field names, `#`
/// starts a comment, unknown or repeated keys are a ConfigError. Missing
/// keys keep their defaults.
SystemConfig parse_config(std::istream& in);
SystemConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config.
std::string format_config(const SystemConfig& cfg);

}  // namespace recipcal
