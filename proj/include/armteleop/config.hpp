#pragma once

#include <map>
#include <string>

#include "armteleop/session.hpp"

namespace armteleop {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AppConfig {
    SessionConfig session;
    std::map<char, Vec3> markers; // task marker centers, robot base frame
};

/// Parses the JSON config. Every field is optional; a relative "chain" path
/// is resolved against base_dir. Throws ConfigError.
AppConfig parse_config(const std::string& document, const std::string& base_dir = ".");
AppConfig load_config(const std::string& path);

std::string config_to_json(const AppConfig& cfg, const std::string& chain_path = "");

} // namespace armteleop
