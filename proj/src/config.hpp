#pragma once

// Experiment configuration: a fixed schema of nested sections read from YAML.
// Unknown keys are rejected with their field path; omitted fields inside a
// present section take schema defaults. Numbers may be written as expressions
// and are kept verbatim so that a config round-trips unchanged.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace tbscat::app {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolved configuration: schema-checked, defaults filled in.
struct ExperimentConfig {
    json tree;

    std::string kind() const { return tree.at("kind").get<std::string>(); }
    bool has(const std::string& section) const { return tree.contains(section); }
    const json& section(const std::string& name) const;
};

ExperimentConfig parse_config_text(const std::string& yaml_text);
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig resolve_config(const json& raw);

/// YAML text that parses back to the same resolved tree.
std::string to_yaml(const ExperimentConfig& cfg);

/// Compact JSON with sorted keys; the basis of the config hash.
std::string canonical_json(const ExperimentConfig& cfg);

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(const std::string& bytes);

/// Applies "a.b.c=value" (value in YAML scalar/flow syntax) and re-resolves.
ExperimentConfig apply_override(const ExperimentConfig& cfg, const std::string& assignment);
ExperimentConfig set_value(const ExperimentConfig& cfg, const std::string& path, const json& value);

/// Value of a number field; strings are evaluated as expressions.
double number(const json& v);
long integer(const json& v);
std::vector<double> numbers(const json& v);
std::vector<long> integers(const json& v);

}  // namespace tbscat::app
