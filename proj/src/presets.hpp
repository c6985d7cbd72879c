#pragma once

// Built-in reproduction configs, embedded so they cannot drift from a shipped file.

#include <string>
#include <vector>

#include "config.hpp"

namespace tbscat::app {

struct PresetInfo {
    std::string name;
    std::string description;
};

std::vector<PresetInfo> list_presets();

/// Throws ConfigError for an unknown name. "fig4" is accepted as an alias of "fig4nh".
ExperimentConfig preset(const std::string& name);

/// The embedded YAML source of a preset.
std::string preset_source(const std::string& name);

}  // namespace tbscat::app
