#pragma once

// Executes one resolved experiment and writes its output files.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "config.hpp"

namespace tbscat::app {

inline constexpr const char* version = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_validation = 1, exit_runtime = 2, exit_edge_trip = 3 };

struct RunOutcome {
    int exit_code = exit_ok;
    json verdict;         // contents of verdict.json
    std::string summary;  // one line for the terminal
};

/// Runs `cfg` into `out_dir` (created if needed). Library and config errors are
/// caught and mapped to exit codes; the message goes to `err`.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& err);

}  // namespace tbscat::app
