#ifndef HITSTAT_EXPERIMENTS_HPP
#define HITSTAT_EXPERIMENTS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hitstat {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed and validated experiment configuration. Unknown keys are rejected;
/// the seed is mandatory so every run is reproducible by construction.
struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string out_dir; // may be overridden by the CLI
    int workers = 1;
    nlohmann::json system;  // experiment-dependent blocks
    nlohmann::json measure;
    nlohmann::json params;

    static ExperimentConfig parse(const std::string& json_text);
    static ExperimentConfig parse_file(const std::string& path);
};

struct ExperimentResult {
    // filename -> bytes; includes report.txt; written in this order
    std::vector<std::pair<std::string, std::string>> artifacts;
    bool all_pass = false;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

void write_artifacts(const ExperimentResult& result, const std::string& out_dir);

std::string list_builtins();

} // namespace hitstat

#endif
