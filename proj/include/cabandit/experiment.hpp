#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cabandit/analysis.hpp"
#include "cabandit/config.hpp"
#include "cabandit/io.hpp"

namespace cabandit {

struct RunOptions {
    int jobs = 1;               // 1 runs trials serially; 0 uses the OpenMP default
    bool write_outputs = true;  // false keeps results in memory only
};

struct ExperimentOutcome {
    std::string config_digest;
    std::vector<AlgorithmResults> results;  // in config order
    std::map<std::string, MetricsSummary> summaries;
};

/// All trials of one algorithm. Failures carry the algorithm, seed, trial and step.
std::vector<TrialResult> run_algorithm(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                                       const EnvFactory& envs, const RunOptions& options);

/// Runs every (algorithm, trial) pair and, unless disabled, writes
/// <out>/<algo>/trial_<k>.csv, oracle_<k>.csv (synthetic envs), <algo>/summary.json and <out>/curves.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

}  // namespace cabandit
