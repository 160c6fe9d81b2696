#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cabandit/analysis.hpp"
#include "cabandit/env.hpp"

namespace cabandit {

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
/// Throws DataError unless the whole string is a number.
double parse_double(std::string_view s);

inline constexpr const char* kTrialCsvHeader =
    "trial,step,round,arm_id,reward,cost,cum_cost,terminated_by,step_utility";

/// One row per pull; a step without pulls gets one row with round 0 and arm_id -1.
/// cum_cost accumulates within the step. The first line is "# config_digest=<hex>".
void write_trial_csv(std::ostream& out, const TrialResult& trial);
void write_trial_csv(const std::filesystem::path& path, const TrialResult& trial);

/// Inverse of write_trial_csv; contexts are not stored, so records come back without them.
TrialResult read_trial_csv(std::istream& in);
TrialResult read_trial_csv(const std::filesystem::path& path);

/// "step,oracle_utility" for synthetic runs.
void write_oracle_csv(const std::filesystem::path& path, const TrialResult& trial);
std::vector<double> read_oracle_csv(const std::filesystem::path& path);

void write_summary_json(const std::filesystem::path& path, const std::string& algorithm, const MetricsSummary& summary,
                        const std::string& config_digest);

using AlgorithmResults = std::pair<std::string, std::vector<TrialResult>>;

/// algorithm,step,avg_utility,avg_cost,avg_success,cum_regret: seed-averaged running averages
/// and mean cumulative regret (empty when unknown).
void write_curves_csv(const std::filesystem::path& path, const std::vector<AlgorithmResults>& results,
                      const std::string& config_digest);

/// Loads every <algo>/trial_<k>.csv (and oracle_<k>.csv when present) under `dir`.
std::vector<AlgorithmResults> load_results(const std::filesystem::path& dir);

/// Writes plot_<metric>.csv with columns algorithm,step,mean,stderr for each metric it can
/// compute. Returns the files written. Throws StateError when `dir` holds no trial files.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& dir);

}  // namespace cabandit
