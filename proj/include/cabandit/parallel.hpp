#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cabandit/core.hpp"
#include "cabandit/env.hpp"
#include "cabandit/kernel.hpp"

namespace cabandit {

// Each kernel comes in a serial reference version and an OpenMP version. Both produce the
// same result bit for bit: work items draw from their own substreams and partial results
// are integers or are written to disjoint slots.

/// Keep pulling one arm until success or tau_max pulls (unlimited when tau_max is unset).
struct McScheme {
    double q = 0.5;
    double cost = 1.0;
    double lambda = 0.01;
    std::optional<int> tau_max;
};

struct McSums {
    std::uint64_t episodes = 0;
    std::uint64_t successes = 0;
    std::uint64_t pulls = 0;
    std::uint64_t pulls_sq = 0;
    std::uint64_t success_pulls = 0;

    McSums& operator+=(const McSums& o) noexcept;
    friend bool operator==(const McSums&, const McSums&) = default;
};

struct McEstimate {
    McSums sums;
    double mean_utility = 0.0;
    double se_utility = 0.0;
    double mean_cost = 0.0;
    double se_cost = 0.0;
    double success_rate = 0.0;
};

McEstimate estimate_from(const McSums& sums, const McScheme& scheme);

/// Episode e uses the (root, 0, e, 0, MonteCarlo) substream.
McEstimate monte_carlo_serial(const McScheme& scheme, std::uint64_t episodes, std::uint64_t root_seed);
McEstimate monte_carlo_omp(const McScheme& scheme, std::uint64_t episodes, std::uint64_t root_seed, int threads = 0);

Matrix gram_matrix_serial(std::span<const Vector> points, const KernelSpec& spec);
Matrix gram_matrix_omp(std::span<const Vector> points, const KernelSpec& spec, int threads = 0);

using TrialJob = std::function<TrialResult(int index)>;

/// Runs job(0..count-1); results are ordered by index. The first failure by index is rethrown.
std::vector<TrialResult> run_trials_serial(int count, const TrialJob& job);
std::vector<TrialResult> run_trials_omp(int count, const TrialJob& job, int threads = 0);

/// Threads used for `requested` (0 means the OpenMP default).
int resolve_threads(int requested);

}  // namespace cabandit
