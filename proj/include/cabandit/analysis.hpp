#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cabandit/core.hpp"
#include "cabandit/env.hpp"

namespace cabandit {

struct MdpOracleResult {
    double value_at_zero = 0.0;
    Action best_action;
    int iterations = 0;
};

/// Value iteration on V(0) = max(0, max_a q_a - lambda c_a + (1 - q_a) V(0)), started at 0.
/// The best action is the arm maximizing Q at the fixed point (ties by cost, then id), or
/// Null when no arm has positive Q. Throws NumericalError when max_iter is exceeded.
MdpOracleResult mdp_value_iteration(std::span<const double> probs, std::span<const double> costs, double lambda,
                                    double tol = 1e-12, int max_iter = 100000);

/// 1 - lambda c/q for the oracle arm, 0 when the oracle stops.
double optimal_utility(std::span<const double> probs, std::span<const double> costs, double lambda);

/// Expected utility of pulling one arm until success or tau_max pulls:
/// 1 - lambda c/q - (1 - q)^tau_max (q - lambda c)/q. Throws ArgumentError for q outside (0, 1].
double truncated_utility(double q, double c, double lambda, int tau_max);

/// Cumulative sum of u*(x_t) - u_t. Throws StateError without oracle utilities.
std::vector<double> regret_curve(const TrialResult& trial);

struct TheoryInputs {
    int d = 1;
    int num_arms = 1;
    long long horizon = 1;
    double delta = 0.05;
    double q0 = 0.5;
    double kappa = 1.0;
    int tau_max = 5;
};

struct TheoryParams {
    double alpha_theorem = 0.0;
    double alpha_practical = 0.0;
    int tau_max_bound = 1;
    bool bound_vacuous = false;  // d q0 / sqrt(T) >= 1
    TheoryInputs inputs;
};

double practical_alpha(int num_arms, double delta);

/// Throws ArgumentError for nonpositive inputs or delta, q0 outside (0, 1).
TheoryParams theory_params(const TheoryInputs& in);

struct MetricsSummary {
    int num_trials = 0;
    int horizon = 0;
    double avg_utility = 0.0;
    double avg_cost = 0.0;
    double avg_success = 0.0;
    std::optional<double> cum_regret;  // mean final regret

    // per-step means across trials
    std::vector<double> utility;
    std::vector<double> cost;
    std::vector<double> success;
    std::optional<std::vector<double>> regret;  // mean cumulative regret
};

/// Throws ArgumentError for no trials or mixed horizons.
MetricsSummary summarize(std::span<const TrialResult> trials);

enum class Metric { Utility, Cost, Success, CumRegret };

std::string_view to_string(Metric m);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> std_error;  // sample std / sqrt(n); 0 for a single trial
};

/// Per trial, the running average up to step t of utility, cost or success (or the cumulative
/// regret as is); then mean and standard error across trials at each step.
SeriesStats metric_curve(std::span<const TrialResult> trials, Metric metric);

}  // namespace cabandit
