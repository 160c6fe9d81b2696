#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cabandit {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Random instances: oracle_action + optimal_utility against mdp_value_iteration.
CheckResult verify_oracle_equivalence(std::uint64_t seed, int instances = 1000);

/// Random (q, c, lambda, tau_max) tuples: truncated_utility against the Monte Carlo tally.
CheckResult verify_truncated_utility(std::uint64_t seed, int tuples = 20, std::uint64_t episodes = 1000000,
                                     int threads = 1);

/// Random instances: mean cost of pulling the oracle arm until success against c/q.
CheckResult verify_expected_cost(std::uint64_t seed, int instances = 10, std::uint64_t episodes = 1000000,
                                 int threads = 1);

std::vector<CheckResult> verify_all(std::uint64_t seed, int threads = 1);

}  // namespace cabandit
