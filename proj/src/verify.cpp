#include "cabandit/verify.hpp"

#include <cmath>
#include <sstream>

#include "cabandit/analysis.hpp"
#include "cabandit/parallel.hpp"
#include "cabandit/policies.hpp"
#include "cabandit/rng.hpp"

namespace cabandit {

namespace {

double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

McEstimate run_mc(const McScheme& s, std::uint64_t episodes, std::uint64_t seed, int threads) {
    return threads == 1 ? monte_carlo_serial(s, episodes, seed) : monte_carlo_omp(s, episodes, seed, threads);
}

}  // namespace

CheckResult verify_oracle_equivalence(std::uint64_t seed, int instances) {
    static const double lambdas[] = {0.001, 0.01, 0.1};
    CheckResult out{"oracle equivalence", true, {}};
    int action_mismatch = 0;
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        auto rng = substream(StreamKey{seed, 0, static_cast<std::uint64_t>(i), 0, Purpose::GroundTruth});
        const int n = 1 + static_cast<int>(uniform_index(rng, 5));
        std::vector<double> q(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            q[static_cast<std::size_t>(a)] = uniform(rng, 0.05, 0.95);
            c[static_cast<std::size_t>(a)] = uniform(rng, 0.1, 100.0);
        }
        const double lambda = lambdas[uniform_index(rng, 3)];
        const auto mdp = mdp_value_iteration(q, c, lambda);
        if (!(mdp.best_action == oracle_action(q, c, lambda))) ++action_mismatch;
        worst = std::max(worst, std::abs(mdp.value_at_zero - optimal_utility(q, c, lambda)));
    }
    out.passed = action_mismatch == 0 && worst <= 1e-9;
    std::ostringstream ss;
    ss << instances << " instances, " << action_mismatch << " action mismatches, max |dU| = " << worst;
    out.detail = ss.str();
    return out;
}

CheckResult verify_truncated_utility(std::uint64_t seed, int tuples, std::uint64_t episodes, int threads) {
    CheckResult out{"truncated utility", true, {}};
    double worst_z = 0.0;
    for (int i = 0; i < tuples; ++i) {
        auto rng = substream(StreamKey{seed, 1, static_cast<std::uint64_t>(i), 0, Purpose::GroundTruth});
        McScheme s;
        s.q = uniform(rng, 0.05, 1.0);
        s.cost = uniform(rng, 0.1, 20.0);
        s.lambda = uniform(rng, 0.0, 0.05);
        s.tau_max = 1 + static_cast<int>(uniform_index(rng, 10));
        const double closed = truncated_utility(s.q, s.cost, s.lambda, *s.tau_max);
        const auto mc = run_mc(s, episodes, seed ^ (0x7275ULL + static_cast<std::uint64_t>(i)), threads);
        const double z = mc.se_utility > 0.0 ? std::abs(mc.mean_utility - closed) / mc.se_utility
                                             : (std::abs(mc.mean_utility - closed) < 1e-12 ? 0.0 : INFINITY);
        worst_z = std::max(worst_z, z);
    }
    out.passed = worst_z <= 4.0;
    std::ostringstream ss;
    ss << tuples << " tuples x " << episodes << " episodes, max |z| = " << worst_z;
    out.detail = ss.str();
    return out;
}

CheckResult verify_expected_cost(std::uint64_t seed, int instances, std::uint64_t episodes, int threads) {
    CheckResult out{"expected cost", true, {}};
    double worst_z = 0.0;
    int done = 0;
    for (int i = 0; done < instances && i < 100 * instances; ++i) {
        auto rng = substream(StreamKey{seed, 2, static_cast<std::uint64_t>(i), 0, Purpose::GroundTruth});
        const int n = 1 + static_cast<int>(uniform_index(rng, 5));
        std::vector<double> q(static_cast<std::size_t>(n)), c(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            q[static_cast<std::size_t>(a)] = uniform(rng, 0.05, 0.95);
            c[static_cast<std::size_t>(a)] = uniform(rng, 0.1, 10.0);
        }
        const Action a = oracle_action(q, c, 0.01);
        if (a.is_null()) continue;
        const auto k = static_cast<std::size_t>(a.arm());
        const auto mc = run_mc(McScheme{q[k], c[k], 0.01, std::nullopt}, episodes,
                               seed ^ (0x636fULL + static_cast<std::uint64_t>(i)), threads);
        const double expected = c[k] / q[k];
        worst_z = std::max(worst_z, std::abs(mc.mean_cost - expected) / mc.se_cost);
        ++done;
    }
    out.passed = done == instances && worst_z <= 4.0;
    std::ostringstream ss;
    ss << done << " instances x " << episodes << " episodes, max |z| = " << worst_z;
    out.detail = ss.str();
    return out;
}

std::vector<CheckResult> verify_all(std::uint64_t seed, int threads) {
    return {verify_oracle_equivalence(seed), verify_truncated_utility(seed, 20, 1000000, threads),
            verify_expected_cost(seed, 10, 1000000, threads)};
}

}  // namespace cabandit
