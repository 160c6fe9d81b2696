#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "cabandit/analysis.hpp"
#include "cabandit/env.hpp"
#include "cabandit/errors.hpp"
#include "cabandit/policies.hpp"

using namespace cabandit;

TEST_CASE("oracle action") {
    CHECK(oracle_action(std::vector<double>{0.05}, std::vector<double>{10}, 0.01).is_null());
    CHECK(oracle_action(std::vector<double>{0.9, 0.5}, std::vector<double>{9, 4}, 0.01) == Action::pull(1));
    CHECK(oracle_action(std::vector<double>{0.5}, std::vector<double>{10}, 0.01) == Action::pull(0));

    SUBCASE("ties go to the cheaper arm, then the lower id") {
        CHECK(oracle_action(std::vector<double>{0.8, 0.4}, std::vector<double>{2, 1}, 0.01) == Action::pull(1));
        CHECK(oracle_action(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}, 0.01) == Action::pull(0));
    }
    SUBCASE("zero success probability") {
        CHECK_THROWS_AS(oracle_action(std::vector<double>{0.0, 0.5}, std::vector<double>{0.0, 1.0}, 0.01),
                        ArgumentError);
        CHECK(oracle_action(std::vector<double>{0.0, 0.5}, std::vector<double>{0.1, 30.0}, 0.01) == Action::pull(1));
    }
    SUBCASE("threshold exactly zero stops") {
        CHECK(oracle_action(std::vector<double>{0.5}, std::vector<double>{50}, 0.01).is_null());
    }
}

TEST_CASE("oracle choice is invariant to rescaling costs against lambda") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> q(0.05, 0.95), c(0.1, 100.0), s(0.1, 10.0);
    for (int i = 0; i < 500; ++i) {
        const int n = 1 + i % 5;
        std::vector<double> probs(static_cast<std::size_t>(n)), costs(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            probs[static_cast<std::size_t>(a)] = q(gen);
            costs[static_cast<std::size_t>(a)] = c(gen);
        }
        const double lambda = 0.01, k = s(gen);
        std::vector<double> scaled = costs;
        for (double& x : scaled) x *= k;
        const Action a = oracle_action(probs, costs, lambda);
        const Action b = oracle_action(probs, scaled, lambda / k);
        // the threshold q - lambda c is unchanged only up to rounding; skip razor-thin cases
        double gain = -1.0;
        for (int j = 0; j < n; ++j) gain = std::max(gain, probs[static_cast<std::size_t>(j)] - lambda * costs[static_cast<std::size_t>(j)]);
        if (std::abs(gain) < 1e-12) continue;
        CHECK(a == b);
    }
}

TEST_CASE("promptwise decision rule") {
    const std::vector<double> q{0.8, 0.6}, c{2, 1};
    const std::vector<int> none, failed{0}, succeeded{0, 1};
    const auto d = promptwise_decide(q, c, 0.01, 1, 5, none);
    REQUIRE(d.action.is_pull());
    CHECK(d.action.arm() == 1);
    CHECK(d.predicted_success == 0.6);
    CHECK(promptwise_decide(q, c, 0.01, 3, 5, succeeded).action.is_null());
    CHECK(promptwise_decide(q, c, 0.01, 6, 5, failed).action.is_null());
    CHECK(promptwise_decide(q, c, 1.0, 1, 5, none).action.is_null());
}

TEST_CASE("cost-aware single choice and greedy choice") {
    CHECK(cost_aware_choice(std::vector<double>{0.9, 0.6}, std::vector<double>{10, 1}, 0.1) == 1);
    const std::vector<int> tried{3, 3, 3};
    CHECK(greedy_choice(std::vector<double>{0.2, 0.9, 0.5}, tried, std::vector<double>{1, 2, 3}) == 1);
    const std::vector<int> partly{3, 0, 0};
    CHECK(greedy_choice(std::vector<double>{1.0, 1.0, 1.0}, partly, std::vector<double>{1, 5, 2}) == 2);
}

TEST_CASE("policy names") {
    std::set<std::string> names;
    for (auto k : all_policy_kinds()) {
        names.insert(std::string(to_string(k)));
        CHECK(parse_policy_kind(to_string(k)) == k);
    }
    CHECK(names.size() == 11);
    CHECK(names.count("ca_pak_ucb_ts") == 1);
    CHECK_THROWS_AS(parse_policy_kind("linucb"), ConfigError);
}

TEST_CASE("optimistic estimates overestimate the oracle utility") {
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> q(0.05, 0.95), c(0.1, 100.0), up(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const int n = 1 + i % 5;
        std::vector<double> probs(static_cast<std::size_t>(n)), hat(static_cast<std::size_t>(n)), costs(static_cast<std::size_t>(n));
        for (std::size_t a = 0; a < probs.size(); ++a) {
            probs[a] = q(gen);
            hat[a] = probs[a] + (1.0 - probs[a]) * up(gen);
            costs[a] = c(gen);
        }
        const double lambda = i % 2 ? 0.01 : 0.1;
        CHECK(optimal_utility(hat, costs, lambda) >= optimal_utility(probs, costs, lambda) - 1e-12);
    }
}

TEST_CASE("exploration schedule") {
    ExplorationSchedule s{5, 1};
    CHECK(s.length() == 5);
    CHECK(s.active(5));
    CHECK_FALSE(s.active(6));
    CHECK(s.arm_for(3) == 2);
    ExplorationSchedule two{3, 2};
    CHECK(two.arm_for(1) == 0);
    CHECK(two.arm_for(2) == 0);
    CHECK(two.arm_for(3) == 1);
    CHECK(two.arm_for(6) == 2);
}

namespace {

TrialResult run(PolicyKind kind, int horizon, std::uint64_t seed, const Environment& env, HyperParams h = {}) {
    TrialSpec spec;
    spec.kind = kind;
    spec.params = h;
    spec.horizon = horizon;
    spec.root_seed = seed;
    return run_trial(env, spec);
}

}  // namespace

TEST_CASE("structural rules on seeded runs") {
    SyntheticExpertEnv env;
    for (auto kind : all_policy_kinds()) {
        CAPTURE(to_string(kind));
        const auto tr = run(kind, 120, 3, env);
        for (const auto& st : tr.steps) CHECK_NOTHROW(validate_step_record(st, 0.01, 5));
    }
}

TEST_CASE("exploration phase pulls each arm once, in order") {
    SyntheticExpertEnv env;
    for (auto kind : {PolicyKind::PromptWise, PolicyKind::PromptWisePerStep, PolicyKind::PromptWiseKlr,
                      PolicyKind::CaPakUcbTs}) {
        const auto tr = run(kind, 10, 5, env);
        for (int t = 0; t < 5; ++t) {
            REQUIRE(tr.steps[static_cast<std::size_t>(t)].pulls.size() == 1);
            CHECK(tr.steps[static_cast<std::size_t>(t)].pulls[0].arm == t);
        }
    }
}

TEST_CASE("per-step variant and CA PAK-UCB-tS never switch arms within a step") {
    SyntheticExpertEnv env;
    for (auto kind : {PolicyKind::PromptWisePerStep, PolicyKind::CaPakUcbTs}) {
        const auto tr = run(kind, 300, 9, env);
        for (const auto& st : tr.steps) {
            std::set<int> arms;
            for (const auto& p : st.pulls) arms.insert(p.arm);
            CHECK(arms.size() <= 1);
        }
    }
}

TEST_CASE("per-step and inner-round variants make the same first decision after exploration") {
    SyntheticExpertEnv env;
    const auto a = run(PolicyKind::PromptWise, 6, 21, env);
    const auto b = run(PolicyKind::PromptWisePerStep, 6, 21, env);
    REQUIRE(a.steps[5].pulls.size() >= 1);
    REQUIRE(b.steps[5].pulls.size() >= 1);
    CHECK(a.steps[5].pulls[0].arm == b.steps[5].pulls[0].arm);
}

TEST_CASE("inner-round updates change only the pulled arm's model") {
    SyntheticExpertEnv env;
    PolicySetup setup;
    setup.arms = env.arms();
    setup.dim = 5;
    PromptWisePolicy p(setup, UpdateMode::InnerRound);
    for (int t = 1; t <= 5; ++t) {
        const Context x = one_hot_context(t % 5, 5);
        p.begin_step(t, x);
        const auto d = p.decide_round(1, std::vector<int>{});
        p.observe(d.action.arm(), x, 0);
        p.end_step();
    }
    const Context x = one_hot_context(3, 5);
    p.begin_step(6, x);
    const auto before = p.current_estimates();
    const auto d = p.decide_round(1, std::vector<int>{});
    REQUIRE(d.action.is_pull());
    const auto n_before = p.model(d.action.arm()).num_obs();
    p.observe(d.action.arm(), x, 0);
    CHECK(p.model(d.action.arm()).num_obs() == n_before + 1);
    const auto after = p.current_estimates();
    for (std::size_t a = 0; a < before.size(); ++a)
        if (static_cast<int>(a) != d.action.arm()) CHECK(after[a] == before[a]);
    CHECK(after[static_cast<std::size_t>(d.action.arm())] < before[static_cast<std::size_t>(d.action.arm())]);
}

TEST_CASE("greedy means are successes over pulls") {
    SyntheticExpertEnv env;
    PolicySetup setup;
    setup.arms = env.arms();
    setup.dim = 5;
    GreedyPolicy g(setup, true);
    TrialSpec spec;
    spec.kind = PolicyKind::GreedyTillSuccess;
    spec.horizon = 200;
    spec.root_seed = 4;
    const auto tr = run_trial(env, g, spec);
    std::vector<int> pulls(5, 0), wins(5, 0);
    for (const auto& st : tr.steps)
        for (const auto& p : st.pulls) {
            ++pulls[static_cast<std::size_t>(p.arm)];
            wins[static_cast<std::size_t>(p.arm)] += p.reward;
        }
    for (int a = 0; a < 5; ++a) {
        CHECK(g.pulls(a) == pulls[static_cast<std::size_t>(a)]);
        CHECK(g.successes(a) == wins[static_cast<std::size_t>(a)]);
        if (pulls[static_cast<std::size_t>(a)] > 0)
            CHECK(g.mean(a) == static_cast<double>(wins[static_cast<std::size_t>(a)]) / pulls[static_cast<std::size_t>(a)]);
        CHECK(pulls[static_cast<std::size_t>(a)] >= 1);
    }
}

TEST_CASE("fixed-arm baselines") {
    SyntheticExpertEnv env;
    const auto lo = run(PolicyKind::LowestCost, 50, 1, env);
    const auto hi = run(PolicyKind::HighestCost, 50, 1, env);
    for (const auto& st : lo.steps) {
        REQUIRE(st.pulls.size() == 1);
        CHECK(st.pulls[0].arm == 0);
    }
    for (const auto& st : hi.steps) {
        REQUIRE(st.pulls.size() == 1);
        CHECK(st.pulls[0].arm == 4);
    }
}

TEST_CASE("oracle needs ground truth") {
    PolicySetup setup;
    setup.arms = {{0, 1.0, "a"}};
    CHECK_THROWS_AS(make_policy(PolicyKind::Oracle, setup), ConfigError);
}

TEST_CASE("KLR support cap is enforced") {
    SyntheticExpertEnv env;
    HyperParams h;
    h.max_support = 20;
    PolicySetup setup;
    setup.arms = env.arms();
    setup.dim = 5;
    setup.params = h;
    PromptWiseKlrPolicy p(setup);
    TrialSpec spec;
    spec.kind = PolicyKind::PromptWiseKlr;
    spec.params = h;
    spec.horizon = 200;
    run_trial(env, p, spec);
    for (int a = 0; a < 5; ++a) CHECK(p.state(a).size() <= 20);
}
