#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cabandit/env.hpp"
#include "cabandit/errors.hpp"

using namespace cabandit;

namespace {

std::vector<Arm> two_arms() { return {{0, 1.0, "a"}, {1, 2.0, "b"}}; }

// Policy that pulls a fixed arm every round and never stops on its own.
class Stubborn : public Policy {
public:
    explicit Stubborn(int arm) : arm_(arm) {}
    void begin_step(int, const Context&) override {}
    PolicyDecision decide_round(int, std::span<const int>) override { return PolicyDecision::pull(arm_); }
    void observe(int, const Context&, int) override { ++observed; }
    int observed = 0;

private:
    int arm_;
};

// Trace with one row whose arms always fail (arm 0) or always succeed (arm 1).
std::vector<TraceRecord> fixed_trace(int n) {
    TraceRecord r;
    r.context = normalize_context(std::vector<double>{0.6, 0.8});
    r.outcomes = {std::vector<int>(static_cast<std::size_t>(n), 0), std::vector<int>(static_cast<std::size_t>(n), 1)};
    return {r};
}

}  // namespace

TEST_CASE("context samplers") {
    SplitMix64 rng(7);
    ContextSampler sphere{SamplerKind::UnitSphereUniform, 4, {}};
    for (int t = 1; t <= 100; ++t) CHECK(sample_context(sphere, rng, t).features().norm() == doctest::Approx(1.0).epsilon(1e-12));

    ContextSampler onehot{SamplerKind::OneHotUniform, 5, {}};
    std::vector<int> counts(5, 0);
    for (int t = 1; t <= 5000; ++t) {
        const auto x = sample_context(onehot, rng, t);
        int hot = -1;
        for (int i = 0; i < 5; ++i)
            if (x[i] == 1.0) hot = i;
        REQUIRE(hot >= 0);
        ++counts[static_cast<std::size_t>(hot)];
    }
    for (int c : counts) CHECK(std::abs(c - 1000) < 150);

    ContextSampler custom{SamplerKind::Custom, 2, {one_hot_context(0, 2), one_hot_context(1, 2)}};
    CHECK(sample_context(custom, rng, 1) == one_hot_context(0, 2));
    CHECK(sample_context(custom, rng, 2) == one_hot_context(1, 2));
    CHECK(sample_context(custom, rng, 3) == one_hot_context(0, 2));
    ContextSampler empty{SamplerKind::Custom, 2, {}};
    CHECK_THROWS_AS(sample_context(empty, rng, 1), ConfigError);
}

TEST_CASE("logistic environment probabilities") {
    Matrix theta(2, 2);
    theta << 1.0, 0.0, 0.0, -1.0;
    SyntheticLogisticEnv env(two_arms(), theta, ContextSampler{SamplerKind::Custom, 2, {one_hot_context(0, 2)}});
    const auto x = one_hot_context(0, 2);
    CHECK(env.success_prob(0, x) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
    CHECK(env.success_prob(1, x) == doctest::Approx(0.5).epsilon(1e-14));
    const auto y = one_hot_context(1, 2);
    CHECK(env.success_prob(1, y) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-14));

    SyntheticLogisticEnv floored(two_arms(), theta, ContextSampler{SamplerKind::Custom, 2, {y}}, 0.4);
    CHECK(floored.success_prob(1, y) == 0.4);
    CHECK(floored.success_probs(y)->size() == 2);

    SUBCASE("empirical reward rate matches") {
        SplitMix64 rng(3);
        StepDraw d{x, -1};
        int wins = 0;
        for (int i = 0; i < 20000; ++i) wins += env.reward(d, 0, 0, rng);
        CHECK(std::abs(wins / 20000.0 - env.success_prob(0, x)) < 0.015);
    }
}

TEST_CASE("theta draws have the requested norm") {
    SplitMix64 rng(11);
    const Matrix t = draw_theta_star(3, 6, 2.0, rng);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 6);
    for (int i = 0; i < 3; ++i) CHECK(t.row(i).norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("expert environment") {
    SyntheticExpertEnv env;
    CHECK(env.num_arms() == 5);
    CHECK(env.arms()[4].cost == 90.0);
    CHECK(env.arms()[0].label == "expert_1");
    CHECK(SyntheticExpertEnv::success_prob(2, 2) == 1.0);
    CHECK(SyntheticExpertEnv::success_prob(2, 3) == 0.5);
    CHECK(SyntheticExpertEnv::success_prob(4, 0) == 1.0);
    const auto q = *env.success_probs(one_hot_context(3, 5));
    CHECK(q == std::vector<double>{0.5, 0.5, 0.5, 1.0, 1.0});
}

TEST_CASE("trace parsing") {
    std::istringstream good(
        "{\"context\": [3, 4], \"outcomes\": {\"0\": [0, 1], \"1\": [1, 1]}, \"label\": \"t1\"}\n"
        "\n"
        "{\"context\": [0.1, 0.2], \"outcomes\": {\"0\": [1], \"1\": [0, 0, 0]}}\n");
    const auto recs = parse_trace_jsonl(good, 2);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].context.features().norm() == doctest::Approx(1.0));
    CHECK(recs[0].label == "t1");
    CHECK(recs[1].context[0] == 0.1);
    CHECK(recs[1].outcomes[1].size() == 3);

    const auto check = check_trace(recs, 2, 2);
    CHECK_FALSE(check.ok());
    CHECK(check.min_outcomes == 1);
    CHECK(check_trace(recs, 2, 1).ok());

    auto bad = [](const std::string& text) {
        std::istringstream in(text);
        return parse_trace_jsonl(in, 2);
    };
    CHECK_THROWS_AS(bad("{\"context\": [1], \"outcomes\": {\"0\": [0]}}"), DataError);
    CHECK_THROWS_AS(bad("{\"context\": [1], \"outcomes\": {\"0\": [2], \"1\": [0]}}"), DataError);
    CHECK_THROWS_AS(bad("{\"context\": [1], \"outcomes\": {\"0\": [0], \"1\": [0]}, \"extra\": 1}"), DataError);
    CHECK_THROWS_AS(bad("not json"), DataError);
    try {
        bad("{\"context\": [1], \"outcomes\": {\"0\": [0], \"1\": [0]}}\n{\"context\": [1]}");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("mixed trace dimensions are reported") {
    std::istringstream in(
        "{\"context\": [1, 0], \"outcomes\": {\"0\": [1]}}\n"
        "{\"context\": [1], \"outcomes\": {\"0\": [1]}}\n");
    const auto recs = parse_trace_jsonl(in, 1);
    CHECK_FALSE(check_trace(recs, 1, 1).ok());
}

TEST_CASE("run_step stops at success, budget or Null") {
    TraceEnv env(two_arms(), fixed_trace(5));
    HyperParams h;
    const StreamKey key{1, 0, 0, 0, Purpose::Context};

    Stubborn fail(0);
    const auto a = run_step(env, fail, 1, h, key);
    CHECK(a.pulls.size() == 5);
    CHECK(a.terminated_by == Termination::BudgetHit);
    CHECK(fail.observed == 5);
    CHECK(a.utility == doctest::Approx(-0.05));

    Stubborn win(1);
    const auto b = run_step(env, win, 1, h, key);
    CHECK(b.pulls.size() == 1);
    CHECK(b.terminated_by == Termination::Success);
    CHECK(b.utility == doctest::Approx(1.0 - 0.02));

    Stubborn nonsense(7);
    CHECK_THROWS_AS(run_step(env, nonsense, 1, h, key), StateError);
}

TEST_CASE("trace replay reads rewards in order and rejects short rows") {
    TraceRecord r;
    r.context = one_hot_context(0, 2);
    r.outcomes = {{0, 0, 1}, {1}};
    TraceEnv env(two_arms(), {r});
    SplitMix64 rng(0);
    StepDraw d{r.context, 0};
    CHECK(env.reward(d, 0, 0, rng) == 0);
    CHECK(env.reward(d, 0, 2, rng) == 1);
    CHECK_THROWS_AS(env.reward(d, 1, 1, rng), DataError);
}

TEST_CASE("trial runs are seeded and independent of policy draws") {
    SyntheticExpertEnv env;
    TrialSpec spec;
    spec.kind = PolicyKind::Random;
    spec.horizon = 50;
    spec.root_seed = 99;
    const auto a = run_trial(env, spec);
    const auto b = run_trial(env, spec);
    REQUIRE(a.steps.size() == 50);
    for (std::size_t t = 0; t < 50; ++t) {
        CHECK(a.steps[t].context == b.steps[t].context);
        CHECK(a.steps[t].utility == b.steps[t].utility);
    }
    spec.kind = PolicyKind::HighestCost;
    const auto c = run_trial(env, spec);
    for (std::size_t t = 0; t < 50; ++t) CHECK(a.steps[t].context == c.steps[t].context);
    REQUIRE(a.oracle_utility);
    CHECK(a.oracle_utility->size() == 50);

    spec.trial = 1;
    const auto d = run_trial(env, spec);
    int same = 0;
    for (std::size_t t = 0; t < 50; ++t) same += a.steps[t].context == d.steps[t].context;
    CHECK(same < 30);
}

TEST_CASE("trial spec validation") {
    SyntheticExpertEnv env;
    TrialSpec spec;
    spec.kind = PolicyKind::PromptWise;
    spec.horizon = 4;
    CHECK_THROWS_AS(run_trial(env, spec), ConfigError);
    spec.horizon = 0;
    spec.kind = PolicyKind::Greedy;
    CHECK_THROWS_AS(run_trial(env, spec), ConfigError);
    spec.horizon = 10;
    spec.params.tau_max = 0;
    CHECK_THROWS_AS(run_trial(env, spec), ConfigError);
}

TEST_CASE("observer sees every step") {
    SyntheticExpertEnv env;
    TrialSpec spec;
    spec.kind = PolicyKind::Oracle;
    spec.horizon = 25;
    int seen = 0;
    run_trial(env, spec, [&](const StepRecord& r, const Policy& p) {
        ++seen;
        CHECK(r.step_index == seen);
        CHECK(p.step_estimates().has_value());
    });
    CHECK(seen == 25);
}
