#include "cabandit/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cabandit/analysis.hpp"
#include "cabandit/errors.hpp"
#include "cabandit/glm.hpp"

namespace cabandit {

Context sample_context(const ContextSampler& sampler, SplitMix64& rng, int step) {
    switch (sampler.kind) {
        case SamplerKind::UnitSphereUniform: {
            if (sampler.dim < 1) throw ConfigError("env.d must be >= 1");
            Vector v(sampler.dim);
            double norm = 0.0;
            do {
                for (int i = 0; i < sampler.dim; ++i) v[i] = standard_normal(rng);
                norm = v.norm();
            } while (norm == 0.0);
            v /= norm;
            // Rounding can leave the norm a few ulps above 1; the context check allows that.
            return Context(std::move(v));
        }
        case SamplerKind::OneHotUniform: {
            if (sampler.dim < 1) throw ConfigError("one-hot sampler needs at least one category");
            const auto k = uniform_index(rng, static_cast<std::uint64_t>(sampler.dim));
            return one_hot_context(static_cast<int>(k), sampler.dim);
        }
        case SamplerKind::Custom: {
            if (sampler.custom.empty()) throw ConfigError("env.contexts is empty");
            const auto n = sampler.custom.size();
            const auto idx = static_cast<std::size_t>(std::max(step - 1, 0)) % n;
            return sampler.custom[idx];
        }
    }
    throw ConfigError("unknown context sampler");
}

Environment::Environment(std::vector<Arm> arms, int dim) : arms_(std::move(arms)), dim_(dim) {
    validate_arms(arms_);
    if (dim_ < 1) throw ConfigError("env.d must be >= 1");
}

std::optional<std::vector<double>> Environment::success_probs(const Context&) const { return std::nullopt; }

// ---- synthetic logistic ----

namespace {

int sampler_dim(const ContextSampler& s) {
    if (s.kind == SamplerKind::Custom) {
        if (s.custom.empty()) throw ConfigError("env.contexts is empty");
        const auto d = s.custom.front().dim();
        for (const auto& c : s.custom)
            if (c.dim() != d) throw ConfigError("env.contexts have different dimensions");
        return static_cast<int>(d);
    }
    return s.dim;
}

}  // namespace

SyntheticLogisticEnv::SyntheticLogisticEnv(std::vector<Arm> arms, Matrix theta_star, ContextSampler sampler,
                                           std::optional<double> q_floor)
    : Environment(std::move(arms), sampler_dim(sampler)),
      theta_star_(std::move(theta_star)),
      sampler_(std::move(sampler)),
      q_floor_(q_floor) {
    if (theta_star_.rows() != num_arms() || theta_star_.cols() != dim())
        throw ConfigError("env.theta must have one row per arm and env.d columns");
    if (!theta_star_.allFinite()) throw ConfigError("env.theta has non-finite entries");
    if (q_floor_ && !(*q_floor_ > 0.0 && *q_floor_ < 1.0)) throw ConfigError("env.q_floor must lie in (0, 1)");
}

StepDraw SyntheticLogisticEnv::draw(int step, SplitMix64& rng) const {
    return StepDraw{sample_context(sampler_, rng, step), -1};
}

double SyntheticLogisticEnv::success_prob(int arm, const Context& x) const {
    if (x.dim() != dim()) throw ArgumentError("context dimension differs from the environment");
    const double q = logistic(theta_star_.row(arm).dot(x.features()));
    return q_floor_ ? std::max(q, *q_floor_) : q;
}

int SyntheticLogisticEnv::reward(const StepDraw& draw, int arm, int, SplitMix64& rng) const {
    return bernoulli(rng, success_prob(arm, draw.context));
}

std::optional<std::vector<double>> SyntheticLogisticEnv::success_probs(const Context& x) const {
    std::vector<double> q(static_cast<std::size_t>(num_arms()));
    for (int a = 0; a < num_arms(); ++a) q[static_cast<std::size_t>(a)] = success_prob(a, x);
    return q;
}

Matrix draw_theta_star(int num_arms, int dim, double norm, SplitMix64& rng) {
    if (!(norm >= 0.0)) throw ConfigError("env.theta_norm must be >= 0");
    Matrix theta(num_arms, dim);
    for (int a = 0; a < num_arms; ++a) {
        double n = 0.0;
        do {
            for (int j = 0; j < dim; ++j) theta(a, j) = standard_normal(rng);
            n = theta.row(a).norm();
        } while (n == 0.0);
        theta.row(a) *= norm / n;
    }
    return theta;
}

// ---- synthetic experts ----

const std::vector<double>& SyntheticExpertEnv::default_costs() {
    static const std::vector<double> costs{0.75, 1.37, 1.60, 12.50, 90.00};
    return costs;
}

std::vector<Arm> default_expert_arms() {
    std::vector<Arm> arms;
    const auto& costs = SyntheticExpertEnv::default_costs();
    for (std::size_t i = 0; i < costs.size(); ++i)
        arms.push_back(Arm{static_cast<int>(i), costs[i], "expert_" + std::to_string(i + 1)});
    return arms;
}

SyntheticExpertEnv::SyntheticExpertEnv(std::vector<Arm> arms) : Environment(std::move(arms), kNumTypes) {
    if (num_arms() != kNumTypes) throw ConfigError("expert_t2i needs exactly 5 arms");
}

SyntheticExpertEnv::SyntheticExpertEnv() : SyntheticExpertEnv(default_expert_arms()) {}

double SyntheticExpertEnv::success_prob(int expert, int type) {
    if (expert < 0 || expert >= kNumTypes || type < 0 || type >= kNumTypes)
        throw ArgumentError("expert or prompt type out of range");
    return expert >= type ? 1.0 : 0.5;
}

namespace {

int prompt_type(const Context& x) {
    Eigen::Index k = 0;
    x.features().maxCoeff(&k);
    return static_cast<int>(k);
}

}  // namespace

StepDraw SyntheticExpertEnv::draw(int, SplitMix64& rng) const {
    const auto k = uniform_index(rng, kNumTypes);
    return StepDraw{one_hot_context(static_cast<int>(k), kNumTypes), -1};
}

int SyntheticExpertEnv::reward(const StepDraw& draw, int arm, int, SplitMix64& rng) const {
    return bernoulli(rng, success_prob(arm, prompt_type(draw.context)));
}

std::optional<std::vector<double>> SyntheticExpertEnv::success_probs(const Context& x) const {
    if (x.dim() != kNumTypes) throw ArgumentError("expert_t2i contexts are 5-dimensional");
    const int type = prompt_type(x);
    std::vector<double> q(kNumTypes);
    for (int i = 0; i < kNumTypes; ++i) q[static_cast<std::size_t>(i)] = success_prob(i, type);
    return q;
}

// ---- traces ----

std::vector<TraceRecord> parse_trace_jsonl(std::istream& in, int num_arms) {
    using nlohmann::json;
    std::vector<TraceRecord> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "trace line " + std::to_string(lineno) + ": ";
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(where + "invalid JSON (" + e.what() + ")");
        }
        if (!j.is_object()) throw DataError(where + "expected an object");
        for (const auto& [key, _] : j.items())
            if (key != "context" && key != "outcomes" && key != "label") throw DataError(where + "unknown field '" + key + "'");
        if (!j.contains("context") || !j["context"].is_array()) throw DataError(where + "missing context array");
        if (!j.contains("outcomes") || !j["outcomes"].is_object()) throw DataError(where + "missing outcomes object");

        std::vector<double> raw;
        for (const auto& v : j["context"]) {
            if (!v.is_number()) throw DataError(where + "context entries must be numbers");
            raw.push_back(v.get<double>());
        }
        TraceRecord rec;
        try {
            rec.context = normalize_context(raw);
        } catch (const DataError& e) {
            throw DataError(where + e.what());
        }

        rec.outcomes.resize(static_cast<std::size_t>(num_arms));
        std::vector<bool> seen(static_cast<std::size_t>(num_arms), false);
        for (const auto& [key, list] : j["outcomes"].items()) {
            int arm = -1;
            try {
                std::size_t used = 0;
                arm = std::stoi(key, &used);
                if (used != key.size()) arm = -1;
            } catch (const std::exception&) {
                arm = -1;
            }
            if (arm < 0 || arm >= num_arms) throw DataError(where + "outcome key '" + key + "' is not an arm id");
            if (!list.is_array()) throw DataError(where + "outcomes for arm " + key + " must be a list");
            auto& out = rec.outcomes[static_cast<std::size_t>(arm)];
            for (const auto& v : list) {
                if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
                    throw DataError(where + "outcomes must be 0 or 1");
                out.push_back(v.get<int>());
            }
            seen[static_cast<std::size_t>(arm)] = true;
        }
        for (int a = 0; a < num_arms; ++a)
            if (!seen[static_cast<std::size_t>(a)]) throw DataError(where + "no outcomes for arm " + std::to_string(a));
        if (j.contains("label")) {
            if (!j["label"].is_string()) throw DataError(where + "label must be a string");
            rec.label = j["label"].get<std::string>();
        }
        rows.push_back(std::move(rec));
    }
    return rows;
}

std::vector<TraceRecord> load_trace_jsonl(const std::string& path, int num_arms) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file " + path);
    return parse_trace_jsonl(in, num_arms);
}

TraceCheck check_trace(const std::vector<TraceRecord>& records, int num_arms, int tau_max) {
    TraceCheck out;
    out.rows = records.size();
    if (records.empty()) {
        out.problems.push_back("trace has no rows");
        return out;
    }
    out.min_outcomes = std::numeric_limits<std::size_t>::max();
    const auto d = records.front().context.dim();
    for (std::size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        const std::string where = "row " + std::to_string(k + 1) + ": ";
        if (r.context.dim() != d) out.problems.push_back(where + "context dimension differs from row 1");
        if (static_cast<int>(r.outcomes.size()) != num_arms) {
            out.problems.push_back(where + "wrong number of arms");
            continue;
        }
        for (int a = 0; a < num_arms; ++a) {
            const auto m = r.outcomes[static_cast<std::size_t>(a)].size();
            out.min_outcomes = std::min(out.min_outcomes, m);
            if (m < static_cast<std::size_t>(tau_max))
                out.problems.push_back(where + "arm " + std::to_string(a) + " has " + std::to_string(m) +
                                       " outcomes, fewer than tau_max = " + std::to_string(tau_max));
        }
    }
    return out;
}

namespace {

int trace_dim(const std::vector<TraceRecord>& records) {
    if (records.empty()) throw DataError("trace has no rows");
    return static_cast<int>(records.front().context.dim());
}

}  // namespace

TraceEnv::TraceEnv(std::vector<Arm> arms, std::vector<TraceRecord> records)
    : Environment(std::move(arms), trace_dim(records)), records_(std::move(records)) {
    for (std::size_t k = 0; k < records_.size(); ++k) {
        if (records_[k].context.dim() != dim())
            throw DataError("trace row " + std::to_string(k + 1) + " has a different context dimension");
        if (static_cast<int>(records_[k].outcomes.size()) != num_arms())
            throw DataError("trace row " + std::to_string(k + 1) + " does not cover every arm");
    }
}

StepDraw TraceEnv::draw(int, SplitMix64& rng) const {
    const auto row = uniform_index(rng, records_.size());
    return StepDraw{records_[row].context, static_cast<int>(row)};
}

int TraceEnv::reward(const StepDraw& draw, int arm, int nth_pull, SplitMix64&) const {
    if (draw.row < 0 || static_cast<std::size_t>(draw.row) >= records_.size())
        throw StateError("trace step without a row");
    const auto& out = records_[static_cast<std::size_t>(draw.row)].outcomes.at(static_cast<std::size_t>(arm));
    if (nth_pull < 0 || static_cast<std::size_t>(nth_pull) >= out.size())
        throw DataError("trace row " + std::to_string(draw.row + 1) + " has no outcome #" +
                        std::to_string(nth_pull + 1) + " for arm " + std::to_string(arm));
    return out[static_cast<std::size_t>(nth_pull)];
}

// ---- engine ----

StepRecord run_step(const Environment& env, Policy& policy, int step, const HyperParams& params,
                    const StreamKey& key) {
    StepRecord rec;
    rec.step_index = step;

    StreamKey ck = key;
    ck.step = static_cast<std::uint64_t>(step);
    ck.round = 0;
    ck.purpose = Purpose::Context;
    auto crng = substream(ck);
    const StepDraw draw = env.draw(step, crng);
    rec.context = draw.context;

    policy.begin_step(step, draw.context);
    std::vector<int> rewards;
    std::vector<int> nth(static_cast<std::size_t>(env.num_arms()), 0);
    rec.terminated_by = Termination::NullChosen;
    for (int round = 1;; ++round) {
        if (round > params.tau_max) {
            rec.terminated_by = Termination::BudgetHit;
            break;
        }
        const PolicyDecision d = policy.decide_round(round, rewards);
        if (d.action.is_null()) {
            rec.terminated_by = Termination::NullChosen;
            break;
        }
        const int arm = d.action.arm();
        if (arm < 0 || arm >= env.num_arms()) throw StateError("policy chose unknown arm " + std::to_string(arm));

        StreamKey rk = ck;
        rk.round = static_cast<std::uint64_t>(round);
        rk.purpose = Purpose::Reward;
        auto rrng = substream(rk);
        const int r = env.reward(draw, arm, nth[static_cast<std::size_t>(arm)]++, rrng);
        rec.pulls.push_back(Pull{arm, r, env.arms()[static_cast<std::size_t>(arm)].cost});
        policy.observe(arm, draw.context, r);
        rewards.push_back(r);
        if (r == 1) {
            rec.terminated_by = Termination::Success;
            break;
        }
    }
    policy.end_step();
    rec.utility = step_utility(rec, params.lambda);
    return rec;
}

PolicySetup policy_setup_for(const Environment& env, const TrialSpec& spec) {
    PolicySetup setup;
    setup.arms = env.arms();
    setup.params = spec.params;
    setup.dim = env.dim();
    setup.rng_base = StreamKey{spec.root_seed, static_cast<std::uint64_t>(spec.trial), 0, 0, Purpose::Policy};
    if (env.has_ground_truth())
        setup.truth = [&env](const Context& x) { return *env.success_probs(x); };
    return setup;
}

namespace {

void check_trial_spec(const Environment& env, const TrialSpec& spec) {
    spec.params.validate();
    if (spec.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (has_exploration_phase(spec.kind) && spec.horizon < env.num_arms() * spec.params.tau_exp)
        throw ConfigError("horizon " + std::to_string(spec.horizon) + " is shorter than the exploration phase (" +
                          std::to_string(env.num_arms() * spec.params.tau_exp) + " steps) of " +
                          std::string(to_string(spec.kind)));
}

}  // namespace

TrialResult run_trial(const Environment& env, const TrialSpec& spec, const StepObserver& observer) {
    check_trial_spec(env, spec);
    auto policy = make_policy(spec.kind, policy_setup_for(env, spec));
    return run_trial(env, *policy, spec, observer);
}

TrialResult run_trial(const Environment& env, Policy& policy, const TrialSpec& spec, const StepObserver& observer) {
    check_trial_spec(env, spec);
    TrialResult out;
    out.algorithm = spec.algorithm.empty() ? std::string(to_string(spec.kind)) : spec.algorithm;
    out.trial = spec.trial;
    out.seed = spec.root_seed;
    out.config_digest = spec.config_digest;
    out.steps.reserve(static_cast<std::size_t>(spec.horizon));

    const bool truth = env.has_ground_truth();
    const auto costs = arm_costs(env.arms());
    if (truth) out.oracle_utility.emplace().reserve(static_cast<std::size_t>(spec.horizon));

    const StreamKey key{spec.root_seed, static_cast<std::uint64_t>(spec.trial), 0, 0, Purpose::Context};
    for (int t = 1; t <= spec.horizon; ++t) {
        StepRecord rec;
        try {
            rec = run_step(env, policy, t, spec.params, key);
        } catch (...) {
            rethrow_with_context(std::current_exception(), "step " + std::to_string(t));
        }
        if (truth) out.oracle_utility->push_back(optimal_utility(*env.success_probs(rec.context), costs, spec.params.lambda));
        if (observer) observer(rec, policy);
        out.steps.push_back(std::move(rec));
    }
    return out;
}

}  // namespace cabandit
