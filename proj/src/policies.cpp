#include "cabandit/policies.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cabandit/errors.hpp"

namespace cabandit {

namespace {

constexpr std::array kAllKinds = {
    PolicyKind::Oracle,           PolicyKind::PromptWise,        PolicyKind::PromptWisePerStep,
    PolicyKind::PromptWiseKlr,    PolicyKind::Greedy,            PolicyKind::Random,
    PolicyKind::RandomTillSuccess, PolicyKind::GreedyTillSuccess, PolicyKind::LowestCost,
    PolicyKind::HighestCost,      PolicyKind::CaPakUcbTs,
};

bool step_finished(int round, int tau_max, std::span<const int> rewards) {
    return round > tau_max || std::find(rewards.begin(), rewards.end(), 1) != rewards.end();
}

void check_lengths(std::span<const double> a, std::span<const double> costs) {
    if (a.empty() || a.size() != costs.size())
        throw ArgumentError("estimate and cost lists must be nonempty and of equal length");
}

// True if (value_a, cost_a, a) ranks before (value_b, cost_b, b) when larger values win.
bool ranks_before(double value_a, double cost_a, int a, double value_b, double cost_b, int b) {
    if (value_a != value_b) return value_a > value_b;
    if (cost_a != cost_b) return cost_a < cost_b;
    return a < b;
}

void cap_support(KlrState& state, const std::optional<std::size_t>& max_support, StreamKey key) {
    if (!max_support) return;
    while (state.size() > *max_support) {
        auto rng = substream(key);
        state.remove_point(static_cast<std::size_t>(uniform_index(rng, state.size())));
        ++key.round;
    }
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Oracle: return "oracle";
        case PolicyKind::PromptWise: return "promptwise";
        case PolicyKind::PromptWisePerStep: return "promptwise_perstep";
        case PolicyKind::PromptWiseKlr: return "promptwise_klr";
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::Random: return "random";
        case PolicyKind::RandomTillSuccess: return "rts";
        case PolicyKind::GreedyTillSuccess: return "gts";
        case PolicyKind::LowestCost: return "lowest_cost";
        case PolicyKind::HighestCost: return "highest_cost";
        case PolicyKind::CaPakUcbTs: return "ca_pak_ucb_ts";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
    for (auto kind : kAllKinds)
        if (to_string(kind) == name) return kind;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::span<const PolicyKind> all_policy_kinds() { return kAllKinds; }

bool has_exploration_phase(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::PromptWise:
        case PolicyKind::PromptWisePerStep:
        case PolicyKind::PromptWiseKlr:
        case PolicyKind::CaPakUcbTs: return true;
        default: return false;
    }
}

int argmin_cost_ratio(std::span<const double> probs, std::span<const double> costs) {
    check_lengths(probs, costs);
    int best = -1;
    double best_ratio = 0.0;
    for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
        const auto i = static_cast<std::size_t>(a);
        if (!(probs[i] > 0.0)) continue;
        const double ratio = costs[i] / probs[i];
        if (best < 0 || ranks_before(-ratio, costs[i], a, -best_ratio, costs[static_cast<std::size_t>(best)], best)) {
            best = a;
            best_ratio = ratio;
        }
    }
    return best;
}

int argmax_with_cost_tiebreak(std::span<const double> scores, std::span<const double> costs) {
    check_lengths(scores, costs);
    int best = 0;
    for (int a = 1; a < static_cast<int>(scores.size()); ++a) {
        const auto i = static_cast<std::size_t>(a), b = static_cast<std::size_t>(best);
        if (ranks_before(scores[i], costs[i], a, scores[b], costs[b], best)) best = a;
    }
    return best;
}

Action oracle_action(std::span<const double> probs, std::span<const double> costs, double lambda) {
    check_lengths(probs, costs);
    if (!(lambda >= 0.0)) throw ArgumentError("lambda must be >= 0");
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < probs.size(); ++a) {
        if (!(probs[a] >= 0.0 && probs[a] <= 1.0)) throw ArgumentError("success probability outside [0, 1]");
        if (!(costs[a] >= 0.0)) throw ArgumentError("cost must be >= 0");
        if (probs[a] == 0.0 && costs[a] == 0.0)
            throw ArgumentError("arm " + std::to_string(a) + " has zero success probability and zero cost");
        best_gain = std::max(best_gain, probs[a] - lambda * costs[a]);
    }
    if (best_gain <= 0.0) return Action::null();
    return Action::pull(argmin_cost_ratio(probs, costs));
}

PolicyDecision promptwise_decide(std::span<const double> q_hat, std::span<const double> costs, double lambda,
                                 int round, int tau_max, std::span<const int> rewards_so_far) {
    check_lengths(q_hat, costs);
    if (step_finished(round, tau_max, rewards_so_far)) return PolicyDecision::null();
    double best_gain = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q_hat.size(); ++a) best_gain = std::max(best_gain, q_hat[a] - lambda * costs[a]);
    if (best_gain <= 0.0) return PolicyDecision::null();
    const int arm = argmin_cost_ratio(q_hat, costs);
    return PolicyDecision::pull(arm, q_hat[static_cast<std::size_t>(arm)]);
}

int cost_aware_choice(std::span<const double> q_hat, std::span<const double> costs, double lambda) {
    check_lengths(q_hat, costs);
    std::vector<double> gains(q_hat.size());
    for (std::size_t a = 0; a < q_hat.size(); ++a) gains[a] = q_hat[a] - lambda * costs[a];
    return argmax_with_cost_tiebreak(gains, costs);
}

int greedy_choice(std::span<const double> means, std::span<const int> pulls, std::span<const double> costs) {
    check_lengths(means, costs);
    if (pulls.size() != means.size()) throw ArgumentError("pull counts length mismatch");
    std::vector<double> untried(means.size());
    bool any_untried = false;
    for (std::size_t a = 0; a < means.size(); ++a) {
        untried[a] = pulls[a] == 0 ? 1.0 : 0.0;
        any_untried |= pulls[a] == 0;
    }
    return any_untried ? argmax_with_cost_tiebreak(untried, costs) : argmax_with_cost_tiebreak(means, costs);
}

// ---- PromptWise ---------------------------------------------------------------------------

PromptWisePolicy::PromptWisePolicy(const PolicySetup& setup, UpdateMode mode)
    : costs_(arm_costs(setup.arms)),
      params_(setup.params),
      mode_(mode),
      alpha_(setup.params.alpha_for(static_cast<int>(setup.arms.size()))),
      schedule_{static_cast<int>(setup.arms.size()), setup.params.tau_exp},
      q_hat_(setup.arms.size(), 1.0) {
    models_.reserve(setup.arms.size());
    for (std::size_t a = 0; a < setup.arms.size(); ++a) models_.emplace_back(setup.dim);
}

void PromptWisePolicy::begin_step(int step, const Context& x) {
    step_ = step;
    x_ = x;
    exploring_ = schedule_.active(step);
    committed_arm_ = -1;
    step_rewards_.clear();
    if (!exploring_) {
        for (std::size_t a = 0; a < models_.size(); ++a) q_hat_[a] = models_[a].ucb_estimate(x, alpha_);
        q_start_ = q_hat_;
    }
}

PolicyDecision PromptWisePolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    if (exploring_) {
        if (round != 1) return PolicyDecision::null();
        const int arm = schedule_.arm_for(step_);
        committed_arm_ = arm;
        return PolicyDecision::pull(arm, models_[static_cast<std::size_t>(arm)].ucb_estimate(x_, alpha_));
    }
    if (mode_ == UpdateMode::InnerRound)
        return promptwise_decide(q_hat_, costs_, params_.lambda, round, params_.tau_max, rewards_so_far);

    if (round == 1) {
        auto decision = promptwise_decide(q_start_, costs_, params_.lambda, round, params_.tau_max, rewards_so_far);
        committed_arm_ = decision.action.is_pull() ? decision.action.arm() : -1;
        return decision;
    }
    if (committed_arm_ < 0 || step_finished(round, params_.tau_max, rewards_so_far)) return PolicyDecision::null();
    return PolicyDecision::pull(committed_arm_, q_start_[static_cast<std::size_t>(committed_arm_)]);
}

void PromptWisePolicy::observe(int arm, const Context& x, int reward) {
    auto& model = models_.at(static_cast<std::size_t>(arm));
    if (!exploring_ && mode_ == UpdateMode::PerStep) {
        step_rewards_.push_back(reward);
        return;
    }
    model.add_observation(x.features(), reward);
    model.refit();
    if (!exploring_) q_hat_[static_cast<std::size_t>(arm)] = model.ucb_estimate(x, alpha_);
}

void PromptWisePolicy::end_step() {
    if (exploring_ || mode_ != UpdateMode::PerStep || step_rewards_.empty()) return;
    auto& model = models_[static_cast<std::size_t>(committed_arm_)];
    for (int r : step_rewards_) model.add_observation(x_.features(), r);
    model.refit();
    step_rewards_.clear();
}

std::optional<std::vector<double>> PromptWisePolicy::step_estimates() const {
    if (exploring_) return std::nullopt;
    return q_start_;
}

// ---- PromptWise-KLR -------------------------------------------------------------------------

PromptWiseKlrPolicy::PromptWiseKlrPolicy(const PolicySetup& setup)
    : costs_(arm_costs(setup.arms)),
      params_(setup.params),
      alpha_(setup.params.alpha_for(static_cast<int>(setup.arms.size()))),
      rng_base_(setup.rng_base),
      schedule_{static_cast<int>(setup.arms.size()), setup.params.tau_exp},
      q_hat_(setup.arms.size(), 1.0) {
    states_.reserve(setup.arms.size());
    for (std::size_t a = 0; a < setup.arms.size(); ++a)
        states_.emplace_back(KernelSpec{setup.params.kernel_sigma}, setup.params.kernel_beta);
}

double PromptWiseKlrPolicy::estimate(int arm, const Context& x) const {
    const auto& s = states_[static_cast<std::size_t>(arm)];
    return klr_predict(s, x, alpha_, exploration_bonus(s, x));
}

void PromptWiseKlrPolicy::begin_step(int step, const Context& x) {
    step_ = step;
    x_ = x;
    round_in_step_ = 0;
    exploring_ = schedule_.active(step);
    if (!exploring_) {
        for (int a = 0; a < static_cast<int>(states_.size()); ++a) q_hat_[static_cast<std::size_t>(a)] = estimate(a, x);
        q_start_ = q_hat_;
    }
}

PolicyDecision PromptWiseKlrPolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    if (exploring_) {
        if (round != 1) return PolicyDecision::null();
        const int arm = schedule_.arm_for(step_);
        return PolicyDecision::pull(arm, estimate(arm, x_));
    }
    return promptwise_decide(q_hat_, costs_, params_.lambda, round, params_.tau_max, rewards_so_far);
}

void PromptWiseKlrPolicy::observe(int arm, const Context& x, int reward) {
    auto& s = states_.at(static_cast<std::size_t>(arm));
    s.add_point(x, reward);
    StreamKey key = rng_base_;
    key.step = static_cast<std::uint64_t>(step_);
    key.round = static_cast<std::uint64_t>(++round_in_step_) << 16;
    key.purpose = Purpose::Support;
    cap_support(s, params_.max_support, key);
    s.fit();
    if (!exploring_) q_hat_[static_cast<std::size_t>(arm)] = estimate(arm, x);
}

std::optional<std::vector<double>> PromptWiseKlrPolicy::step_estimates() const {
    if (exploring_) return std::nullopt;
    return q_start_;
}

// ---- CA PAK-UCB-tS ----------------------------------------------------------------------------

CaPakUcbPolicy::CaPakUcbPolicy(const PolicySetup& setup)
    : costs_(arm_costs(setup.arms)),
      params_(setup.params),
      alpha_(setup.params.alpha_for(static_cast<int>(setup.arms.size()))),
      rng_base_(setup.rng_base),
      schedule_{static_cast<int>(setup.arms.size()), setup.params.tau_exp},
      q_hat_(setup.arms.size(), 1.0) {
    states_.reserve(setup.arms.size());
    for (std::size_t a = 0; a < setup.arms.size(); ++a)
        states_.emplace_back(KernelSpec{setup.params.kernel_sigma}, setup.params.kernel_beta);
}

void CaPakUcbPolicy::begin_step(int step, const Context& x) {
    step_ = step;
    x_ = x;
    step_rewards_.clear();
    if (schedule_.active(step)) {
        chosen_ = schedule_.arm_for(step);
        return;
    }
    for (std::size_t a = 0; a < states_.size(); ++a)
        q_hat_[a] = klr_predict(states_[a], x, alpha_, exploration_bonus(states_[a], x));
    chosen_ = cost_aware_choice(q_hat_, costs_, params_.lambda);
}

PolicyDecision CaPakUcbPolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    if (schedule_.active(step_) && round > 1) return PolicyDecision::null();
    if (step_finished(round, params_.tau_max, rewards_so_far)) return PolicyDecision::null();
    return PolicyDecision::pull(chosen_, q_hat_[static_cast<std::size_t>(chosen_)]);
}

void CaPakUcbPolicy::observe(int arm, const Context&, int reward) {
    if (arm != chosen_) throw StateError("CA PAK-UCB-tS observed an arm it did not choose");
    step_rewards_.push_back(reward);
}

void CaPakUcbPolicy::end_step() {
    if (step_rewards_.empty()) return;
    auto& s = states_[static_cast<std::size_t>(chosen_)];
    for (int r : step_rewards_) s.add_point(x_, r);
    StreamKey key = rng_base_;
    key.step = static_cast<std::uint64_t>(step_);
    key.purpose = Purpose::Support;
    cap_support(s, params_.max_support, key);
    s.fit();
    step_rewards_.clear();
}

std::optional<std::vector<double>> CaPakUcbPolicy::step_estimates() const {
    if (schedule_.active(step_)) return std::nullopt;
    return q_hat_;
}

// ---- Oracle -----------------------------------------------------------------------------------

OraclePolicy::OraclePolicy(const PolicySetup& setup)
    : costs_(arm_costs(setup.arms)), params_(setup.params), truth_(setup.truth) {
    if (!truth_) throw ConfigError("oracle policy needs an environment with known success probabilities");
}

void OraclePolicy::begin_step(int, const Context& x) {
    probs_ = truth_(x);
    action_ = oracle_action(probs_, costs_, params_.lambda);
}

PolicyDecision OraclePolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    if (action_.is_null() || step_finished(round, params_.tau_max, rewards_so_far)) return PolicyDecision::null();
    return PolicyDecision::pull(action_.arm(), probs_[static_cast<std::size_t>(action_.arm())]);
}

// ---- Greedy / GtS -----------------------------------------------------------------------------

GreedyPolicy::GreedyPolicy(const PolicySetup& setup, bool till_success)
    : costs_(arm_costs(setup.arms)),
      params_(setup.params),
      till_success_(till_success),
      successes_(setup.arms.size(), 0),
      pulls_(setup.arms.size(), 0),
      means_(setup.arms.size(), 1.0) {}

void GreedyPolicy::begin_step(int, const Context&) {}

PolicyDecision GreedyPolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    const int budget = till_success_ ? params_.tau_max : 1;
    if (step_finished(round, budget, rewards_so_far)) return PolicyDecision::null();
    const int arm = greedy_choice(means_, pulls_, costs_);
    return PolicyDecision::pull(arm, means_[static_cast<std::size_t>(arm)]);
}

void GreedyPolicy::observe(int arm, const Context&, int reward) {
    const auto a = static_cast<std::size_t>(arm);
    ++pulls_.at(a);
    successes_[a] += reward;
    means_[a] = static_cast<double>(successes_[a]) / pulls_[a];
}

// ---- Random / RtS -----------------------------------------------------------------------------

RandomPolicy::RandomPolicy(const PolicySetup& setup, bool till_success)
    : num_arms_(static_cast<int>(setup.arms.size())),
      params_(setup.params),
      till_success_(till_success),
      rng_base_(setup.rng_base) {}

void RandomPolicy::begin_step(int step, const Context&) { step_ = step; }

PolicyDecision RandomPolicy::decide_round(int round, std::span<const int> rewards_so_far) {
    const int budget = till_success_ ? params_.tau_max : 1;
    if (step_finished(round, budget, rewards_so_far)) return PolicyDecision::null();
    StreamKey key = rng_base_;
    key.step = static_cast<std::uint64_t>(step_);
    key.round = static_cast<std::uint64_t>(round);
    key.purpose = Purpose::Policy;
    auto rng = substream(key);
    const int arm = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(num_arms_)));
    return PolicyDecision::pull(arm, 1.0 / num_arms_);
}

// ---- Lowest / Highest cost ----------------------------------------------------------------------

FixedArmPolicy::FixedArmPolicy(const PolicySetup& setup, bool most_expensive) : arm_(0) {
    for (int a = 1; a < static_cast<int>(setup.arms.size()); ++a) {
        const double c = setup.arms[static_cast<std::size_t>(a)].cost;
        const double best = setup.arms[static_cast<std::size_t>(arm_)].cost;
        if (most_expensive ? c > best : c < best) arm_ = a;
    }
}

PolicyDecision FixedArmPolicy::decide_round(int round, std::span<const int>) {
    if (round != 1) return PolicyDecision::null();
    return PolicyDecision::pull(arm_);
}

// ---- factory ----------------------------------------------------------------------------------

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicySetup& setup) {
    validate_arms(setup.arms);
    setup.params.validate();
    switch (kind) {
        case PolicyKind::Oracle: return std::make_unique<OraclePolicy>(setup);
        case PolicyKind::PromptWise: return std::make_unique<PromptWisePolicy>(setup, UpdateMode::InnerRound);
        case PolicyKind::PromptWisePerStep: return std::make_unique<PromptWisePolicy>(setup, UpdateMode::PerStep);
        case PolicyKind::PromptWiseKlr: return std::make_unique<PromptWiseKlrPolicy>(setup);
        case PolicyKind::Greedy: return std::make_unique<GreedyPolicy>(setup, false);
        case PolicyKind::GreedyTillSuccess: return std::make_unique<GreedyPolicy>(setup, true);
        case PolicyKind::Random: return std::make_unique<RandomPolicy>(setup, false);
        case PolicyKind::RandomTillSuccess: return std::make_unique<RandomPolicy>(setup, true);
        case PolicyKind::LowestCost: return std::make_unique<FixedArmPolicy>(setup, false);
        case PolicyKind::HighestCost: return std::make_unique<FixedArmPolicy>(setup, true);
        case PolicyKind::CaPakUcbTs: return std::make_unique<CaPakUcbPolicy>(setup);
    }
    throw ArgumentError("unknown policy kind");
}

}  // namespace cabandit
