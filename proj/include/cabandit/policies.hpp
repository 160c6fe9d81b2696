#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cabandit/core.hpp"
#include "cabandit/glm.hpp"
#include "cabandit/kernel.hpp"
#include "cabandit/rng.hpp"

namespace cabandit {

struct PolicyDecision {
    Action action;
    std::optional<double> predicted_success;  // the estimate behind a Pull

    static PolicyDecision null() { return {}; }
    static PolicyDecision pull(int arm, std::optional<double> q = std::nullopt) { return {Action::pull(arm), q}; }
};

/// One policy instance drives one trial from a single thread.
///
/// Per step the engine calls begin_step, then decide_round for round = 1, 2, ... until the
/// policy answers Null, a reward of 1 arrives, or tau_max pulls were made; every Pull is
/// followed by observe; end_step closes the step.
class Policy {
public:
    virtual ~Policy() = default;

    virtual void begin_step(int step, const Context& x) = 0;
    virtual PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) = 0;
    virtual void observe(int arm, const Context& x, int reward) = 0;
    virtual void end_step() {}

    /// Success estimates used at the start of the current step, when the policy has them.
    virtual std::optional<std::vector<double>> step_estimates() const { return std::nullopt; }
};

enum class PolicyKind {
    Oracle,
    PromptWise,
    PromptWisePerStep,
    PromptWiseKlr,
    Greedy,
    Random,
    RandomTillSuccess,
    GreedyTillSuccess,
    LowestCost,
    HighestCost,
    CaPakUcbTs,
};

std::string_view to_string(PolicyKind kind);
/// Throws ConfigError for names outside the roster.
PolicyKind parse_policy_kind(std::string_view name);
std::span<const PolicyKind> all_policy_kinds();
/// True for policies that spend |A| * tau_exp leading steps on one pull per arm.
bool has_exploration_phase(PolicyKind kind);

using TruthFn = std::function<std::vector<double>(const Context&)>;

struct PolicySetup {
    std::vector<Arm> arms;
    HyperParams params;
    int dim = 1;
    StreamKey rng_base;  // root and trial; step/round/purpose are filled per draw
    TruthFn truth;       // success probabilities, required by the oracle only
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicySetup& setup);

// ---- decision rules ---------------------------------------------------------------------

/// argmin c_a / q_a; ties go to the lower cost, then the lower id. Arms with q_a = 0 are
/// skipped. Returns -1 if every arm has q_a = 0.
int argmin_cost_ratio(std::span<const double> probs, std::span<const double> costs);

/// argmax of `scores`; ties go to the lower cost, then the lower id.
int argmax_with_cost_tiebreak(std::span<const double> scores, std::span<const double> costs);

/// Null if max_a (q_a - lambda c_a) <= 0, otherwise argmin c_a / q_a.
Action oracle_action(std::span<const double> probs, std::span<const double> costs, double lambda);

/// One round of the inner-update rule: Null after a success, past the budget, or when no arm
/// has positive predicted gain; otherwise the cheapest arm per unit of predicted success.
PolicyDecision promptwise_decide(std::span<const double> q_hat, std::span<const double> costs, double lambda,
                                 int round, int tau_max, std::span<const int> rewards_so_far);

/// argmax_a (q_hat_a - lambda c_a), the single-assignment cost-aware choice.
int cost_aware_choice(std::span<const double> q_hat, std::span<const double> costs, double lambda);

/// Untried arms first (cheapest first), then the highest empirical success rate.
int greedy_choice(std::span<const double> means, std::span<const int> pulls, std::span<const double> costs);

/// Leading steps in which each arm is pulled once per context, tau_exp times, in id order.
struct ExplorationSchedule {
    int num_arms = 0;
    int tau_exp = 1;

    int length() const noexcept { return num_arms * tau_exp; }
    bool active(int step) const noexcept { return step >= 1 && step <= length(); }
    int arm_for(int step) const noexcept { return (step - 1) / tau_exp; }
};

// ---- concrete policies ------------------------------------------------------------------

enum class UpdateMode { InnerRound, PerStep };

/// Linear-logistic UCB policy with inner-round refits or refits at step end.
class PromptWisePolicy : public Policy {
public:
    PromptWisePolicy(const PolicySetup& setup, UpdateMode mode);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int arm, const Context& x, int reward) override;
    void end_step() override;
    std::optional<std::vector<double>> step_estimates() const override;

    const LogisticModel& model(int arm) const { return models_.at(static_cast<std::size_t>(arm)); }
    const std::vector<double>& current_estimates() const noexcept { return q_hat_; }

private:
    std::vector<double> costs_;
    HyperParams params_;
    UpdateMode mode_;
    double alpha_;
    ExplorationSchedule schedule_;
    std::vector<LogisticModel> models_;
    Context x_;
    int step_ = 0;
    bool exploring_ = false;
    std::vector<double> q_hat_;
    std::vector<double> q_start_;
    int committed_arm_ = -1;
    std::vector<int> step_rewards_;
};

/// Kernel logistic regression UCB policy with inner-round refits.
class PromptWiseKlrPolicy : public Policy {
public:
    explicit PromptWiseKlrPolicy(const PolicySetup& setup);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int arm, const Context& x, int reward) override;
    std::optional<std::vector<double>> step_estimates() const override;

    const KlrState& state(int arm) const { return states_.at(static_cast<std::size_t>(arm)); }

private:
    double estimate(int arm, const Context& x) const;

    std::vector<double> costs_;
    HyperParams params_;
    double alpha_;
    StreamKey rng_base_;
    ExplorationSchedule schedule_;
    std::vector<KlrState> states_;
    Context x_;
    int step_ = 0;
    bool exploring_ = false;
    std::vector<double> q_hat_;
    std::vector<double> q_start_;
    int round_in_step_ = 0;
};

/// Kernel UCB single-assignment choice, repeated on the same arm until success or budget.
class CaPakUcbPolicy : public Policy {
public:
    explicit CaPakUcbPolicy(const PolicySetup& setup);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int arm, const Context& x, int reward) override;
    void end_step() override;
    std::optional<std::vector<double>> step_estimates() const override;

private:
    std::vector<double> costs_;
    HyperParams params_;
    double alpha_;
    StreamKey rng_base_;
    ExplorationSchedule schedule_;
    std::vector<KlrState> states_;
    Context x_;
    int step_ = 0;
    int chosen_ = -1;
    std::vector<double> q_hat_;
    std::vector<int> step_rewards_;
};

class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(const PolicySetup& setup);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int, const Context&, int) override {}
    std::optional<std::vector<double>> step_estimates() const override { return probs_; }

private:
    std::vector<double> costs_;
    HyperParams params_;
    TruthFn truth_;
    std::vector<double> probs_;
    Action action_;
};

/// Greedy on empirical success rates; single pull per step, or until success when till_success.
class GreedyPolicy : public Policy {
public:
    GreedyPolicy(const PolicySetup& setup, bool till_success);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int arm, const Context& x, int reward) override;

    double mean(int arm) const { return means_.at(static_cast<std::size_t>(arm)); }
    int successes(int arm) const { return successes_.at(static_cast<std::size_t>(arm)); }
    int pulls(int arm) const { return pulls_.at(static_cast<std::size_t>(arm)); }

private:
    std::vector<double> costs_;
    HyperParams params_;
    bool till_success_;
    std::vector<int> successes_;
    std::vector<int> pulls_;
    std::vector<double> means_;
};

class RandomPolicy : public Policy {
public:
    RandomPolicy(const PolicySetup& setup, bool till_success);

    void begin_step(int step, const Context& x) override;
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int, const Context&, int) override {}

private:
    int num_arms_;
    HyperParams params_;
    bool till_success_;
    StreamKey rng_base_;
    int step_ = 0;
};

/// Always the same arm, one pull per step.
class FixedArmPolicy : public Policy {
public:
    FixedArmPolicy(const PolicySetup& setup, bool most_expensive);

    void begin_step(int, const Context&) override {}
    PolicyDecision decide_round(int round, std::span<const int> rewards_so_far) override;
    void observe(int, const Context&, int) override {}

    int arm() const noexcept { return arm_; }

private:
    int arm_;
};

}  // namespace cabandit
