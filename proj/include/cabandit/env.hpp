#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cabandit/core.hpp"
#include "cabandit/policies.hpp"
#include "cabandit/rng.hpp"

namespace cabandit {

// ---- contexts -------------------------------------------------------------------------------

enum class SamplerKind { UnitSphereUniform, OneHotUniform, Custom };

struct ContextSampler {
    SamplerKind kind = SamplerKind::UnitSphereUniform;
    int dim = 1;                  // sphere dimension, or number of one-hot categories
    std::vector<Context> custom;  // cycled in order by step
};

/// Throws ConfigError for an empty custom list.
Context sample_context(const ContextSampler& sampler, SplitMix64& rng, int step);

// ---- environments ---------------------------------------------------------------------------

/// What the environment drew for one step: the context and, for replays, the trace row.
struct StepDraw {
    Context context;
    int row = -1;
};

class Environment {
public:
    explicit Environment(std::vector<Arm> arms, int dim);
    virtual ~Environment() = default;

    const std::vector<Arm>& arms() const noexcept { return arms_; }
    int num_arms() const noexcept { return static_cast<int>(arms_.size()); }
    int dim() const noexcept { return dim_; }

    virtual StepDraw draw(int step, SplitMix64& rng) const = 0;
    /// Reward of the `nth_pull`-th (0-based) pull of `arm` within the step.
    virtual int reward(const StepDraw& draw, int arm, int nth_pull, SplitMix64& rng) const = 0;
    /// Ground-truth success probabilities per arm; nullopt when unknown.
    virtual std::optional<std::vector<double>> success_probs(const Context& x) const;
    virtual bool has_ground_truth() const { return false; }

private:
    std::vector<Arm> arms_;
    int dim_;
};

/// q_a(x) = mu(<theta*_a, x>), optionally floored at q0.
class SyntheticLogisticEnv : public Environment {
public:
    SyntheticLogisticEnv(std::vector<Arm> arms, Matrix theta_star, ContextSampler sampler,
                         std::optional<double> q_floor = std::nullopt);

    StepDraw draw(int step, SplitMix64& rng) const override;
    int reward(const StepDraw& draw, int arm, int nth_pull, SplitMix64& rng) const override;
    std::optional<std::vector<double>> success_probs(const Context& x) const override;
    bool has_ground_truth() const override { return true; }

    double success_prob(int arm, const Context& x) const;
    const Matrix& theta_star() const noexcept { return theta_star_; }
    std::optional<double> q_floor() const noexcept { return q_floor_; }

private:
    Matrix theta_star_;  // one row per arm
    ContextSampler sampler_;
    std::optional<double> q_floor_;
};

/// i.i.d. standard normal entries, each row rescaled to `norm`.
Matrix draw_theta_star(int num_arms, int dim, double norm, SplitMix64& rng);

/// Five prompt types as one-hot contexts; expert i is always clean on types j <= i and
/// clean with probability 0.5 on the rest.
class SyntheticExpertEnv : public Environment {
public:
    static constexpr int kNumTypes = 5;
    static const std::vector<double>& default_costs();

    explicit SyntheticExpertEnv(std::vector<Arm> arms);
    SyntheticExpertEnv();

    StepDraw draw(int step, SplitMix64& rng) const override;
    int reward(const StepDraw& draw, int arm, int nth_pull, SplitMix64& rng) const override;
    std::optional<std::vector<double>> success_probs(const Context& x) const override;
    bool has_ground_truth() const override { return true; }

    /// q(expert, type), both 0-based.
    static double success_prob(int expert, int type);
};

std::vector<Arm> default_expert_arms();

/// One recorded task: its context and pre-sampled binary outcomes per arm.
struct TraceRecord {
    Context context;
    std::vector<std::vector<int>> outcomes;  // outcomes[arm][n]
    std::string label;
};

/// Parses line-delimited JSON rows {"context": [...], "outcomes": {"<arm>": [0/1...]}, "label": "..."}.
/// Contexts outside the unit ball are normalized. Throws DataError with the line number.
std::vector<TraceRecord> parse_trace_jsonl(std::istream& in, int num_arms);
std::vector<TraceRecord> load_trace_jsonl(const std::string& path, int num_arms);

struct TraceCheck {
    std::size_t rows = 0;
    std::size_t min_outcomes = 0;
    std::vector<std::string> problems;

    bool ok() const noexcept { return problems.empty(); }
};

/// Every row must give at least tau_max outcomes for each arm and share one context dimension.
TraceCheck check_trace(const std::vector<TraceRecord>& records, int num_arms, int tau_max);

/// Replays recorded outcomes; rows are drawn uniformly with replacement.
class TraceEnv : public Environment {
public:
    TraceEnv(std::vector<Arm> arms, std::vector<TraceRecord> records);

    StepDraw draw(int step, SplitMix64& rng) const override;
    /// Throws DataError when the row has fewer than nth_pull + 1 outcomes for the arm.
    int reward(const StepDraw& draw, int arm, int nth_pull, SplitMix64& rng) const override;

    const std::vector<TraceRecord>& records() const noexcept { return records_; }

private:
    std::vector<TraceRecord> records_;
};

// ---- protocol engine ----------------------------------------------------------------------------

struct TrialResult {
    std::string algorithm;
    int trial = 0;
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<StepRecord> steps;
    std::optional<std::vector<double>> oracle_utility;  // u*(x_t), synthetic environments only
};

/// Runs one step of the interaction protocol. `key` carries root seed and trial.
StepRecord run_step(const Environment& env, Policy& policy, int step, const HyperParams& params,
                    const StreamKey& key);

using StepObserver = std::function<void(const StepRecord&, const Policy&)>;

struct TrialSpec {
    PolicyKind kind = PolicyKind::PromptWise;
    std::string algorithm;  // label in outputs; defaults to the kind's name
    HyperParams params;
    int horizon = 0;
    std::uint64_t root_seed = 0;
    int trial = 0;
    std::string config_digest;
};

/// Builds the policy for `spec` against `env`, then runs `spec.horizon` steps.
/// Policies with an exploration phase spend the first |A| * tau_exp of those steps on it.
TrialResult run_trial(const Environment& env, const TrialSpec& spec, const StepObserver& observer = {});

/// Same, with a caller-owned policy.
TrialResult run_trial(const Environment& env, Policy& policy, const TrialSpec& spec,
                      const StepObserver& observer = {});

PolicySetup policy_setup_for(const Environment& env, const TrialSpec& spec);

}  // namespace cabandit
