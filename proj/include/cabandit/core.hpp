#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cabandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A prompt embedding in the closed unit ball of R^d.
class Context {
public:
    static constexpr double kNormSlack = 1e-9;

    Context() = default;
    /// Throws ArgumentError if the vector is empty, non-finite, or outside the unit ball.
    explicit Context(Vector features);

    const Vector& features() const noexcept { return features_; }
    Eigen::Index dim() const noexcept { return features_.size(); }
    double operator[](Eigen::Index i) const { return features_[i]; }

    friend bool operator==(const Context& a, const Context& b) {
        return a.features_.size() == b.features_.size() && a.features_ == b.features_;
    }

private:
    Vector features_;
};

Context one_hot_context(int category, int num_categories);

/// Projects onto the unit ball: vectors with norm <= 1 are returned unchanged.
Context normalize_context(std::span<const double> raw);

struct Arm {
    int id = 0;
    double cost = 0.0;
    std::string label;
};

/// Ids must be 0..n-1 in order and costs nonnegative.
void validate_arms(std::span<const Arm> arms);

std::vector<double> arm_costs(std::span<const Arm> arms);

class Action {
public:
    static Action null() noexcept { return Action{}; }
    static Action pull(int arm);

    bool is_null() const noexcept { return !arm_.has_value(); }
    bool is_pull() const noexcept { return arm_.has_value(); }
    /// Throws StateError on a Null action.
    int arm() const;

    friend bool operator==(const Action&, const Action&) = default;

private:
    std::optional<int> arm_;
};

std::string to_string(const Action& action);

struct Observation {
    Context context;
    int reward = 0;
};

struct Pull {
    int arm = 0;
    int reward = 0;
    double cost = 0.0;
};

enum class Termination { NullChosen, BudgetHit, Success };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view s);

struct StepRecord {
    int step_index = 0;  // 1-based
    Context context;
    std::vector<Pull> pulls;
    Termination terminated_by = Termination::NullChosen;
    double utility = 0.0;

    int max_reward() const noexcept;
    double total_cost() const noexcept;
};

/// max reward over pulls (0 for none) minus lambda times the summed cost.
double step_utility(const StepRecord& record, double lambda);

/// Throws StateError when the record breaks a pull-count, success-is-last, or utility invariant.
void validate_step_record(const StepRecord& record, double lambda, int tau_max);

struct HyperParams {
    double lambda = 0.01;
    int tau_max = 5;
    int tau_exp = 1;
    std::optional<double> alpha;  // unset: practical UCB choice from delta and arm count
    double delta = 0.05;
    double kernel_sigma = 3.0;
    double kernel_beta = 1.0;
    std::optional<std::size_t> max_support;

    /// sqrt(2 ln(2|A|/delta)) unless alpha is set explicitly.
    double alpha_for(int num_arms) const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

}  // namespace cabandit
