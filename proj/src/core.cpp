#include "cabandit/core.hpp"

#include <algorithm>
#include <cmath>

#include "cabandit/errors.hpp"

namespace cabandit {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Data: return "data error";
        case ErrorKind::Numerical: return "numerical error";
        case ErrorKind::State: return "state error";
    }
    return "error";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Numerical: return 4;
        default: return 1;
    }
}

void rethrow_with_context(std::exception_ptr error, const std::string& context) {
    try {
        std::rethrow_exception(error);
    } catch (const NumericalError& e) {
        throw NumericalError(NumericalError::Verbatim{}, context + ": " + e.what(), e.residual());
    } catch (const Error& e) {
        const std::string m = context + ": " + e.what();
        switch (e.kind()) {
            case ErrorKind::Argument: throw ArgumentError(m);
            case ErrorKind::Config: throw ConfigError(m);
            case ErrorKind::Data: throw DataError(m);
            case ErrorKind::State: throw StateError(m);
            case ErrorKind::Numerical: break;
        }
        throw Error(e.kind(), m);
    } catch (const std::exception& e) {
        throw StateError(context + ": " + e.what());
    }
}

Context::Context(Vector features) : features_(std::move(features)) {
    if (features_.size() == 0) throw ArgumentError("context must have dimension >= 1");
    if (!features_.allFinite()) throw ArgumentError("context has a non-finite component");
    if (features_.norm() > 1.0 + kNormSlack)
        throw ArgumentError("context norm " + std::to_string(features_.norm()) + " exceeds 1");
}

Context one_hot_context(int category, int num_categories) {
    if (num_categories < 1 || category < 0 || category >= num_categories)
        throw ArgumentError("one-hot category " + std::to_string(category) + " out of range [0, " +
                            std::to_string(num_categories) + ")");
    Vector v = Vector::Zero(num_categories);
    v[category] = 1.0;
    return Context(std::move(v));
}

Context normalize_context(std::span<const double> raw) {
    if (raw.empty()) throw DataError("empty context vector");
    Vector v(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) throw DataError("context component " + std::to_string(i) + " is not finite");
        v[static_cast<Eigen::Index>(i)] = raw[i];
    }
    const double norm = v.norm();
    if (norm > 1.0) v /= norm;
    return Context(std::move(v));
}

void validate_arms(std::span<const Arm> arms) {
    if (arms.empty()) throw ConfigError("arm set is empty");
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (arms[i].id != static_cast<int>(i))
            throw ConfigError("arm ids must be contiguous from 0; found " + std::to_string(arms[i].id) +
                              " at position " + std::to_string(i));
        if (!(arms[i].cost >= 0.0) || !std::isfinite(arms[i].cost))
            throw ConfigError("arm " + std::to_string(i) + " has invalid cost");
    }
}

std::vector<double> arm_costs(std::span<const Arm> arms) {
    std::vector<double> costs;
    costs.reserve(arms.size());
    for (const auto& a : arms) costs.push_back(a.cost);
    return costs;
}

Action Action::pull(int arm) {
    if (arm < 0) throw ArgumentError("arm id must be nonnegative");
    Action a;
    a.arm_ = arm;
    return a;
}

int Action::arm() const {
    if (!arm_) throw StateError("null action has no arm");
    return *arm_;
}

std::string to_string(const Action& action) {
    return action.is_null() ? std::string("Null") : "Pull(" + std::to_string(action.arm()) + ")";
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::NullChosen: return "null";
        case Termination::BudgetHit: return "budget";
        case Termination::Success: return "success";
    }
    return "?";
}

Termination parse_termination(std::string_view s) {
    if (s == "null") return Termination::NullChosen;
    if (s == "budget") return Termination::BudgetHit;
    if (s == "success") return Termination::Success;
    throw DataError("unknown termination tag '" + std::string(s) + "'");
}

int StepRecord::max_reward() const noexcept {
    int best = 0;
    for (const auto& p : pulls) best = std::max(best, p.reward);
    return best;
}

double StepRecord::total_cost() const noexcept {
    double total = 0.0;
    for (const auto& p : pulls) total += p.cost;
    return total;
}

double step_utility(const StepRecord& record, double lambda) {
    return static_cast<double>(record.max_reward()) - lambda * record.total_cost();
}

void validate_step_record(const StepRecord& record, double lambda, int tau_max) {
    const auto n = static_cast<int>(record.pulls.size());
    const auto where = "step " + std::to_string(record.step_index) + ": ";
    if (n > tau_max) throw StateError(where + "pull count exceeds round budget");
    for (int i = 0; i < n; ++i) {
        const auto& p = record.pulls[static_cast<std::size_t>(i)];
        if (p.reward != 0 && p.reward != 1) throw StateError(where + "non-binary reward");
        if (p.reward == 1 && i != n - 1) throw StateError(where + "pull after a success");
    }
    if (std::abs(record.utility - step_utility(record, lambda)) > 1e-12)
        throw StateError(where + "utility does not match pulls");
    const bool success = n > 0 && record.pulls.back().reward == 1;
    if (success != (record.terminated_by == Termination::Success))
        throw StateError(where + "termination tag inconsistent with rewards");
    if (record.terminated_by == Termination::BudgetHit && n != tau_max)
        throw StateError(where + "budget termination before tau_max pulls");
}

double HyperParams::alpha_for(int num_arms) const {
    if (alpha) return *alpha;
    return std::sqrt(2.0 * std::log(2.0 * num_arms / delta));
}

void HyperParams::validate() const {
    auto fail = [](const char* key, const char* why) {
        throw ConfigError(std::string("hyper.") + key + ": " + why);
    };
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda", "must be >= 0");
    if (tau_max < 1) fail("tau_max", "must be >= 1");
    if (tau_exp < 1) fail("tau_exp", "must be >= 1");
    if (alpha && !(*alpha >= 0.0)) fail("alpha", "must be >= 0");
    if (!(delta > 0.0 && delta < 1.0)) fail("delta", "must lie in (0, 1)");
    if (!(kernel_sigma > 0.0)) fail("kernel_sigma", "must be > 0");
    if (!(kernel_beta > 0.0)) fail("kernel_beta", "must be > 0");
    if (max_support && *max_support < 1) fail("max_support", "must be >= 1");
}

}  // namespace cabandit
