#include "cabandit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cabandit/errors.hpp"
#include "cabandit/policies.hpp"

namespace cabandit {

namespace {

void check_instance(std::span<const double> probs, std::span<const double> costs, double lambda) {
    if (probs.empty() || probs.size() != costs.size())
        throw ArgumentError("probability and cost lists must be nonempty and of equal length");
    if (!(lambda >= 0.0)) throw ArgumentError("lambda must be >= 0");
    for (std::size_t a = 0; a < probs.size(); ++a) {
        if (!(probs[a] >= 0.0 && probs[a] <= 1.0)) throw ArgumentError("success probability outside [0, 1]");
        if (!(costs[a] >= 0.0)) throw ArgumentError("cost must be >= 0");
    }
}

}  // namespace

MdpOracleResult mdp_value_iteration(std::span<const double> probs, std::span<const double> costs, double lambda,
                                    double tol, int max_iter) {
    check_instance(probs, costs, lambda);
    if (!(tol > 0.0)) throw ArgumentError("tolerance must be > 0");

    const std::size_t n = probs.size();
    double v = 0.0;
    double change = 0.0;
    int iter = 0;
    bool converged = false;
    while (iter < max_iter) {
        double next = 0.0;
        for (std::size_t a = 0; a < n; ++a)
            next = std::max(next, probs[a] - lambda * costs[a] + (1.0 - probs[a]) * v);
        ++iter;
        change = std::abs(next - v);
        v = next;
        if (change < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw NumericalError("value iteration did not converge", change);

    MdpOracleResult out;
    out.value_at_zero = v;
    out.iterations = iter;

    // Q_a - V = q_a (1 - V) - lambda c_a is exact in the limit; comparing that gap avoids
    // rounding V twice.
    int best = -1;
    double best_gap = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        if (probs[a] == 0.0) continue;
        const double gap = probs[a] * (1.0 - v) - lambda * costs[a];
        if (best < 0) {
            best = static_cast<int>(a);
            best_gap = gap;
            continue;
        }
        const double scale = std::max({1.0, std::abs(gap), std::abs(best_gap)});
        if (gap > best_gap + 1e-12 * scale) {
            best = static_cast<int>(a);
            best_gap = gap;
        } else if (std::abs(gap - best_gap) <= 1e-12 * scale) {
            const auto b = static_cast<std::size_t>(best);
            if (costs[a] < costs[b]) {
                best = static_cast<int>(a);
                best_gap = gap;
            }
        }
    }
    out.best_action = (v > 0.0 && best >= 0) ? Action::pull(best) : Action::null();
    return out;
}

double optimal_utility(std::span<const double> probs, std::span<const double> costs, double lambda) {
    const Action a = oracle_action(probs, costs, lambda);
    if (a.is_null()) return 0.0;
    const auto i = static_cast<std::size_t>(a.arm());
    return 1.0 - lambda * costs[i] / probs[i];
}

double truncated_utility(double q, double c, double lambda, int tau_max) {
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("truncated utility needs q in (0, 1]");
    if (tau_max < 1) throw ArgumentError("tau_max must be >= 1");
    const double tail = std::pow(1.0 - q, tau_max);
    return 1.0 - lambda * c / q - tail * (q - lambda * c) / q;
}

std::vector<double> regret_curve(const TrialResult& trial) {
    if (!trial.oracle_utility) throw StateError("regret curve needs oracle utilities (synthetic environment)");
    const auto& ustar = *trial.oracle_utility;
    if (ustar.size() != trial.steps.size()) throw StateError("oracle utility series length differs from step count");
    std::vector<double> out(ustar.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < ustar.size(); ++t) {
        acc += ustar[t] - trial.steps[t].utility;
        out[t] = acc;
    }
    return out;
}

double practical_alpha(int num_arms, double delta) {
    if (num_arms < 1) throw ArgumentError("need at least one arm");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
    return std::sqrt(2.0 * std::log(2.0 * num_arms / delta));
}

TheoryParams theory_params(const TheoryInputs& in) {
    if (in.d < 1 || in.num_arms < 1 || in.horizon < 1 || in.tau_max < 1)
        throw ArgumentError("d, num_arms, T and tau_max must be positive");
    if (!(in.q0 > 0.0 && in.q0 < 1.0)) throw ArgumentError("q0 must lie in (0, 1)");
    if (!(in.kappa > 0.0)) throw ArgumentError("kappa must be > 0");

    TheoryParams out;
    out.inputs = in;
    out.alpha_practical = practical_alpha(in.num_arms, in.delta);

    const double d = in.d;
    const double T = static_cast<double>(in.horizon);
    out.alpha_theorem =
        std::sqrt(0.5 * d * std::log1p(2.0 * in.tau_max * T / d) + std::log(in.num_arms / in.delta)) / in.kappa;

    const double ratio = d * in.q0 / std::sqrt(T);
    if (ratio >= 1.0) {
        out.tau_max_bound = 1;
        out.bound_vacuous = true;
    } else {
        const double bound = std::log(ratio) / std::log1p(-in.q0);
        out.tau_max_bound = std::max(1, static_cast<int>(std::ceil(bound)));
    }
    return out;
}

MetricsSummary summarize(std::span<const TrialResult> trials) {
    if (trials.empty()) throw ArgumentError("summarize needs at least one trial");
    const std::size_t T = trials.front().steps.size();
    for (const auto& tr : trials)
        if (tr.steps.size() != T) throw ArgumentError("trials have different horizons");

    MetricsSummary s;
    s.num_trials = static_cast<int>(trials.size());
    s.horizon = static_cast<int>(T);
    s.utility.assign(T, 0.0);
    s.cost.assign(T, 0.0);
    s.success.assign(T, 0.0);

    const bool with_regret = std::all_of(trials.begin(), trials.end(),
                                         [](const TrialResult& tr) { return tr.oracle_utility.has_value(); });
    if (with_regret) s.regret.emplace(T, 0.0);

    const double n = static_cast<double>(trials.size());
    for (const auto& tr : trials) {
        for (std::size_t t = 0; t < T; ++t) {
            const auto& st = tr.steps[t];
            s.utility[t] += st.utility / n;
            s.cost[t] += st.total_cost() / n;
            s.success[t] += (st.max_reward() == 1 ? 1.0 : 0.0) / n;
        }
        if (with_regret) {
            const auto curve = regret_curve(tr);
            for (std::size_t t = 0; t < T; ++t) (*s.regret)[t] += curve[t] / n;
        }
    }

    auto mean_of = [T](const std::vector<double>& v) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return T == 0 ? 0.0 : acc / static_cast<double>(T);
    };
    s.avg_utility = mean_of(s.utility);
    s.avg_cost = mean_of(s.cost);
    s.avg_success = mean_of(s.success);
    if (with_regret) s.cum_regret = T == 0 ? 0.0 : s.regret->back();
    return s;
}

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Utility: return "avg_utility";
        case Metric::Cost: return "avg_cost";
        case Metric::Success: return "avg_success";
        case Metric::CumRegret: return "cum_regret";
    }
    return "?";
}

SeriesStats metric_curve(std::span<const TrialResult> trials, Metric metric) {
    if (trials.empty()) throw ArgumentError("metric curve needs at least one trial");
    const std::size_t T = trials.front().steps.size();
    for (const auto& tr : trials)
        if (tr.steps.size() != T) throw ArgumentError("trials have different horizons");

    std::vector<std::vector<double>> per_trial;
    per_trial.reserve(trials.size());
    for (const auto& tr : trials) {
        std::vector<double> series(T);
        if (metric == Metric::CumRegret) {
            series = regret_curve(tr);
        } else {
            double acc = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const auto& st = tr.steps[t];
                switch (metric) {
                    case Metric::Utility: acc += st.utility; break;
                    case Metric::Cost: acc += st.total_cost(); break;
                    case Metric::Success: acc += st.max_reward() == 1 ? 1.0 : 0.0; break;
                    case Metric::CumRegret: break;
                }
                series[t] = acc / static_cast<double>(t + 1);
            }
        }
        per_trial.push_back(std::move(series));
    }

    const double n = static_cast<double>(trials.size());
    SeriesStats out;
    out.mean.assign(T, 0.0);
    out.std_error.assign(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        double mean = 0.0;
        for (const auto& s : per_trial) mean += s[t];
        mean /= n;
        double ss = 0.0;
        for (const auto& s : per_trial) ss += (s[t] - mean) * (s[t] - mean);
        out.mean[t] = mean;
        out.std_error[t] = trials.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    }
    return out;
}

}  // namespace cabandit
