#include "cabandit/parallel.hpp"

#include <cmath>
#include <algorithm>
#include <exception>
#include <limits>

#include <omp.h>

#include "cabandit/errors.hpp"
#include "cabandit/rng.hpp"

namespace cabandit {

McSums& McSums::operator+=(const McSums& o) noexcept {
    episodes += o.episodes;
    successes += o.successes;
    pulls += o.pulls;
    pulls_sq += o.pulls_sq;
    success_pulls += o.success_pulls;
    return *this;
}

namespace {

void check_scheme(const McScheme& s) {
    if (!(s.q > 0.0 && s.q <= 1.0)) throw ArgumentError("Monte Carlo scheme needs q in (0, 1]");
    if (!(s.cost >= 0.0) || !(s.lambda >= 0.0)) throw ArgumentError("cost and lambda must be >= 0");
    if (s.tau_max && *s.tau_max < 1) throw ArgumentError("tau_max must be >= 1");
}

McSums episode(const McScheme& s, std::uint64_t root, std::uint64_t e) {
    auto rng = substream(StreamKey{root, 0, e, 0, Purpose::MonteCarlo});
    std::uint64_t n = 0;
    int success = 0;
    const std::uint64_t cap = s.tau_max ? static_cast<std::uint64_t>(*s.tau_max) : std::numeric_limits<std::uint64_t>::max();
    while (n < cap) {
        ++n;
        if (bernoulli(rng, s.q)) {
            success = 1;
            break;
        }
    }
    McSums out;
    out.episodes = 1;
    out.successes = static_cast<std::uint64_t>(success);
    out.pulls = n;
    out.pulls_sq = n * n;
    out.success_pulls = success ? n : 0;
    return out;
}

int threads_or_default(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

int resolve_threads(int requested) { return threads_or_default(requested); }

McEstimate estimate_from(const McSums& sums, const McScheme& scheme) {
    McEstimate est;
    est.sums = sums;
    if (sums.episodes == 0) return est;
    const double n = static_cast<double>(sums.episodes);
    const double lc = scheme.lambda * scheme.cost;
    const double s = static_cast<double>(sums.successes) / n;
    const double p = static_cast<double>(sums.pulls) / n;
    const double p2 = static_cast<double>(sums.pulls_sq) / n;
    const double sp = static_cast<double>(sums.success_pulls) / n;

    // utility per episode is S - lambda c N, cost is c N
    est.success_rate = s;
    est.mean_utility = s - lc * p;
    const double eu2 = s - 2.0 * lc * sp + lc * lc * p2;
    const double var_u = std::max(0.0, eu2 - est.mean_utility * est.mean_utility) * n / std::max(n - 1.0, 1.0);
    est.se_utility = std::sqrt(var_u / n);
    est.mean_cost = scheme.cost * p;
    const double var_n = std::max(0.0, p2 - p * p) * n / std::max(n - 1.0, 1.0);
    est.se_cost = scheme.cost * std::sqrt(var_n / n);
    return est;
}

McEstimate monte_carlo_serial(const McScheme& scheme, std::uint64_t episodes, std::uint64_t root_seed) {
    check_scheme(scheme);
    McSums total;
    for (std::uint64_t e = 0; e < episodes; ++e) total += episode(scheme, root_seed, e);
    return estimate_from(total, scheme);
}

McEstimate monte_carlo_omp(const McScheme& scheme, std::uint64_t episodes, std::uint64_t root_seed, int threads) {
    check_scheme(scheme);
    std::uint64_t successes = 0, pulls = 0, pulls_sq = 0, success_pulls = 0;
    const auto n = static_cast<long long>(episodes);
#pragma omp parallel for num_threads(threads_or_default(threads)) schedule(static) \
    reduction(+ : successes, pulls, pulls_sq, success_pulls)
    for (long long e = 0; e < n; ++e) {
        const McSums one = episode(scheme, root_seed, static_cast<std::uint64_t>(e));
        successes += one.successes;
        pulls += one.pulls;
        pulls_sq += one.pulls_sq;
        success_pulls += one.success_pulls;
    }
    McSums total{episodes, successes, pulls, pulls_sq, success_pulls};
    return estimate_from(total, scheme);
}

Matrix gram_matrix_serial(std::span<const Vector> points, const KernelSpec& spec) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            K(i, j) = K(j, i) = spec(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
    return K;
}

Matrix gram_matrix_omp(std::span<const Vector> points, const KernelSpec& spec, int threads) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix K(n, n);
#pragma omp parallel for num_threads(threads_or_default(threads)) schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j)
            K(i, j) = K(j, i) = spec(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
    return K;
}

std::vector<TrialResult> run_trials_serial(int count, const TrialJob& job) {
    std::vector<TrialResult> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) out.push_back(job(i));
    return out;
}

std::vector<TrialResult> run_trials_omp(int count, const TrialJob& job, int threads) {
    if (count <= 0) return {};
    std::vector<TrialResult> out(static_cast<std::size_t>(count));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for num_threads(threads_or_default(threads)) schedule(dynamic, 1)
    for (int i = 0; i < count; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = job(i);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace cabandit
