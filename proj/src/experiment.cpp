#include "cabandit/experiment.hpp"

#include <algorithm>
#include <exception>

#include "cabandit/errors.hpp"
#include "cabandit/parallel.hpp"

namespace cabandit {

namespace fs = std::filesystem;

std::vector<TrialResult> run_algorithm(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                                       const EnvFactory& envs, const RunOptions& options) {
    const std::string digest = config_digest(config);
    const fs::path dir = fs::path(config.output_dir) / algorithm.name;

    const TrialJob job = [&](int k) {
        try {
            const auto env = envs.make(config.root_seed, k);
            TrialSpec spec;
            spec.kind = algorithm.kind;
            spec.algorithm = algorithm.name;
            spec.params = algorithm.params;
            spec.horizon = config.horizon;
            spec.root_seed = config.root_seed;
            spec.trial = k;
            spec.config_digest = digest;
            TrialResult tr = run_trial(*env, spec);
            if (options.write_outputs) {
                write_trial_csv(dir / ("trial_" + std::to_string(k) + ".csv"), tr);
                write_oracle_csv(dir / ("oracle_" + std::to_string(k) + ".csv"), tr);
            }
            return tr;
        } catch (...) {
            rethrow_with_context(std::current_exception(), "algorithm " + algorithm.name + ", seed " +
                                                               std::to_string(config.root_seed) + ", trial " +
                                                               std::to_string(k));
        }
    };
    if (options.jobs == 1) return run_trials_serial(config.num_trials, job);
    return run_trials_omp(config.num_trials, job, options.jobs);
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate_config(config);
    const EnvFactory envs(config.env);
    if (config.env.kind == EnvKind::Trace) {
        int tau = 1;
        for (const auto& a : config.algorithms) tau = std::max(tau, a.params.tau_max);
        // a trial cannot be replayed if there are fewer recorded outcomes than a step can consume
        auto probe = envs.make(config.root_seed, 0);
        const auto& trace = dynamic_cast<const TraceEnv&>(*probe);
        const auto check = check_trace(trace.records(), envs.num_arms(), tau);
        if (!check.ok()) throw DataError(config.env.trace_path + ": " + check.problems.front());
    }

    ExperimentOutcome out;
    out.config_digest = config_digest(config);
    for (const auto& algo : config.algorithms) {
        auto trials = run_algorithm(config, algo, envs, options);
        auto summary = summarize(trials);
        if (options.write_outputs)
            write_summary_json(fs::path(config.output_dir) / algo.name / "summary.json", algo.name, summary,
                               out.config_digest);
        out.summaries.emplace(algo.name, std::move(summary));
        out.results.emplace_back(algo.name, std::move(trials));
    }
    if (options.write_outputs) write_curves_csv(fs::path(config.output_dir) / "curves.csv", out.results, out.config_digest);
    return out;
}

}  // namespace cabandit
