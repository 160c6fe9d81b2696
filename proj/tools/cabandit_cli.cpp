// Command-line front end: run experiments, emit plot data, run the oracle checks, validate traces.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cabandit/config.hpp"
#include "cabandit/errors.hpp"
#include "cabandit/experiment.hpp"
#include "cabandit/io.hpp"
#include "cabandit/verify.hpp"

namespace {

using namespace cabandit;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir, int jobs) {
    ExperimentConfig config = parse_config_file(config_path);
    if (seed) config.root_seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    validate_config(config);

    RunOptions opts;
    opts.jobs = jobs;
    const auto outcome = run_experiment(config, opts);
    std::cout << "config_digest " << outcome.config_digest << '\n';
    for (const auto& [name, trials] : outcome.results) {
        const auto& s = outcome.summaries.at(name);
        std::cout << name << ": trials=" << s.num_trials << " avg_utility=" << format_double(s.avg_utility)
                  << " avg_cost=" << format_double(s.avg_cost) << " avg_success=" << format_double(s.avg_success);
        if (s.cum_regret) std::cout << " cum_regret=" << format_double(*s.cum_regret);
        std::cout << '\n';
    }
    std::cout << "wrote " << config.output_dir << '\n';
    return 0;
}

int cmd_plot(const std::string& dir) {
    for (const auto& p : emit_plot_data(dir)) std::cout << p.string() << '\n';
    return 0;
}

int cmd_verify(std::uint64_t seed, int jobs) {
    bool ok = true;
    for (const auto& r : verify_all(seed, jobs)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

int cmd_trace_check(const std::string& config_path, const std::string& trace_path, int arms, int tau_max) {
    std::string path = trace_path;
    int num_arms = arms;
    int tau = tau_max;
    if (!config_path.empty()) {
        const auto config = parse_config_file(config_path);
        if (config.env.kind != EnvKind::Trace) throw ConfigError("env.kind: trace-check needs a trace environment");
        if (path.empty()) path = config.env.trace_path;
        if (num_arms <= 0) num_arms = static_cast<int>(config.env.arms.size());
        if (tau <= 0) {
            tau = 1;
            for (const auto& a : config.algorithms) tau = std::max(tau, a.params.tau_max);
        }
    }
    if (path.empty()) throw ConfigError("trace-check needs --trace or --config");
    if (num_arms <= 0) throw ConfigError("trace-check needs --arms (or --config)");
    if (tau <= 0) tau = HyperParams{}.tau_max;

    const auto records = load_trace_jsonl(path, num_arms);
    const auto check = check_trace(records, num_arms, tau);
    std::cout << path << ": " << check.rows << " rows, " << num_arms << " arms, tau_max " << tau
              << ", min outcomes per arm " << check.min_outcomes << '\n';
    for (const auto& p : check.problems) std::cout << "  " << p << '\n';
    if (!check.ok()) throw DataError(std::to_string(check.problems.size()) + " problem(s) in " + path);
    std::cout << "ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cost-aware contextual bandit experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, trace_path;
    std::optional<std::uint64_t> seed;
    std::uint64_t verify_seed = 1;
    int jobs = 1;
    int arms = 0;
    int tau_max = 0;

    auto* run = app.add_subcommand("run", "run every algorithm in a config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "override root_seed");
    run->add_option("--out", out_dir, "override output_dir");
    run->add_option("--jobs", jobs, "parallel trials (0: all cores)")->check(CLI::NonNegativeNumber);

    auto* plot = app.add_subcommand("plot-data", "write per-metric mean/stderr CSVs from a results directory");
    plot->add_option("--out", out_dir, "results directory")->required();

    auto* verify = app.add_subcommand("verify", "run the oracle cross-checks");
    verify->add_option("--seed", verify_seed, "root seed of the random instances");
    verify->add_option("--jobs", jobs, "threads for the Monte Carlo checks (0: all cores)")->check(CLI::NonNegativeNumber);

    auto* trace = app.add_subcommand("trace-check", "validate a trace file against tau_max");
    trace->add_option("--config", config_path, "take trace path, arm count and tau_max from a config");
    trace->add_option("--trace", trace_path, "trace file (JSONL)");
    trace->add_option("--arms", arms, "number of arms");
    trace->add_option("--tau-max", tau_max, "round budget to check against");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cabandit::exit_code(cabandit::ErrorKind::Config);
    }

    try {
        if (*run) return cmd_run(config_path, seed, out_dir, jobs);
        if (*plot) return cmd_plot(out_dir);
        if (*verify) return cmd_verify(verify_seed, jobs);
        if (*trace) return cmd_trace_check(config_path, trace_path, arms, tau_max);
    } catch (const cabandit::Error& e) {
        std::cerr << "error (" << cabandit::to_string(e.kind()) << "): " << e.what() << '\n';
        return cabandit::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
