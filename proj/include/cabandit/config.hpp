#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cabandit/core.hpp"
#include "cabandit/env.hpp"
#include "cabandit/policies.hpp"

namespace cabandit {

enum class EnvKind { Logistic, ExpertT2I, Trace };

std::string_view to_string(EnvKind kind);

struct EnvSpec {
    EnvKind kind = EnvKind::Logistic;
    int d = 0;
    std::vector<Arm> arms;
    SamplerKind context = SamplerKind::UnitSphereUniform;
    std::vector<std::vector<double>> contexts;  // custom sampler
    std::optional<std::vector<std::vector<double>>> theta;  // one row per arm
    double theta_norm = 1.0;
    std::optional<double> q_floor;
    std::string trace_path;  // resolved against the config file's directory
};

struct AlgorithmSpec {
    std::string name;  // output label, unique within a config
    PolicyKind kind = PolicyKind::PromptWise;
    HyperParams params;
};

struct ExperimentConfig {
    EnvSpec env;
    HyperParams hyper;
    std::vector<AlgorithmSpec> algorithms;
    int horizon = 0;
    int num_trials = 1;
    std::uint64_t root_seed = 0;
    std::string output_dir = "results";
};

/// JSON object with keys horizon, num_trials, root_seed, output_dir, hyper, env, algorithms.
/// Unknown keys, wrong types and failed validation raise ConfigError naming the dotted key.
/// A relative env.trace_path is resolved against `base_dir`.
ExperimentConfig parse_config_text(std::string_view text, const std::string& base_dir = "");
ExperimentConfig parse_config_file(const std::string& path);

/// Re-validates cross-field constraints, e.g. after a seed override.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON of every field that affects results (output_dir excluded).
std::string canonical_config(const ExperimentConfig& config);
/// 16 hex digits of the FNV-1a hash of canonical_config.
std::string config_digest(const ExperimentConfig& config);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Builds a fresh environment per trial. Trace files are read once, on construction.
class EnvFactory {
public:
    explicit EnvFactory(EnvSpec spec);

    std::unique_ptr<Environment> make(std::uint64_t root_seed, int trial) const;
    int num_arms() const;
    const EnvSpec& spec() const noexcept { return spec_; }

private:
    EnvSpec spec_;
    std::vector<TraceRecord> records_;
};

}  // namespace cabandit
