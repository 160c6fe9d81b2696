#include "cabandit/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cabandit/errors.hpp"

namespace cabandit {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

[[noreturn]] void fail(const std::string& path, const std::string& why) { throw ConfigError(path + ": " + why); }

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& item : j.items()) {
        const bool ok = std::find(allowed.begin(), allowed.end(), item.key()) != allowed.end();
        if (!ok) fail(join(path, item.key()), "unknown key");
    }
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

long long get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long long>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> get_vector(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], index_path(path, i)));
    return out;
}

void read_hyper(const json& j, const std::string& path, HyperParams& h) {
    require_object(j, path);
    allow_keys(j, path, {"lambda", "tau_max", "tau_exp", "alpha", "delta", "kernel_sigma", "kernel_beta", "max_support"});
    if (j.contains("lambda")) h.lambda = get_number(j["lambda"], join(path, "lambda"));
    if (j.contains("tau_max")) h.tau_max = static_cast<int>(get_integer(j["tau_max"], join(path, "tau_max")));
    if (j.contains("tau_exp")) h.tau_exp = static_cast<int>(get_integer(j["tau_exp"], join(path, "tau_exp")));
    if (j.contains("alpha")) {
        if (j["alpha"].is_null()) h.alpha.reset();
        else h.alpha = get_number(j["alpha"], join(path, "alpha"));
    }
    if (j.contains("delta")) h.delta = get_number(j["delta"], join(path, "delta"));
    if (j.contains("kernel_sigma")) h.kernel_sigma = get_number(j["kernel_sigma"], join(path, "kernel_sigma"));
    if (j.contains("kernel_beta")) h.kernel_beta = get_number(j["kernel_beta"], join(path, "kernel_beta"));
    if (j.contains("max_support")) {
        const auto m = get_integer(j["max_support"], join(path, "max_support"));
        if (m < 1) fail(join(path, "max_support"), "must be >= 1");
        h.max_support = static_cast<std::size_t>(m);
    }
    try {
        h.validate();
    } catch (const ConfigError& e) {
        // validate() names fields as hyper.<key>; re-anchor them under this path
        std::string msg = e.what();
        if (path != "hyper" && msg.rfind("hyper.", 0) == 0) msg = path + msg.substr(5);
        throw ConfigError(msg);
    }
}

std::vector<Arm> read_arms(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty list of arms");
    std::vector<Arm> arms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = index_path(path, i);
        require_object(j[i], p);
        allow_keys(j[i], p, {"cost", "label"});
        if (!j[i].contains("cost")) fail(join(p, "cost"), "missing required key");
        Arm a;
        a.id = static_cast<int>(i);
        a.cost = get_number(j[i]["cost"], join(p, "cost"));
        if (!(a.cost >= 0.0)) fail(join(p, "cost"), "must be >= 0");
        a.label = j[i].contains("label") ? get_string(j[i]["label"], join(p, "label")) : "arm_" + std::to_string(i);
        arms.push_back(std::move(a));
    }
    return arms;
}

EnvSpec read_env(const json& j, const std::string& base_dir) {
    const std::string path = "env";
    require_object(j, path);
    if (!j.contains("kind")) fail("env.kind", "missing required key");
    const auto kind = get_string(j["kind"], "env.kind");

    EnvSpec env;
    if (kind == "logistic") {
        env.kind = EnvKind::Logistic;
        allow_keys(j, path, {"kind", "d", "arms", "context", "contexts", "theta", "theta_norm", "q_floor"});
        if (!j.contains("arms")) fail("env.arms", "missing required key");
        env.arms = read_arms(j["arms"], "env.arms");

        const auto ctx = j.contains("context") ? get_string(j["context"], "env.context") : std::string("unit_sphere");
        if (ctx == "unit_sphere") env.context = SamplerKind::UnitSphereUniform;
        else if (ctx == "one_hot") env.context = SamplerKind::OneHotUniform;
        else if (ctx == "custom") env.context = SamplerKind::Custom;
        else fail("env.context", "expected unit_sphere, one_hot or custom");

        if (env.context == SamplerKind::Custom) {
            if (!j.contains("contexts")) fail("env.contexts", "missing required key for context = custom");
            const auto& list = j["contexts"];
            if (!list.is_array() || list.empty()) fail("env.contexts", "expected a nonempty list");
            for (std::size_t i = 0; i < list.size(); ++i) {
                auto v = get_vector(list[i], index_path("env.contexts", i));
                // stored projected onto the unit ball, as contexts are at ingestion
                const Context c = normalize_context(v);
                env.contexts.emplace_back(c.features().data(), c.features().data() + c.dim());
            }
            env.d = static_cast<int>(env.contexts.front().size());
            for (std::size_t i = 0; i < env.contexts.size(); ++i)
                if (static_cast<int>(env.contexts[i].size()) != env.d)
                    fail(index_path("env.contexts", i), "dimension differs from env.contexts[0]");
            if (j.contains("d") && get_integer(j["d"], "env.d") != env.d) fail("env.d", "disagrees with env.contexts");
        } else {
            if (j.contains("contexts")) fail("env.contexts", "only used with context = custom");
            if (!j.contains("d")) fail("env.d", "missing required key");
            const auto d = get_integer(j["d"], "env.d");
            if (d < 1) fail("env.d", "must be >= 1");
            env.d = static_cast<int>(d);
        }

        if (j.contains("theta")) {
            const auto& rows = j["theta"];
            if (!rows.is_array() || rows.size() != env.arms.size()) fail("env.theta", "expected one row per arm");
            std::vector<std::vector<double>> theta;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                auto row = get_vector(rows[i], index_path("env.theta", i));
                if (static_cast<int>(row.size()) != env.d) fail(index_path("env.theta", i), "expected env.d entries");
                theta.push_back(std::move(row));
            }
            env.theta = std::move(theta);
            if (j.contains("theta_norm")) fail("env.theta_norm", "not used when env.theta is given");
        }
        if (j.contains("theta_norm")) {
            env.theta_norm = get_number(j["theta_norm"], "env.theta_norm");
            if (!(env.theta_norm >= 0.0)) fail("env.theta_norm", "must be >= 0");
        }
        if (j.contains("q_floor")) {
            const double q0 = get_number(j["q_floor"], "env.q_floor");
            if (!(q0 > 0.0 && q0 < 1.0)) fail("env.q_floor", "must lie in (0, 1)");
            env.q_floor = q0;
        }
    } else if (kind == "expert_t2i") {
        env.kind = EnvKind::ExpertT2I;
        allow_keys(j, path, {"kind", "arms", "d"});
        env.arms = j.contains("arms") ? read_arms(j["arms"], "env.arms") : default_expert_arms();
        if (static_cast<int>(env.arms.size()) != SyntheticExpertEnv::kNumTypes) fail("env.arms", "expert_t2i needs exactly 5 arms");
        if (j.contains("d") && get_integer(j["d"], "env.d") != SyntheticExpertEnv::kNumTypes)
            fail("env.d", "expert_t2i contexts are 5-dimensional");
        env.d = SyntheticExpertEnv::kNumTypes;
        env.context = SamplerKind::OneHotUniform;
    } else if (kind == "trace") {
        env.kind = EnvKind::Trace;
        allow_keys(j, path, {"kind", "arms", "trace_path"});
        if (!j.contains("arms")) fail("env.arms", "missing required key");
        env.arms = read_arms(j["arms"], "env.arms");
        if (!j.contains("trace_path")) fail("env.trace_path", "missing required key");
        std::filesystem::path p = get_string(j["trace_path"], "env.trace_path");
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        env.trace_path = p.lexically_normal().string();
    } else {
        fail("env.kind", "expected logistic, expert_t2i or trace");
    }
    return env;
}

std::vector<AlgorithmSpec> read_algorithms(const json& j, const HyperParams& base) {
    if (!j.is_array()) fail("algorithms", "expected a list");
    if (j.empty()) fail("algorithms", "nothing to run (empty list)");
    std::vector<AlgorithmSpec> out;
    std::set<std::string> names;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = index_path("algorithms", i);
        AlgorithmSpec a;
        a.params = base;
        if (j[i].is_string()) {
            a.name = j[i].get<std::string>();
            try {
                a.kind = parse_policy_kind(a.name);
            } catch (const ConfigError& e) {
                fail(p, e.what());
            }
        } else {
            require_object(j[i], p);
            allow_keys(j[i], p, {"name", "label", "hyper"});
            if (!j[i].contains("name")) fail(join(p, "name"), "missing required key");
            const auto name = get_string(j[i]["name"], join(p, "name"));
            try {
                a.kind = parse_policy_kind(name);
            } catch (const ConfigError& e) {
                fail(join(p, "name"), e.what());
            }
            a.name = j[i].contains("label") ? get_string(j[i]["label"], join(p, "label")) : name;
            if (j[i].contains("hyper")) read_hyper(j[i]["hyper"], join(p, "hyper"), a.params);
        }
        if (a.name.empty() || a.name.find_first_of("/\\") != std::string::npos || a.name == "." || a.name == "..")
            fail(p, "algorithm label must be a plain file name");
        if (!names.insert(a.name).second) fail(p, "duplicate algorithm label '" + a.name + "'");
        out.push_back(std::move(a));
    }
    return out;
}

json hyper_json(const HyperParams& h) {
    json j;
    j["lambda"] = h.lambda;
    j["tau_max"] = h.tau_max;
    j["tau_exp"] = h.tau_exp;
    j["alpha"] = h.alpha ? json(*h.alpha) : json(nullptr);
    j["delta"] = h.delta;
    j["kernel_sigma"] = h.kernel_sigma;
    j["kernel_beta"] = h.kernel_beta;
    j["max_support"] = h.max_support ? json(*h.max_support) : json(nullptr);
    return j;
}

}  // namespace

std::string_view to_string(EnvKind kind) {
    switch (kind) {
        case EnvKind::Logistic: return "logistic";
        case EnvKind::ExpertT2I: return "expert_t2i";
        case EnvKind::Trace: return "trace";
    }
    return "?";
}

void validate_config(const ExperimentConfig& c) {
    if (c.horizon < 1) fail("horizon", "must be >= 1");
    if (c.num_trials < 1) fail("num_trials", "must be >= 1");
    if (c.algorithms.empty()) fail("algorithms", "nothing to run (empty list)");
    const int n = static_cast<int>(c.env.arms.size());
    for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
        const auto& a = c.algorithms[i];
        a.params.validate();
        if (has_exploration_phase(a.kind) && c.horizon < n * a.params.tau_exp)
            fail("horizon", "shorter than the exploration phase of " + a.name + " (" +
                                std::to_string(n * a.params.tau_exp) + " steps)");
        if (a.kind == PolicyKind::Oracle && c.env.kind == EnvKind::Trace)
            fail(index_path("algorithms", i), "oracle needs ground truth, which a trace environment lacks");
    }
}

ExperimentConfig parse_config_text(std::string_view text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    require_object(j, "");
    allow_keys(j, "", {"horizon", "num_trials", "root_seed", "output_dir", "hyper", "env", "algorithms"});

    ExperimentConfig c;
    if (!j.contains("horizon")) fail("horizon", "missing required key");
    c.horizon = static_cast<int>(get_integer(j["horizon"], "horizon"));
    if (j.contains("num_trials")) c.num_trials = static_cast<int>(get_integer(j["num_trials"], "num_trials"));
    if (j.contains("root_seed")) {
        if (!j["root_seed"].is_number_unsigned() && !(j["root_seed"].is_number_integer() && j["root_seed"].get<long long>() >= 0))
            fail("root_seed", "expected a nonnegative integer");
        c.root_seed = j["root_seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = get_string(j["output_dir"], "output_dir");
    if (j.contains("hyper")) read_hyper(j["hyper"], "hyper", c.hyper);
    if (!j.contains("env")) fail("env", "missing required key");
    c.env = read_env(j["env"], base_dir);
    if (!j.contains("algorithms")) fail("algorithms", "missing required key");
    c.algorithms = read_algorithms(j["algorithms"], c.hyper);
    validate_config(c);
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string canonical_config(const ExperimentConfig& c) {
    json j;
    j["horizon"] = c.horizon;
    j["num_trials"] = c.num_trials;
    j["root_seed"] = c.root_seed;
    j["hyper"] = hyper_json(c.hyper);

    json env;
    env["kind"] = std::string(to_string(c.env.kind));
    env["d"] = c.env.d;
    json arms = json::array();
    for (const auto& a : c.env.arms) arms.push_back({{"cost", a.cost}, {"label", a.label}});
    env["arms"] = arms;
    if (c.env.kind == EnvKind::Logistic) {
        env["context"] = c.env.context == SamplerKind::UnitSphereUniform ? "unit_sphere"
                         : c.env.context == SamplerKind::OneHotUniform   ? "one_hot"
                                                                         : "custom";
        if (!c.env.contexts.empty()) env["contexts"] = c.env.contexts;
        if (c.env.theta) env["theta"] = *c.env.theta;
        else env["theta_norm"] = c.env.theta_norm;
        env["q_floor"] = c.env.q_floor ? json(*c.env.q_floor) : json(nullptr);
    }
    if (c.env.kind == EnvKind::Trace) env["trace_path"] = c.env.trace_path;
    j["env"] = env;

    json algos = json::array();
    for (const auto& a : c.algorithms)
        algos.push_back({{"label", a.name}, {"name", std::string(to_string(a.kind))}, {"hyper", hyper_json(a.params)}});
    j["algorithms"] = algos;
    return j.dump();
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_digest(const ExperimentConfig& c) {
    const auto h = fnv1a64(canonical_config(c));
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) out[static_cast<std::size_t>(15 - i)] = hex[(h >> (4 * i)) & 0xf];
    return out;
}

EnvFactory::EnvFactory(EnvSpec spec) : spec_(std::move(spec)) {
    if (spec_.kind == EnvKind::Trace) records_ = load_trace_jsonl(spec_.trace_path, static_cast<int>(spec_.arms.size()));
}

int EnvFactory::num_arms() const { return static_cast<int>(spec_.arms.size()); }

std::unique_ptr<Environment> EnvFactory::make(std::uint64_t root_seed, int trial) const {
    switch (spec_.kind) {
        case EnvKind::Logistic: {
            const int n = num_arms();
            Matrix theta(n, spec_.d);
            if (spec_.theta) {
                for (int a = 0; a < n; ++a)
                    for (int k = 0; k < spec_.d; ++k)
                        theta(a, k) = (*spec_.theta)[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
            } else {
                auto rng = substream(StreamKey{root_seed, static_cast<std::uint64_t>(trial), 0, 0, Purpose::GroundTruth});
                theta = draw_theta_star(n, spec_.d, spec_.theta_norm, rng);
            }
            ContextSampler sampler;
            sampler.kind = spec_.context;
            sampler.dim = spec_.d;
            for (const auto& v : spec_.contexts) sampler.custom.push_back(normalize_context(v));
            return std::make_unique<SyntheticLogisticEnv>(spec_.arms, std::move(theta), std::move(sampler), spec_.q_floor);
        }
        case EnvKind::ExpertT2I:
            return std::make_unique<SyntheticExpertEnv>(spec_.arms);
        case EnvKind::Trace:
            return std::make_unique<TraceEnv>(spec_.arms, records_);
    }
    throw ConfigError("unknown environment kind");
}

}  // namespace cabandit
