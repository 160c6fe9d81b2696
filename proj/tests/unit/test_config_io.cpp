#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cabandit/config.hpp"
#include "cabandit/errors.hpp"
#include "cabandit/experiment.hpp"
#include "cabandit/io.hpp"

using namespace cabandit;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CABANDIT_TEST_DATA;

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("cabandit_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
    for (double v : {0.0, 0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 0.01}) CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(0.25) == "0.25");
    CHECK_THROWS_AS(parse_double("1.5x"), DataError);
    CHECK_THROWS_AS(parse_double(""), DataError);
}

TEST_CASE("config parsing") {
    const auto c = parse_config_file((kData / "tiny_expert.json").string());
    CHECK(c.horizon == 12);
    CHECK(c.num_trials == 2);
    CHECK(c.root_seed == 7);
    CHECK(c.env.kind == EnvKind::ExpertT2I);
    CHECK(c.env.arms.size() == 5);
    REQUIRE(c.algorithms.size() == 3);
    CHECK(c.algorithms[1].kind == PolicyKind::GreedyTillSuccess);

    const auto t = parse_config_file((kData / "tiny_trace.json").string());
    CHECK(t.env.arms[1].label == "large");
    CHECK(fs::path(t.env.trace_path) == (kData / "tiny_trace.jsonl").lexically_normal());
}

TEST_CASE("config errors name the offending key") {
    CHECK(config_error(slurp(kData / "bad_key.json")).find("hyper.lamda") != std::string::npos);
    CHECK(config_error("{\"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": [\"greedy\"]}").find("horizon") == 0);
    CHECK(config_error("{\"horizon\": 10, \"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": [\"ucb\"]}")
              .find("algorithms[0]") == 0);
    CHECK(config_error("{\"horizon\": 2, \"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": [\"promptwise\"]}")
              .find("horizon") == 0);
    CHECK(config_error("{\"horizon\": 10, \"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": "
                       "[{\"name\": \"greedy\", \"hyper\": {\"tau_max\": 0}}]}")
              .find("algorithms[0].hyper.tau_max") == 0);
    CHECK(config_error("{\"horizon\": 10, \"env\": {\"kind\": \"logistic\", \"d\": 2, \"arms\": [{\"cost\": -1}]}, "
                       "\"algorithms\": [\"greedy\"]}")
              .find("env.arms[0].cost") == 0);
    CHECK(config_error("{\"horizon\": 10, \"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": [\"greedy\", \"greedy\"]}")
              .find("duplicate") != std::string::npos);
    CHECK(config_error("{\"horizon\": 10, \"env\": {\"kind\": \"trace\", \"arms\": [{\"cost\": 1}], \"trace_path\": "
                       "\"x.jsonl\"}, \"algorithms\": [\"oracle\"]}")
              .find("algorithms[0]") == 0);
    CHECK(config_error("[1, 2]").find("config") == 0);
    CHECK(config_error("{").find("not valid JSON") != std::string::npos);
}

TEST_CASE("per-algorithm hyperparameters override the shared block") {
    const auto c = parse_config_text(
        "{\"horizon\": 20, \"hyper\": {\"lambda\": 0.05}, \"env\": {\"kind\": \"expert_t2i\"}, \"algorithms\": "
        "[\"greedy\", {\"name\": \"promptwise\", \"label\": \"pw_tau3\", \"hyper\": {\"tau_max\": 3}}]}");
    CHECK(c.algorithms[0].params.lambda == 0.05);
    CHECK(c.algorithms[1].name == "pw_tau3");
    CHECK(c.algorithms[1].params.lambda == 0.05);
    CHECK(c.algorithms[1].params.tau_max == 3);
}

TEST_CASE("config digest ignores the output directory only") {
    auto c = parse_config_file((kData / "tiny_expert.json").string());
    const auto d = config_digest(c);
    CHECK(d.size() == 16);
    c.output_dir = "elsewhere";
    CHECK(config_digest(c) == d);
    c.root_seed = 8;
    CHECK(config_digest(c) != d);
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("trial CSV round trip") {
    TrialResult tr;
    tr.trial = 3;
    tr.config_digest = "00112233aabbccdd";
    StepRecord a;
    a.step_index = 1;
    a.pulls = {Pull{1, 0, 0.75}, Pull{2, 1, 1.6}};
    a.terminated_by = Termination::Success;
    a.utility = 1.0 - 0.01 * 2.35;
    StepRecord b;
    b.step_index = 2;
    b.terminated_by = Termination::NullChosen;
    tr.steps = {a, b};

    std::stringstream ss;
    write_trial_csv(ss, tr);
    const auto text = ss.str();
    CHECK(text.rfind("# config_digest=00112233aabbccdd\n" + std::string(kTrialCsvHeader) + "\n", 0) == 0);
    CHECK(text.find("3,2,0,-1,0,0,0,null,0\n") != std::string::npos);
    CHECK(text.find("3,1,2,2,1,1.6,2.35,success,") != std::string::npos);

    const auto back = read_trial_csv(ss);
    CHECK(back.trial == 3);
    CHECK(back.config_digest == tr.config_digest);
    REQUIRE(back.steps.size() == 2);
    CHECK(back.steps[0].pulls.size() == 2);
    CHECK(back.steps[0].pulls[1].cost == 1.6);
    CHECK(back.steps[0].utility == a.utility);
    CHECK(back.steps[1].pulls.empty());

    std::istringstream bad("trial,step\n");
    CHECK_THROWS_AS(read_trial_csv(bad), DataError);
}

TEST_CASE("tiny experiment matches the golden files") {
    auto c = parse_config_file((kData / "tiny_expert.json").string());
    const auto out = scratch("golden");
    c.output_dir = out.string();
    const auto outcome = run_experiment(c);
    CHECK(outcome.config_digest == config_digest(c));
    for (const char* algo : {"promptwise", "gts", "lowest_cost"}) {
        for (const char* f : {"trial_0.csv", "trial_1.csv", "oracle_0.csv", "summary.json"}) {
            CAPTURE(algo);
            CAPTURE(f);
            CHECK(slurp(out / algo / f) == slurp(kData / "golden" / algo / f));
        }
    }
    CHECK(slurp(out / "curves.csv") == slurp(kData / "golden" / "curves.csv"));

    const auto plots = emit_plot_data(out);
    CHECK(plots.size() == 4);
    const auto loaded = load_results(out);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].second.size() == 2);
    CHECK(loaded[0].second[0].oracle_utility.has_value());
    fs::remove_all(out);
}

TEST_CASE("parallel experiments write identical files") {
    auto c = parse_config_file((kData / "tiny_expert.json").string());
    const auto a = scratch("serial"), b = scratch("parallel");
    c.output_dir = a.string();
    run_experiment(c, RunOptions{1, true});
    c.output_dir = b.string();
    run_experiment(c, RunOptions{3, true});
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), a);
        CAPTURE(rel.string());
        CHECK(slurp(e.path()) == slurp(b / rel));
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("trace experiments") {
    auto c = parse_config_file((kData / "tiny_trace.json").string());
    c.output_dir = scratch("trace").string();
    const auto outcome = run_experiment(c);
    CHECK_FALSE(outcome.summaries.at("promptwise").cum_regret.has_value());
    CHECK_FALSE(fs::exists(fs::path(c.output_dir) / "random" / "oracle_0.csv"));
    CHECK(emit_plot_data(c.output_dir).size() == 3);
    fs::remove_all(c.output_dir);

    auto s = parse_config_file((kData / "short_trace.json").string());
    s.algorithms.front().params.tau_max = 5;
    s.output_dir = scratch("short").string();
    CHECK_THROWS_AS(run_experiment(s), DataError);
    CHECK_THROWS_AS(emit_plot_data(scratch("missing")), StateError);
}

TEST_CASE("errors carry algorithm, seed and trial") {
    auto s = parse_config_file((kData / "short_trace.json").string());
    EnvFactory envs(s.env);
    RunOptions opts{1, false};
    try {
        run_algorithm(s, s.algorithms.front(), envs, opts);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("algorithm rts") != std::string::npos);
        CHECK(msg.find("trial 0") != std::string::npos);
        CHECK(msg.find("step") != std::string::npos);
    }
}
