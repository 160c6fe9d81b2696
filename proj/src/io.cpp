#include "cabandit/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cabandit/errors.hpp"

namespace cabandit {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw DataError("not a number: '" + std::string(s) + "'");
    return v;
}

namespace {

long long parse_int(std::string_view s) {
    long long v = 0;
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw DataError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StateError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return in;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void write_trial_csv(std::ostream& out, const TrialResult& trial) {
    out << "# config_digest=" << trial.config_digest << '\n';
    out << kTrialCsvHeader << '\n';
    for (const auto& st : trial.steps) {
        const auto term = to_string(st.terminated_by);
        const auto u = format_double(st.utility);
        if (st.pulls.empty()) {
            out << trial.trial << ',' << st.step_index << ",0,-1,0,0,0," << term << ',' << u << '\n';
            continue;
        }
        double cum = 0.0;
        for (std::size_t i = 0; i < st.pulls.size(); ++i) {
            const auto& p = st.pulls[i];
            cum += p.cost;
            out << trial.trial << ',' << st.step_index << ',' << i + 1 << ',' << p.arm << ',' << p.reward << ','
                << format_double(p.cost) << ',' << format_double(cum) << ',' << term << ',' << u << '\n';
        }
    }
}

void write_trial_csv(const fs::path& path, const TrialResult& trial) {
    auto out = open_out(path);
    write_trial_csv(out, trial);
    if (!out) throw StateError("failed writing " + path.string());
}

TrialResult read_trial_csv(std::istream& in) {
    TrialResult tr;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# config_digest=";
            if (line.rfind(key, 0) == 0) tr.config_digest = line.substr(key.size());
            continue;
        }
        if (!header) {
            if (line != kTrialCsvHeader) throw DataError("unexpected trial CSV header: " + line);
            header = true;
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 9) throw DataError("trial CSV line " + std::to_string(lineno) + ": expected 9 fields");
        try {
            tr.trial = static_cast<int>(parse_int(f[0]));
            const int step = static_cast<int>(parse_int(f[1]));
            const int round = static_cast<int>(parse_int(f[2]));
            const int arm = static_cast<int>(parse_int(f[3]));
            if (tr.steps.empty() || tr.steps.back().step_index != step) {
                StepRecord rec;
                rec.step_index = step;
                rec.terminated_by = parse_termination(f[7]);
                rec.utility = parse_double(f[8]);
                tr.steps.push_back(std::move(rec));
            }
            if (arm >= 0) {
                auto& rec = tr.steps.back();
                if (round != static_cast<int>(rec.pulls.size()) + 1) throw DataError("rounds out of order");
                rec.pulls.push_back(Pull{arm, static_cast<int>(parse_int(f[4])), parse_double(f[5])});
            }
        } catch (const Error& e) {
            throw DataError("trial CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!header) throw DataError("trial CSV has no header");
    return tr;
}

TrialResult read_trial_csv(const fs::path& path) {
    auto in = open_in(path);
    return read_trial_csv(in);
}

void write_oracle_csv(const fs::path& path, const TrialResult& trial) {
    if (!trial.oracle_utility) return;
    auto out = open_out(path);
    out << "step,oracle_utility\n";
    const auto& u = *trial.oracle_utility;
    for (std::size_t t = 0; t < u.size(); ++t) out << t + 1 << ',' << format_double(u[t]) << '\n';
}

std::vector<double> read_oracle_csv(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    strip_cr(line);
    if (line != "step,oracle_utility") throw DataError("unexpected oracle CSV header in " + path.string());
    std::vector<double> out;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 2) throw DataError("malformed oracle CSV row in " + path.string());
        out.push_back(parse_double(f[1]));
    }
    return out;
}

void write_summary_json(const fs::path& path, const std::string& algorithm, const MetricsSummary& s,
                        const std::string& config_digest) {
    nlohmann::ordered_json j;
    j["algorithm"] = algorithm;
    j["config_digest"] = config_digest;
    j["num_trials"] = s.num_trials;
    j["horizon"] = s.horizon;
    j["avg_utility"] = s.avg_utility;
    j["avg_cost"] = s.avg_cost;
    j["avg_success"] = s.avg_success;
    j["cum_regret"] = s.cum_regret ? nlohmann::ordered_json(*s.cum_regret) : nlohmann::ordered_json(nullptr);
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_curves_csv(const fs::path& path, const std::vector<AlgorithmResults>& results,
                      const std::string& config_digest) {
    auto out = open_out(path);
    out << "# config_digest=" << config_digest << '\n';
    out << "algorithm,step,avg_utility,avg_cost,avg_success,cum_regret\n";
    for (const auto& [name, trials] : results) {
        const auto u = metric_curve(trials, Metric::Utility);
        const auto c = metric_curve(trials, Metric::Cost);
        const auto s = metric_curve(trials, Metric::Success);
        const bool regret = std::all_of(trials.begin(), trials.end(),
                                        [](const TrialResult& t) { return t.oracle_utility.has_value(); });
        SeriesStats r;
        if (regret) r = metric_curve(trials, Metric::CumRegret);
        for (std::size_t t = 0; t < u.mean.size(); ++t) {
            out << name << ',' << t + 1 << ',' << format_double(u.mean[t]) << ',' << format_double(c.mean[t]) << ','
                << format_double(s.mean[t]) << ',';
            if (regret) out << format_double(r.mean[t]);
            out << '\n';
        }
    }
}

std::vector<AlgorithmResults> load_results(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw StateError("results directory " + dir.string() + " does not exist");
    std::vector<AlgorithmResults> out;
    std::vector<fs::path> algo_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) algo_dirs.push_back(e.path());
    std::sort(algo_dirs.begin(), algo_dirs.end());

    for (const auto& ad : algo_dirs) {
        std::map<long long, fs::path> files;
        for (const auto& e : fs::directory_iterator(ad)) {
            const auto name = e.path().filename().string();
            if (!e.is_regular_file() || name.rfind("trial_", 0) != 0 || e.path().extension() != ".csv") continue;
            const auto stem = e.path().stem().string().substr(6);
            try {
                files.emplace(parse_int(stem), e.path());
            } catch (const DataError&) {
            }
        }
        if (files.empty()) continue;
        std::vector<TrialResult> trials;
        for (const auto& [k, path] : files) {
            TrialResult tr = read_trial_csv(path);
            tr.algorithm = ad.filename().string();
            const auto oracle = ad / ("oracle_" + std::to_string(k) + ".csv");
            if (fs::exists(oracle)) tr.oracle_utility = read_oracle_csv(oracle);
            trials.push_back(std::move(tr));
        }
        out.emplace_back(ad.filename().string(), std::move(trials));
    }
    return out;
}

std::vector<fs::path> emit_plot_data(const fs::path& dir) {
    const auto results = load_results(dir);
    if (results.empty()) throw StateError("no trial results under " + dir.string());

    std::vector<Metric> metrics{Metric::Utility, Metric::Cost, Metric::Success};
    const bool regret = std::all_of(results.begin(), results.end(), [](const AlgorithmResults& r) {
        return std::all_of(r.second.begin(), r.second.end(),
                           [](const TrialResult& t) { return t.oracle_utility.has_value(); });
    });
    if (regret) metrics.push_back(Metric::CumRegret);

    std::vector<fs::path> written;
    for (const Metric m : metrics) {
        const auto path = dir / ("plot_" + std::string(to_string(m)) + ".csv");
        auto out = open_out(path);
        out << "algorithm,step,mean,stderr\n";
        for (const auto& [name, trials] : results) {
            const auto s = metric_curve(trials, m);
            for (std::size_t t = 0; t < s.mean.size(); ++t)
                out << name << ',' << t + 1 << ',' << format_double(s.mean[t]) << ',' << format_double(s.std_error[t])
                    << '\n';
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace cabandit
