#include "netrca/eval.hpp"

#include "netrca/error.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace netrca {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

nlohmann::json prf_json(const Prf& p) {
    return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
            {"tp", p.tp},               {"fp", p.fp},         {"fn", p.fn}};
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

double f1_score(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

Prf precision_recall_f1(const RootCauseRanking& ranking, const std::vector<std::size_t>& truth, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidConfig, "N must be at least 1");
    const std::set<std::size_t> truth_set(truth.begin(), truth.end());
    if (truth_set.empty()) throw Error(ErrorKind::UndefinedMetric, "recall is undefined for an empty truth set");
    std::set<std::size_t> predicted;
    for (std::size_t i = 0; i < std::min(n, ranking.entries.size()); ++i) predicted.insert(ranking.entries[i].channel);
    std::size_t tp = 0;
    for (std::size_t c : predicted) tp += truth_set.count(c);
    Prf out;
    out.tp = tp;
    out.fp = predicted.size() - tp;
    out.fn = truth_set.size() - tp;
    out.precision = predicted.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted.size());
    out.recall = static_cast<double>(tp) / static_cast<double>(truth_set.size());
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

Prf pooled(std::size_t tp, std::size_t fp, std::size_t fn) {
    Prf out;
    out.tp = tp;
    out.fp = fp;
    out.fn = fn;
    out.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    out.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.f1 = f1_score(out.precision, out.recall);
    return out;
}

const MethodSummary& MetricReport::of(RcaMethod method) const {
    for (const auto& s : summary) {
        if (s.method == method) return s;
    }
    throw Error(ErrorKind::InvalidConfig, "method " + to_string(method) + " not in report");
}

ScenarioResult run_scenario(const ScenarioSpec& spec, const BenchmarkOptions& options, std::size_t index) {
    ScenarioResult r;
    r.index = index;
    r.seed = spec.seed;
    r.n_anomalies = spec.anomalies.empty() ? spec.n_anomalies : spec.anomalies.size();
    const auto& pc = options.pipeline;
    try {
        auto start = Clock::now();
        const Scenario sc = generate_scenario(spec);
        r.times.generate = seconds_since(start);

        start = Clock::now();
        TimeSeriesPanel panel = impute_missing(sc.panel);
        if (pc.smooth_window > 1) panel = smooth(panel, pc.smooth_window);
        const auto train_end =
            static_cast<std::size_t>(std::floor(pc.train_fraction * static_cast<double>(panel.length())));
        const IndexRange train{0, train_end};
        const Standardized st = standardize(panel, train);
        r.times.preprocess = seconds_since(start);

        start = Clock::now();
        const InvariantGraph graph = fccg_cluster(st.panel, train, pc.fccg, spec.seed);
        r.times.fit = seconds_since(start);

        std::map<RcaMethod, std::array<std::size_t, 3>> counts;
        for (RcaMethod m : options.methods) counts[m] = {0, 0, 0};
        for (const auto& w : sc.truth.windows) {
            if (w.window.begin < train_end) {
                throw Error(ErrorKind::InvalidSpec, "anomaly window overlaps the training prefix");
            }
            std::size_t begin = w.window.begin > pc.window_lead ? w.window.begin - pc.window_lead : 0;
            begin = std::max({begin, train_end, graph.max_warmup()});
            const std::size_t end = std::min(begin + pc.detect.window, panel.length());
            const IndexRange window{begin, end};

            start = Clock::now();
            const auto event =
                detect_anomaly(graph, st.panel, window, pc.detect.system_threshold, pc.detect.break_ratio_min);
            r.times.detect += seconds_since(start);
            ++r.windows;
            if (event) ++r.events;

            for (RcaMethod m : options.methods) {
                start = Clock::now();
                RootCauseRanking ranking = make_ranking(m, {}, options.top_n);
                switch (m) {
                    case RcaMethod::Threshold:
                        ranking = threshold_rank(panel, st.stats, window, pc.threshold_k_sigma, options.top_n);
                        break;
                    case RcaMethod::Ig:
                        if (event) ranking = ig_rank(*event, graph, options.top_n);
                        break;
                    case RcaMethod::LbpIg:
                        if (event) ranking = lbp_ig_rank(*event, graph, pc.lbp, options.top_n);
                        break;
                    case RcaMethod::Tcorca:
                        if (event) ranking = tcorca_rank(*event, pc.causal, options.top_n);
                        break;
                }
                r.times.rank[m] += seconds_since(start);
                const Prf prf = precision_recall_f1(ranking, w.root_causes, options.top_n);
                counts[m][0] += prf.tp;
                counts[m][1] += prf.fp;
                counts[m][2] += prf.fn;
            }
        }
        if (r.windows == 0) throw Error(ErrorKind::UndefinedMetric, "scenario has no anomaly windows");
        for (const auto& [m, c] : counts) r.metrics[m] = pooled(c[0], c[1], c[2]);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        r.metrics.clear();
    }
    return r;
}

MetricReport run_benchmark(const std::vector<ScenarioSpec>& suite, const BenchmarkOptions& options) {
    if (suite.empty()) throw Error(ErrorKind::InvalidConfig, "benchmark suite is empty");
    if (options.methods.empty()) throw Error(ErrorKind::InvalidConfig, "no methods selected");
    if (options.top_n == 0) throw Error(ErrorKind::InvalidConfig, "top_n must be at least 1");
    const auto start = Clock::now();

    MetricReport report;
    report.top_n = options.top_n;
    report.methods = options.methods;
    report.fingerprint = config_fingerprint(suite, options);
    report.rows.resize(suite.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < suite.size(); i = next++) report.rows[i] = run_scenario(suite[i], options, i);
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, suite.size());
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < jobs; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    for (const auto& row : report.rows) report.failures += row.ok ? 0 : 1;
    report.partial = report.failures > 0;
    for (RcaMethod m : options.methods) {
        MethodSummary s;
        s.method = m;
        std::vector<double> p, rc, f;
        for (const auto& row : report.rows) {
            if (!row.ok) continue;
            const Prf& x = row.metrics.at(m);
            p.push_back(x.precision);
            rc.push_back(x.recall);
            f.push_back(x.f1);
            s.mean.tp += x.tp;
            s.mean.fp += x.fp;
            s.mean.fn += x.fn;
        }
        s.scenarios = p.size();
        if (!p.empty()) {
            const double k = static_cast<double>(p.size());
            s.mean.precision = std::accumulate(p.begin(), p.end(), 0.0) / k;
            s.mean.recall = std::accumulate(rc.begin(), rc.end(), 0.0) / k;
            s.mean.f1 = std::accumulate(f.begin(), f.end(), 0.0) / k;
            s.precision_std = sample_std(p, s.mean.precision);
            s.recall_std = sample_std(rc, s.mean.recall);
            s.f1_std = sample_std(f, s.mean.f1);
        }
        report.summary.push_back(s);
    }
    report.wall_seconds = seconds_since(start);
    return report;
}

std::vector<ScenarioSpec> seed_suite(const ScenarioSpec& base, std::size_t seeds) {
    std::vector<ScenarioSpec> suite;
    for (std::size_t i = 0; i < seeds; ++i) {
        ScenarioSpec s = base;
        s.seed = base.seed + i;
        suite.push_back(std::move(s));
    }
    return suite;
}

std::string config_fingerprint(const std::vector<ScenarioSpec>& suite, const BenchmarkOptions& options) {
    nlohmann::json methods = nlohmann::json::array();
    for (RcaMethod m : options.methods) methods.push_back(to_string(m));
    const nlohmann::json j{{"suite", suite}, {"methods", methods}, {"top_n", options.top_n},
                           {"pipeline", options.pipeline}};
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json report_json(const MetricReport& report) {
    nlohmann::json methods = nlohmann::json::array();
    for (RcaMethod m : report.methods) methods.push_back(to_string(m));
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : report.summary) {
        nlohmann::json e = prf_json(s.mean);
        e["method"] = to_string(s.method);
        e["scenarios"] = s.scenarios;
        e["precision_std"] = s.precision_std;
        e["recall_std"] = s.recall_std;
        e["f1_std"] = s.f1_std;
        summary.push_back(e);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json metrics = nlohmann::json::object();
        for (const auto& [m, prf] : r.metrics) metrics[to_string(m)] = prf_json(prf);
        rows.push_back({{"index", r.index},
                        {"seed", r.seed},
                        {"n_anomalies", r.n_anomalies},
                        {"ok", r.ok},
                        {"error", r.error},
                        {"windows", r.windows},
                        {"events", r.events},
                        {"metrics", metrics}});
    }
    return {{"format_version", 1},
            {"kind", "metric_report"},
            {"fingerprint", report.fingerprint},
            {"top_n", report.top_n},
            {"methods", methods},
            {"partial", report.partial},
            {"failures", report.failures},
            {"summary", summary},
            {"scenarios", rows}};
}

nlohmann::json timing_json(const MetricReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json rank = nlohmann::json::object();
        for (const auto& [m, s] : r.times.rank) rank[to_string(m)] = s;
        rows.push_back({{"index", r.index},
                        {"generate", r.times.generate},
                        {"preprocess", r.times.preprocess},
                        {"fit", r.times.fit},
                        {"detect", r.times.detect},
                        {"rank", rank}});
    }
    return {{"format_version", 1},
            {"kind", "timing"},
            {"fingerprint", report.fingerprint},
            {"wall_seconds", report.wall_seconds},
            {"scenarios", rows}};
}

std::string report_csv(const MetricReport& report) {
    std::ostringstream out;
    out << "scenario,seed,n_anomalies,method,ok,tp,fp,fn,precision,recall,f1\n";
    for (const auto& r : report.rows) {
        for (RcaMethod m : report.methods) {
            out << r.index << ',' << r.seed << ',' << r.n_anomalies << ',' << to_string(m) << ',' << (r.ok ? 1 : 0);
            if (r.ok) {
                const Prf& p = r.metrics.at(m);
                out << ',' << p.tp << ',' << p.fp << ',' << p.fn << ',' << fixed(p.precision) << ','
                    << fixed(p.recall) << ',' << fixed(p.f1);
            } else {
                out << ",,,,,,";
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<SweepPoint> run_sweep(const ScenarioSpec& base, std::size_t seeds, const std::vector<std::size_t>& counts,
                                  const BenchmarkOptions& options) {
    std::vector<SweepPoint> out;
    for (std::size_t k : counts) {
        ScenarioSpec s = base;
        s.n_anomalies = k;
        out.push_back({k, run_benchmark(seed_suite(s, seeds), options)});
    }
    return out;
}

nlohmann::json plot_data(const std::vector<SweepPoint>& sweep) {
    nlohmann::json x = nlohmann::json::array();
    nlohmann::json series = nlohmann::json::object();
    for (const auto& pt : sweep) {
        x.push_back(pt.n_anomalies);
        for (const auto& s : pt.report.summary) {
            auto& e = series[to_string(s.method)];
            e["precision"].push_back(s.mean.precision);
            e["recall"].push_back(s.mean.recall);
            e["f1"].push_back(s.mean.f1);
            e["f1_std"].push_back(s.f1_std);
        }
    }
    return {{"format_version", 1},
            {"kind", "plot_data"},
            {"x_label", "injected anomalies"},
            {"top_n", sweep.empty() ? 0 : sweep.front().report.top_n},
            {"x", x},
            {"series", series}};
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = nlohmann::json{{"smooth_window", c.smooth_window},     {"train_fraction", c.train_fraction},
                       {"fccg", c.fccg},                       {"detect", c.detect},
                       {"causal", c.causal},                   {"lbp", c.lbp},
                       {"threshold_k_sigma", c.threshold_k_sigma}, {"window_lead", c.window_lead}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
    c.smooth_window = j.at("smooth_window").get<std::size_t>();
    c.train_fraction = j.at("train_fraction").get<double>();
    c.fccg = j.at("fccg").get<FccgConfig>();
    c.detect = j.at("detect").get<DetectConfig>();
    c.causal = j.at("causal").get<CausalConfig>();
    c.lbp = j.at("lbp").get<LbpParams>();
    c.threshold_k_sigma = j.at("threshold_k_sigma").get<double>();
    c.window_lead = j.at("window_lead").get<std::size_t>();
}

}  // namespace netrca
