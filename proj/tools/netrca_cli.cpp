// netrca: invariant-graph anomaly detection and root-cause ranking for KPI panels.
//
// Exit codes: 0 ok, 1 unexpected error, 2 spec/config error, 3 fit error,
// 4 model/panel mismatch, 5 missing input, 6 every benchmark scenario failed.

#include "netrca/config.hpp"
#include "netrca/detect.hpp"
#include "netrca/error.hpp"
#include "netrca/eval.hpp"
#include "netrca/invariant.hpp"
#include "netrca/panel.hpp"
#include "netrca/rca.hpp"
#include "netrca/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace netrca;

namespace {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
    const char* env = std::getenv("NETRCA_LOG");
    if (!env) return LogLevel::Info;
    const std::string v = env;
    if (v == "quiet" || v == "0") return LogLevel::Quiet;
    if (v == "warn" || v == "1") return LogLevel::Warn;
    if (v == "debug" || v == "3") return LogLevel::Debug;
    return LogLevel::Info;
}

void log(LogLevel level, const std::string& msg) {
    if (level <= log_level()) std::cerr << "[netrca] " << msg << "\n";
}

struct ExitError {
    int code;
    std::string message;
};

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidSpec:
        case ErrorKind::InvalidConfig:
        case ErrorKind::MalformedInput:
            return 2;
        case ErrorKind::NoInvariantsFound:
        case ErrorKind::DegenerateChannel:
        case ErrorKind::InsufficientData:
        case ErrorKind::EmptyInput:
        case ErrorKind::InvalidWindow:
            return 3;
        case ErrorKind::ChannelMismatch:
            return 4;
        case ErrorKind::MissingInput:
            return 5;
        case ErrorKind::UndefinedMetric:
            return 1;
    }
    return 1;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::MissingInput, "cannot write " + path.string());
    out << content;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path, const std::string& what) {
    if (path.empty()) throw Error(ErrorKind::MissingInput, "no " + what + " file given");
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingInput, "cannot open " + what + " file " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::MalformedInput, what + " " + path + ": " + e.what());
    }
}

TimeSeriesPanel read_panel(const std::string& path) {
    if (path.empty()) throw Error(ErrorKind::MissingInput, "no input panel given");
    return load_panel_file(path);
}

Model read_model(const std::string& path) {
    return parse_model(read_json(path, "model"));
}

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> window;
    std::optional<std::string> method;
    std::optional<std::size_t> top_n;
    std::optional<std::string> out_dir;
    std::optional<std::string> input;
    std::optional<std::string> model;
    std::optional<std::string> event;
    std::optional<std::string> methods;
    std::optional<std::size_t> jobs;
    std::optional<std::size_t> seeds;
    bool plot_data = false;
    bool dump_config = false;
};

RunConfig resolve(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_config_file(o.config_path);
    if (o.seed) {
        c.seed = *o.seed;
        c.scenario.seed = *o.seed;
    }
    if (o.window) c.pipeline.detect.window = *o.window;
    if (o.method) {
        parse_method(*o.method);
        c.method = *o.method;
    }
    if (o.top_n) c.top_n = *o.top_n;
    if (o.out_dir) c.paths.output_dir = *o.out_dir;
    if (o.input) c.paths.input_panel = *o.input;
    if (o.model) c.paths.model = *o.model;
    if (o.event) c.paths.event = *o.event;
    if (o.jobs) c.bench.jobs = *o.jobs;
    if (o.seeds) c.bench.seeds = *o.seeds;
    if (o.methods) {
        c.bench.methods.clear();
        std::stringstream ss(*o.methods);
        for (std::string m; std::getline(ss, m, ',');) {
            if (m.empty()) continue;
            parse_method(m);
            c.bench.methods.push_back(m);
        }
    }
    if (c.top_n == 0) throw Error(ErrorKind::InvalidConfig, "top_n must be at least 1");
    return c;
}

int cmd_synth(const RunConfig& c) {
    const Scenario sc = generate_scenario(c.scenario);
    const fs::path dir = c.paths.output_dir;
    fs::create_directories(dir);
    save_panel_file(sc.panel, (dir / "panel.csv").string());
    write_json(dir / "truth.json", sc.truth);
    std::cout << "wrote " << (dir / "panel.csv").string() << " (" << sc.panel.length() << " x " << sc.panel.channels()
              << ") and " << (dir / "truth.json").string() << "\n";
    for (const auto& w : sc.truth.windows) {
        std::cout << "anomaly window [" << w.window.begin << ", " << w.window.end << "): root causes";
        for (std::size_t ch : w.root_causes) std::cout << ' ' << sc.panel.channel_names()[ch];
        std::cout << "\n";
    }
    return 0;
}

int cmd_fit(const RunConfig& c) {
    const TimeSeriesPanel input = read_panel(c.paths.input_panel);
    Model m;
    m.impute = c.impute;
    m.smooth_window = c.pipeline.smooth_window;
    TimeSeriesPanel panel = impute_missing(input, m.impute);
    if (m.smooth_window > 1) panel = smooth(panel, m.smooth_window);
    const auto train_end =
        static_cast<std::size_t>(std::floor(c.pipeline.train_fraction * static_cast<double>(panel.length())));
    const IndexRange train{0, train_end};
    const Standardized st = standardize(panel, train);
    m.stats = st.stats;
    m.graph = fccg_cluster(st.panel, train, c.pipeline.fccg, c.seed);
    const fs::path out = c.paths.model;
    write_json(out, model_json(m));
    std::size_t singletons = 0;
    for (const auto& cl : m.graph.clusters) singletons += cl.members.empty() ? 1 : 0;
    std::cout << "clusters: " << m.graph.clusters.size() << " (" << singletons << " singleton)\n"
              << "edges: " << m.graph.edges.size() << "\n"
              << "pair fits: " << graph_pair_fit_count(m.graph) << "\n"
              << "constant channels: " << m.graph.constant_channels.size() << "\n"
              << "model: " << out.string() << "\n";
    log(LogLevel::Info, "fit " + std::to_string(graph_pair_fit_count(m.graph)) + " pairs on rows [0, " +
                            std::to_string(train_end) + ")");
    return 0;
}

int cmd_detect(const RunConfig& c) {
    const Model m = read_model(c.paths.model);
    const Prepared p = prepare_panel(read_panel(c.paths.input_panel), m);
    const auto events = scan(m.graph, p.standard, c.pipeline.detect);
    const fs::path dir = fs::path(c.paths.output_dir) / "events";
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("event_", 0) == 0 && entry.path().extension() == ".json") fs::remove(entry.path());
    }
    for (std::size_t i = 0; i < events.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "event_%03zu.json", i);
        write_json(dir / name, events[i]);
        std::cout << name << " window [" << events[i].window.begin << ", " << events[i].window.end
                  << ") broken ratio " << events[i].system_broken_ratio << ": ";
        for (std::size_t k = 0; k < events[i].anomalous_channels.size(); ++k) {
            std::cout << (k ? " " : "") << m.graph.channel_names[events[i].anomalous_channels[k]];
        }
        std::cout << "\n";
    }
    std::cout << events.size() << " events\n";
    return 0;
}

int cmd_rca(const RunConfig& c) {
    const AnomalyEvent event = read_json(c.paths.event, "event").get<AnomalyEvent>();
    const RcaMethod method = parse_method(c.method);
    RootCauseRanking ranking;
    std::vector<std::string> names = event.channel_names;
    if (method == RcaMethod::Tcorca) {
        ranking = tcorca_rank(event, c.pipeline.causal, c.top_n);
    } else {
        const Model m = read_model(c.paths.model);
        if (m.graph.channel_names != event.channel_names) {
            throw Error(ErrorKind::ChannelMismatch, "event channels do not match the model");
        }
        if (method == RcaMethod::Ig) {
            ranking = ig_rank(event, m.graph, c.top_n);
        } else if (method == RcaMethod::LbpIg) {
            ranking = lbp_ig_rank(event, m.graph, c.pipeline.lbp, c.top_n);
        } else {
            const Prepared p = prepare_panel(read_panel(c.paths.input_panel), m);
            ranking = threshold_rank(p.raw, m.stats, event.window, c.pipeline.threshold_k_sigma, c.top_n);
        }
    }
    const fs::path out = fs::path(c.paths.output_dir) / ("ranking_" + to_string(method) + ".json");
    write_json(out, ranking_json(ranking, names));
    std::cout << ranking_table(ranking, names);
    if (!ranking.converged) log(LogLevel::Warn, "belief propagation hit its iteration cap");
    return 0;
}

int cmd_bench(const RunConfig& c, bool plot) {
    BenchmarkOptions opt;
    opt.methods.clear();
    for (const auto& m : c.bench.methods) opt.methods.push_back(parse_method(m));
    opt.top_n = c.top_n;
    opt.jobs = c.bench.jobs;
    opt.pipeline = c.pipeline;
    const fs::path dir = c.paths.output_dir;
    fs::create_directories(dir);

    const MetricReport report = run_benchmark(seed_suite(c.scenario, c.bench.seeds), opt);
    write_json(dir / "report.json", report_json(report));
    write_file(dir / "report.csv", report_csv(report));
    write_json(dir / "timing.json", timing_json(report));
    std::printf("%-10s %9s %9s %9s %9s\n", "method", "precision", "recall", "f1", "f1_std");
    for (const auto& s : report.summary) {
        std::printf("%-10s %9.4f %9.4f %9.4f %9.4f\n", to_string(s.method).c_str(), s.mean.precision, s.mean.recall,
                    s.mean.f1, s.f1_std);
    }
    std::cout << report.rows.size() - report.failures << "/" << report.rows.size() << " scenarios ok\n";
    for (const auto& r : report.rows) {
        if (!r.ok) log(LogLevel::Warn, "scenario " + std::to_string(r.index) + " failed: " + r.error);
    }

    if (plot) {
        const auto sweep = run_sweep(c.scenario, c.bench.seeds, c.bench.sweep, opt);
        write_json(dir / "plot_data.json", plot_data(sweep));
        std::cout << "plot data: " << (dir / "plot_data.json").string() << "\n";
    }
    if (report.failures == report.rows.size()) throw ExitError{6, "every benchmark scenario failed"};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Invariant-graph anomaly detection and causal root-cause ranking for KPI panels"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON run configuration");
        sub->add_option("--seed", o.seed, "seed for every random choice");
        sub->add_option("--out-dir", o.out_dir, "directory for output artifacts");
        sub->add_option("--top-n", o.top_n, "ranking length N");
        sub->add_option("--window", o.window, "detection window length");
        sub->add_option("--method", o.method, "tcorca | threshold | ig | lbp-ig");
        sub->add_option("--input", o.input, "input panel CSV");
        sub->add_option("--model", o.model, "model JSON");
        sub->add_flag("--dump-config", o.dump_config, "print the effective configuration and exit");
    };
    auto* synth = app.add_subcommand("synth", "generate a synthetic panel and its ground truth");
    auto* fit = app.add_subcommand("fit", "fit the invariant graph");
    auto* detect = app.add_subcommand("detect", "scan a panel for anomaly events");
    auto* rca = app.add_subcommand("rca", "rank root causes for an event");
    auto* bench = app.add_subcommand("bench", "run the synthetic benchmark");
    for (auto* sub : {synth, fit, detect, rca, bench}) common(sub);
    rca->add_option("--event", o.event, "event JSON");
    bench->add_option("--methods", o.methods, "comma-separated method list");
    bench->add_option("--jobs", o.jobs, "worker threads");
    bench->add_option("--seeds", o.seeds, "number of seeds in the suite");
    bench->add_flag("--plot-data", o.plot_data, "also run the anomaly-count sweep and write plot data");

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig c = resolve(o);
        if (o.dump_config) {
            std::cout << config_json(c).dump(2) << "\n";
            return 0;
        }
        if (synth->parsed()) return cmd_synth(c);
        if (fit->parsed()) return cmd_fit(c);
        if (detect->parsed()) return cmd_detect(c);
        if (rca->parsed()) return cmd_rca(c);
        if (bench->parsed()) return cmd_bench(c, o.plot_data);
    } catch (const ExitError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
