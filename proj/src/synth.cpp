#include "netrca/synth.hpp"

#include "netrca/error.hpp"
#include "netrca/json_util.hpp"
#include "netrca/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <functional>
#include <map>
#include <set>

namespace netrca {

namespace {

enum Stream : std::uint64_t { kBaseStream = 0, kDependencyStream = 1, kNoiseStream = 2, kAnomalyStream = 3 };

struct Parents {
    std::vector<std::vector<Dependency>> of;  // incoming dependencies per channel
};

Parents parents_of(std::size_t channels, const std::vector<Dependency>& deps) {
    Parents p;
    p.of.resize(channels);
    for (const auto& d : deps) p.of[d.target].push_back(d);
    return p;
}

// Topological order, or the channels of one cycle when the graph is cyclic.
std::vector<std::size_t> topo_order(std::size_t channels, const std::vector<Dependency>& deps,
                                    std::vector<std::size_t>* cycle) {
    std::vector<std::vector<std::size_t>> out(channels);
    for (const auto& d : deps) out[d.source].push_back(d.target);
    for (auto& o : out) std::sort(o.begin(), o.end());
    std::vector<int> state(channels, 0);
    std::vector<std::size_t> order;
    std::vector<std::size_t> stack;
    std::function<bool(std::size_t)> visit = [&](std::size_t u) {
        state[u] = 1;
        stack.push_back(u);
        for (std::size_t v : out[u]) {
            if (state[v] == 1) {
                if (cycle) {
                    auto it = std::find(stack.begin(), stack.end(), v);
                    cycle->assign(it, stack.end());
                    cycle->push_back(v);
                }
                return false;
            }
            if (state[v] == 0 && !visit(v)) return false;
        }
        stack.pop_back();
        state[u] = 2;
        order.push_back(u);
        return true;
    };
    for (std::size_t u = 0; u < channels; ++u) {
        if (state[u] == 0 && !visit(u)) return {};
    }
    std::reverse(order.begin(), order.end());
    return order;
}

std::size_t longest_delay_path(std::size_t channels, const std::vector<Dependency>& deps,
                               const std::vector<std::size_t>& order) {
    const Parents p = parents_of(channels, deps);
    std::vector<std::size_t> depth(channels, 0);
    std::size_t best = 0;
    for (std::size_t c : order) {
        for (const auto& d : p.of[c]) depth[c] = std::max(depth[c], depth[d.source] + d.delay);
        best = std::max(best, depth[c]);
    }
    return best;
}

double channel_mean(const Matrix& values, Eigen::Index c) {
    return values.col(c).mean();
}

double channel_std(const Matrix& values, Eigen::Index c) {
    const double m = values.col(c).mean();
    return std::sqrt((values.col(c).array() - m).square().mean());
}

std::vector<PlannedAnomaly> plan_anomalies(const ScenarioSpec& spec) {
    if (!spec.anomalies.empty()) return spec.anomalies;
    std::vector<PlannedAnomaly> out;
    if (spec.n_anomalies == 0) return out;
    Rng rng(Rng::derive(spec.seed, kAnomalyStream));
    const std::size_t region_begin =
        static_cast<std::size_t>(std::floor(spec.anomaly_region_start * static_cast<double>(spec.length)));
    const std::size_t slot = (spec.length - region_begin) / spec.n_windows;
    std::vector<IndexRange> windows;
    for (std::size_t w = 0; w < spec.n_windows; ++w) {
        const std::size_t lo = region_begin + w * slot;
        const std::size_t start = lo + rng.index(slot - spec.window_length + 1);
        windows.push_back({start, start + spec.window_length});
    }
    std::vector<std::size_t> pool(spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c) pool[c] = c;
    for (std::size_t i = 0; i < spec.n_anomalies; ++i) {
        const std::size_t j = i + rng.index(pool.size() - i);
        std::swap(pool[i], pool[j]);
        PlannedAnomaly a;
        a.channel = pool[i];
        a.kind = spec.kinds[rng.index(spec.kinds.size())];
        a.window = windows[i % spec.n_windows];
        out.push_back(a);
    }
    return out;
}

}  // namespace

AnomalyKind parse_anomaly_kind(const std::string& name) {
    if (name == "spike") return AnomalyKind::Spike;
    if (name == "level-shift") return AnomalyKind::LevelShift;
    if (name == "amplitude-change") return AnomalyKind::AmplitudeChange;
    throw Error(ErrorKind::InvalidSpec, "unknown anomaly kind '" + name + "'");
}

std::string to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::Spike: return "spike";
        case AnomalyKind::LevelShift: return "level-shift";
        case AnomalyKind::AmplitudeChange: return "amplitude-change";
    }
    return "level-shift";
}

std::vector<std::string> channel_names(std::size_t channels) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < channels; ++c) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "kpi_%03zu", c);
        names.emplace_back(buf);
    }
    return names;
}

std::vector<Dependency> resolve_dependencies(const ScenarioSpec& spec) {
    if (!spec.dependencies.empty() || !spec.random_dependencies) return spec.dependencies;
    std::vector<Dependency> deps;
    Rng rng(Rng::derive(spec.seed, kDependencyStream));
    const auto& sh = spec.shape;
    auto draw = [&](std::size_t source, std::size_t target) {
        Dependency d;
        d.source = source;
        d.target = target;
        d.delay = sh.delay_min + rng.index(sh.delay_max - sh.delay_min + 1);
        d.gain = rng.uniform(sh.gain_min, sh.gain_max);
        return d;
    };
    for (std::size_t c = spec.n_sources; c < spec.channels; ++c) {
        const std::size_t first = rng.index(c);
        deps.push_back(draw(first, c));
        if (c >= 2 && rng.uniform01() < sh.second_parent_prob) {
            std::size_t second = rng.index(c - 1);
            if (second >= first) ++second;
            deps.push_back(draw(second, c));
        }
    }
    return deps;
}

void validate_spec(const ScenarioSpec& spec) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidSpec, msg); };
    if (spec.channels == 0) fail("channel count must be positive");
    if (spec.length < 2) fail("length must be at least 2");
    if (spec.n_sources > spec.channels) fail("n_sources exceeds channel count");
    if (spec.anomalies.empty() && spec.n_anomalies > spec.channels) fail("n_anomalies exceeds channel count");
    if (spec.noise_std < 0.0) fail("noise_std must be nonnegative");
    if (spec.kinds.empty() && spec.n_anomalies > 0 && spec.anomalies.empty()) fail("no anomaly kinds configured");
    if (spec.step_seconds <= 0) fail("step_seconds must be positive");
    const auto& sh = spec.shape;
    if (sh.delay_min < 1 || sh.delay_max < sh.delay_min) fail("dependency delays must satisfy 1 <= min <= max");
    if (!(sh.gain_max >= sh.gain_min)) fail("dependency gain range is empty");

    const auto deps = resolve_dependencies(spec);
    for (const auto& d : deps) {
        if (d.source >= spec.channels || d.target >= spec.channels) fail("dependency channel out of range");
        if (d.delay < 1) fail("dependency delays must be >= 1");
        if (d.target < spec.n_sources) {
            fail("base channel " + std::to_string(d.target) + " cannot have parents");
        }
    }
    std::vector<std::size_t> cycle;
    if (topo_order(spec.channels, deps, &cycle).empty()) {
        const auto names = channel_names(spec.channels);
        std::string path;
        for (std::size_t i = 0; i < cycle.size(); ++i) path += (i ? " -> " : "") + names[cycle[i]];
        fail("dependency cycle: " + path);
    }

    if (spec.anomalies.empty() && spec.n_anomalies > 0) {
        if (spec.n_windows == 0) fail("n_windows must be positive");
        if (spec.window_length == 0) fail("window_length must be positive");
        if (!(spec.anomaly_region_start >= 0.0 && spec.anomaly_region_start < 1.0)) {
            fail("anomaly_region_start must lie in [0, 1)");
        }
        const std::size_t region_begin =
            static_cast<std::size_t>(std::floor(spec.anomaly_region_start * static_cast<double>(spec.length)));
        if ((spec.length - region_begin) / spec.n_windows < spec.window_length) {
            fail("anomaly windows do not fit after the clean region");
        }
    }
    for (std::size_t i = 0; i < spec.anomalies.size(); ++i) {
        const auto& a = spec.anomalies[i];
        if (a.channel >= spec.channels) fail("anomaly channel out of range");
        if (a.window.empty() || a.window.end > spec.length) fail("anomaly window outside the series");
        for (std::size_t k = 0; k < i; ++k) {
            const auto& b = spec.anomalies[k];
            if (b.channel == a.channel && a.window.begin < b.window.end && b.window.begin < a.window.end) {
                fail("overlapping anomaly windows on channel " + std::to_string(a.channel));
            }
        }
    }
}

Scenario generate_panel(const ScenarioSpec& spec) {
    validate_spec(spec);
    const auto deps = resolve_dependencies(spec);
    const auto order = topo_order(spec.channels, deps, nullptr);
    const Parents parents = parents_of(spec.channels, deps);
    const std::size_t burn = longest_delay_path(spec.channels, deps, order);
    const std::size_t total = spec.length + burn;

    Rng base_rng(Rng::derive(spec.seed, kBaseStream));
    Rng noise_rng(Rng::derive(spec.seed, kNoiseStream));
    Matrix ext = Matrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(spec.channels));
    for (std::size_t c = 0; c < spec.n_sources; ++c) {
        const double f = base_rng.uniform(0.01, 0.1);
        const double amp = base_rng.uniform(0.5, 2.0);
        const double phase = base_rng.uniform(0.0, 2.0 * std::numbers::pi);
        for (std::size_t t = 0; t < total; ++t) {
            const double time = static_cast<double>(t) - static_cast<double>(burn);
            ext(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
                amp * std::sin(2.0 * std::numbers::pi * f * time + phase);
        }
    }
    Matrix noise(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(spec.channels));
    for (std::size_t c = 0; c < spec.channels; ++c) {
        for (std::size_t t = 0; t < total; ++t) {
            noise(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = spec.noise_std * noise_rng.normal();
        }
    }
    for (std::size_t c : order) {
        if (c < spec.n_sources) continue;
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::size_t t = 0; t < total; ++t) {
            double v = 0.0;
            for (const auto& d : parents.of[c]) {
                if (t >= d.delay) v += d.gain * ext(static_cast<Eigen::Index>(t - d.delay), static_cast<Eigen::Index>(d.source));
            }
            ext(static_cast<Eigen::Index>(t), ci) = v + noise(static_cast<Eigen::Index>(t), ci);
        }
    }

    Matrix values = ext.bottomRows(static_cast<Eigen::Index>(spec.length));
    std::vector<std::int64_t> ts(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) ts[t] = spec.start_time + static_cast<std::int64_t>(t) * spec.step_seconds;
    GroundTruth truth;
    truth.dependencies = deps;
    return Scenario{TimeSeriesPanel(std::move(ts), channel_names(spec.channels), std::move(values)), std::move(truth)};
}

Scenario inject_anomalies(const TimeSeriesPanel& panel, const GroundTruth& truth, const ScenarioSpec& spec) {
    validate_spec(spec);
    if (panel.channels() != spec.channels || panel.length() != spec.length) {
        throw Error(ErrorKind::InvalidSpec, "panel shape does not match the scenario spec");
    }
    const auto planned = plan_anomalies(spec);
    GroundTruth out_truth = truth;
    out_truth.windows.clear();
    if (planned.empty()) return Scenario{panel, std::move(out_truth)};

    const Matrix& clean = panel.values();
    const auto order = topo_order(spec.channels, truth.dependencies, nullptr);
    const Parents parents = parents_of(spec.channels, truth.dependencies);
    Rng rng(Rng::derive(spec.seed, kAnomalyStream + 100));

    std::vector<std::vector<InjectedAnomaly>> own(spec.channels);
    std::vector<InjectedAnomaly> injected;
    for (const auto& a : planned) {
        InjectedAnomaly ia{a.channel, a.kind, a.window};
        if (a.kind == AnomalyKind::Spike) {
            const std::size_t len = std::min<std::size_t>(1 + rng.index(3), a.window.size());
            const std::size_t start = a.window.begin + rng.index(a.window.size() - len + 1);
            ia.span = {start, start + len};
        }
        own[a.channel].push_back(ia);
        injected.push_back(ia);
    }

    const auto T = static_cast<Eigen::Index>(spec.length);
    Matrix delta = Matrix::Zero(T, static_cast<Eigen::Index>(spec.channels));
    for (std::size_t c : order) {
        const auto ci = static_cast<Eigen::Index>(c);
        if (spec.propagate) {
            for (const auto& d : parents.of[c]) {
                const auto di = static_cast<Eigen::Index>(d.delay);
                for (Eigen::Index t = di; t < T; ++t) {
                    delta(t, ci) += d.gain * delta(t - di, static_cast<Eigen::Index>(d.source));
                }
            }
        }
        if (own[c].empty()) continue;
        const double sigma = channel_std(clean, ci);
        const double mean = channel_mean(clean, ci);
        for (const auto& a : own[c]) {
            for (std::size_t t = a.span.begin; t < a.span.end; ++t) {
                const auto ti = static_cast<Eigen::Index>(t);
                const double value = clean(ti, ci) + delta(ti, ci);
                switch (a.kind) {
                    case AnomalyKind::Spike:
                        delta(ti, ci) += spec.spike_sigma * sigma;
                        break;
                    case AnomalyKind::LevelShift:
                        delta(ti, ci) += spec.shift_sigma * sigma;
                        break;
                    case AnomalyKind::AmplitudeChange:
                        delta(ti, ci) = mean + spec.amplitude_factor * (value - mean) - clean(ti, ci);
                        break;
                }
            }
        }
    }

    std::map<std::pair<std::size_t, std::size_t>, TruthWindow> by_window;
    for (const auto& a : planned) {
        auto& w = by_window[{a.window.begin, a.window.end}];
        w.window = a.window;
        w.root_causes.push_back(a.channel);
    }
    for (const auto& ia : injected) {
        for (auto& [key, w] : by_window) {
            if (ia.span.begin >= w.window.begin && ia.span.end <= w.window.end &&
                std::find(w.root_causes.begin(), w.root_causes.end(), ia.channel) != w.root_causes.end()) {
                w.anomalies.push_back(ia);
                break;
            }
        }
    }
    for (auto& [key, w] : by_window) {
        std::sort(w.root_causes.begin(), w.root_causes.end());
        w.root_causes.erase(std::unique(w.root_causes.begin(), w.root_causes.end()), w.root_causes.end());
        out_truth.windows.push_back(std::move(w));
    }
    return Scenario{panel.with_values(clean + delta), std::move(out_truth)};
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    Scenario clean = generate_panel(spec);
    return inject_anomalies(clean.panel, clean.truth, spec);
}

void to_json(nlohmann::json& j, const ScenarioSpec& s) {
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& d : s.dependencies) {
        deps.push_back({{"source", d.source}, {"target", d.target}, {"delay", d.delay}, {"gain", d.gain}});
    }
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : s.kinds) kinds.push_back(to_string(k));
    nlohmann::json anomalies = nlohmann::json::array();
    for (const auto& a : s.anomalies) {
        anomalies.push_back({{"channel", a.channel}, {"kind", to_string(a.kind)}, {"window", a.window}});
    }
    j = nlohmann::json{{"channels", s.channels},
                       {"length", s.length},
                       {"n_sources", s.n_sources},
                       {"dependencies", deps},
                       {"random_dependencies", s.random_dependencies},
                       {"shape",
                        {{"second_parent_prob", s.shape.second_parent_prob},
                         {"delay_min", s.shape.delay_min},
                         {"delay_max", s.shape.delay_max},
                         {"gain_min", s.shape.gain_min},
                         {"gain_max", s.shape.gain_max}}},
                       {"noise_std", s.noise_std},
                       {"n_anomalies", s.n_anomalies},
                       {"kinds", kinds},
                       {"window_length", s.window_length},
                       {"n_windows", s.n_windows},
                       {"anomaly_region_start", s.anomaly_region_start},
                       {"propagate", s.propagate},
                       {"seed", s.seed},
                       {"spike_sigma", s.spike_sigma},
                       {"shift_sigma", s.shift_sigma},
                       {"amplitude_factor", s.amplitude_factor},
                       {"anomalies", anomalies},
                       {"start_time", s.start_time},
                       {"step_seconds", s.step_seconds}};
}

void from_json(const nlohmann::json& j, ScenarioSpec& s) {
    StrictReader r(j, "scenario", ErrorKind::InvalidSpec);
    r.read("channels", s.channels);
    r.read("length", s.length);
    r.read("n_sources", s.n_sources);
    if (j.contains("dependencies")) {
        s.dependencies.clear();
        for (const auto& d : j.at("dependencies")) {
            StrictReader dr(d, "dependency", ErrorKind::InvalidSpec);
            Dependency dep;
            dr.require("source", dep.source);
            dr.require("target", dep.target);
            dr.read("delay", dep.delay);
            dr.read("gain", dep.gain);
            dr.finish();
            s.dependencies.push_back(dep);
        }
        r.mark("dependencies");
    }
    r.read("random_dependencies", s.random_dependencies);
    if (j.contains("shape")) {
        StrictReader sr(j.at("shape"), "scenario.shape", ErrorKind::InvalidSpec);
        sr.read("second_parent_prob", s.shape.second_parent_prob);
        sr.read("delay_min", s.shape.delay_min);
        sr.read("delay_max", s.shape.delay_max);
        sr.read("gain_min", s.shape.gain_min);
        sr.read("gain_max", s.shape.gain_max);
        sr.finish();
        r.mark("shape");
    }
    r.read("noise_std", s.noise_std);
    r.read("n_anomalies", s.n_anomalies);
    if (j.contains("kinds")) {
        s.kinds.clear();
        for (const auto& k : j.at("kinds")) s.kinds.push_back(parse_anomaly_kind(k.get<std::string>()));
        r.mark("kinds");
    }
    r.read("window_length", s.window_length);
    r.read("n_windows", s.n_windows);
    r.read("anomaly_region_start", s.anomaly_region_start);
    r.read("propagate", s.propagate);
    r.read("seed", s.seed);
    r.read("spike_sigma", s.spike_sigma);
    r.read("shift_sigma", s.shift_sigma);
    r.read("amplitude_factor", s.amplitude_factor);
    if (j.contains("anomalies")) {
        s.anomalies.clear();
        for (const auto& a : j.at("anomalies")) {
            StrictReader ar(a, "anomaly", ErrorKind::InvalidSpec);
            PlannedAnomaly pa;
            ar.require("channel", pa.channel);
            std::string kind = "level-shift";
            ar.read("kind", kind);
            pa.kind = parse_anomaly_kind(kind);
            ar.require("window", pa.window);
            ar.finish();
            s.anomalies.push_back(pa);
        }
        r.mark("anomalies");
    }
    r.read("start_time", s.start_time);
    r.read("step_seconds", s.step_seconds);
    r.finish();
}

void to_json(nlohmann::json& j, const GroundTruth& t) {
    nlohmann::json deps = nlohmann::json::array();
    for (const auto& d : t.dependencies) {
        deps.push_back({{"source", d.source}, {"target", d.target}, {"delay", d.delay}, {"gain", d.gain}});
    }
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& w : t.windows) {
        nlohmann::json anomalies = nlohmann::json::array();
        for (const auto& a : w.anomalies) {
            anomalies.push_back({{"channel", a.channel}, {"kind", to_string(a.kind)}, {"span", a.span}});
        }
        windows.push_back({{"window", w.window}, {"root_causes", w.root_causes}, {"anomalies", anomalies}});
    }
    j = nlohmann::json{{"format_version", 1}, {"kind", "ground_truth"}, {"dependencies", deps}, {"windows", windows}};
}

void from_json(const nlohmann::json& j, GroundTruth& t) {
    if (j.at("format_version").get<int>() != 1) {
        throw Error(ErrorKind::MalformedInput, "unsupported ground truth format_version");
    }
    t.dependencies.clear();
    for (const auto& d : j.at("dependencies")) {
        t.dependencies.push_back({d.at("source").get<std::size_t>(), d.at("target").get<std::size_t>(),
                                  d.at("delay").get<std::size_t>(), d.at("gain").get<double>()});
    }
    t.windows.clear();
    for (const auto& w : j.at("windows")) {
        TruthWindow tw;
        tw.window = w.at("window").get<IndexRange>();
        tw.root_causes = w.at("root_causes").get<std::vector<std::size_t>>();
        for (const auto& a : w.at("anomalies")) {
            tw.anomalies.push_back({a.at("channel").get<std::size_t>(), parse_anomaly_kind(a.at("kind").get<std::string>()),
                                    a.at("span").get<IndexRange>()});
        }
        t.windows.push_back(std::move(tw));
    }
}

}  // namespace netrca
