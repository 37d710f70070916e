#include "netrca/detect.hpp"

#include "netrca/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace netrca {

namespace {

void check_window(const InvariantGraph& graph, const TimeSeriesPanel& panel, IndexRange window) {
    if (window.empty() || window.end > panel.length()) {
        throw Error(ErrorKind::InvalidWindow, "window [" + std::to_string(window.begin) + ", " +
                                                  std::to_string(window.end) + ") outside panel of length " +
                                                  std::to_string(panel.length()));
    }
    const std::size_t warmup = graph.max_warmup();
    if (window.begin < warmup || window.size() < warmup) {
        throw Error(ErrorKind::InvalidWindow, "window [" + std::to_string(window.begin) + ", " +
                                                  std::to_string(window.end) + ") shorter than or before warm-up " +
                                                  std::to_string(warmup));
    }
    if (panel.channels() != graph.channels()) {
        throw Error(ErrorKind::ChannelMismatch, "panel has " + std::to_string(panel.channels()) +
                                                    " channels, graph expects " + std::to_string(graph.channels()));
    }
}

// Highest fitness first, lower edge index on ties.
std::optional<std::size_t> best_edge(const InvariantGraph& graph, const std::vector<std::size_t>& candidates) {
    std::optional<std::size_t> best;
    for (std::size_t e : candidates) {
        if (!best || graph.edges[e].fitness > graph.edges[*best].fitness) best = e;
    }
    return best;
}

}  // namespace

bool AnomalyEvent::is_anomalous(std::size_t c) const {
    return std::binary_search(anomalous_channels.begin(), anomalous_channels.end(), c);
}

std::vector<LinkStatus> evaluate_links(const InvariantGraph& graph, const TimeSeriesPanel& panel, IndexRange window,
                                       double break_ratio_min) {
    check_window(graph, panel, window);
    std::vector<LinkStatus> out;
    out.reserve(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const auto& inv = graph.edges[e];
        const auto r = predict_residuals(inv, panel, window);
        std::size_t violations = 0;
        double peak = 0.0;
        for (double v : r) {
            const double a = std::fabs(v);
            if (a > inv.residual_threshold) ++violations;
            peak = std::max(peak, a);
        }
        LinkStatus s;
        s.edge = e;
        s.window = window;
        s.violation_ratio = static_cast<double>(violations) / static_cast<double>(r.size());
        s.peak_residual = peak;
        s.broken = s.violation_ratio >= break_ratio_min;
        out.push_back(s);
    }
    return out;
}

std::optional<AnomalyEvent> assemble_event(const InvariantGraph& graph, const TimeSeriesPanel& panel,
                                           IndexRange window, std::vector<LinkStatus> statuses,
                                           double system_threshold) {
    if (statuses.empty()) return std::nullopt;
    std::size_t broken = 0;
    bool sustained = false;
    std::set<std::size_t> anomalous;
    for (const auto& s : statuses) {
        if (!s.broken) continue;
        ++broken;
        if (s.violation_ratio >= 1.0) sustained = true;
        anomalous.insert(graph.edges[s.edge].source);
        anomalous.insert(graph.edges[s.edge].target);
    }
    const double ratio = static_cast<double>(broken) / static_cast<double>(statuses.size());
    if (broken == 0 || !(ratio >= system_threshold || sustained)) return std::nullopt;

    AnomalyEvent event;
    event.window = window;
    event.statuses = std::move(statuses);
    event.anomalous_channels.assign(anomalous.begin(), anomalous.end());
    event.system_broken_ratio = ratio;
    event.channel_names = graph.channel_names;
    for (std::size_t c : event.anomalous_channels) {
        std::vector<std::size_t> incoming;
        std::vector<std::size_t> incident;
        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            if (graph.edges[e].target == c) incoming.push_back(e);
            if (graph.edges[e].target == c || graph.edges[e].source == c) incident.push_back(e);
        }
        auto rep = best_edge(graph, incoming);
        if (!rep) rep = best_edge(graph, incident);
        event.residual_series[c] = ChannelResidual{*rep, predict_residuals(graph.edges[*rep], panel, window)};
    }
    return event;
}

std::optional<AnomalyEvent> detect_anomaly(const InvariantGraph& graph, const TimeSeriesPanel& panel,
                                           IndexRange window, double system_threshold, double break_ratio_min) {
    auto statuses = evaluate_links(graph, panel, window, break_ratio_min);
    return assemble_event(graph, panel, window, std::move(statuses), system_threshold);
}

std::vector<IndexRange> sliding_windows(const InvariantGraph& graph, std::size_t length, std::size_t window,
                                        std::size_t begin) {
    if (window == 0) {
        throw Error(ErrorKind::InvalidWindow, "scan window must be positive");
    }
    const std::size_t stride = std::max<std::size_t>(1, window / 2);
    std::vector<IndexRange> out;
    for (std::size_t start = std::max(begin, graph.max_warmup()); start + window <= length; start += stride) {
        out.push_back({start, start + window});
    }
    return out;
}

std::vector<AnomalyEvent> scan(const InvariantGraph& graph, const TimeSeriesPanel& panel, const DetectConfig& config,
                               std::size_t begin) {
    std::vector<AnomalyEvent> events;
    for (const auto& w : sliding_windows(graph, panel.length(), config.window, begin)) {
        if (auto ev = detect_anomaly(graph, panel, w, config.system_threshold, config.break_ratio_min)) {
            events.push_back(std::move(*ev));
        }
    }
    return events;
}

void to_json(nlohmann::json& j, const DetectConfig& c) {
    j = nlohmann::json{{"break_ratio_min", c.break_ratio_min},
                       {"system_threshold", c.system_threshold},
                       {"window", c.window}};
}

void from_json(const nlohmann::json& j, DetectConfig& c) {
    c.break_ratio_min = j.at("break_ratio_min").get<double>();
    c.system_threshold = j.at("system_threshold").get<double>();
    c.window = j.at("window").get<std::size_t>();
}

void to_json(nlohmann::json& j, const LinkStatus& s) {
    j = nlohmann::json{{"edge", s.edge},
                       {"window", s.window},
                       {"broken", s.broken},
                       {"violation_ratio", s.violation_ratio},
                       {"peak_residual", s.peak_residual}};
}

void from_json(const nlohmann::json& j, LinkStatus& s) {
    s.edge = j.at("edge").get<std::size_t>();
    s.window = j.at("window").get<IndexRange>();
    s.broken = j.at("broken").get<bool>();
    s.violation_ratio = j.at("violation_ratio").get<double>();
    s.peak_residual = j.at("peak_residual").get<double>();
}

void to_json(nlohmann::json& j, const AnomalyEvent& e) {
    nlohmann::json names = nlohmann::json::array();
    nlohmann::json residuals = nlohmann::json::array();
    for (std::size_t c : e.anomalous_channels) {
        names.push_back(c < e.channel_names.size() ? e.channel_names[c] : std::to_string(c));
        const auto& r = e.residual_series.at(c);
        residuals.push_back({{"channel", c}, {"edge", r.edge}, {"values", r.values}});
    }
    j = nlohmann::json{{"format_version", 1},
                       {"kind", "anomaly_event"},
                       {"window", e.window},
                       {"system_broken_ratio", e.system_broken_ratio},
                       {"anomalous_channels", e.anomalous_channels},
                       {"anomalous_channel_names", names},
                       {"channel_names", e.channel_names},
                       {"statuses", e.statuses},
                       {"residual_series", residuals}};
}

void from_json(const nlohmann::json& j, AnomalyEvent& e) {
    if (j.at("format_version").get<int>() != 1 || j.value("kind", "") != "anomaly_event") {
        throw Error(ErrorKind::MalformedInput, "not a version-1 anomaly event document");
    }
    e.window = j.at("window").get<IndexRange>();
    e.system_broken_ratio = j.at("system_broken_ratio").get<double>();
    e.anomalous_channels = j.at("anomalous_channels").get<std::vector<std::size_t>>();
    e.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    e.statuses = j.at("statuses").get<std::vector<LinkStatus>>();
    e.residual_series.clear();
    for (const auto& r : j.at("residual_series")) {
        e.residual_series[r.at("channel").get<std::size_t>()] =
            ChannelResidual{r.at("edge").get<std::size_t>(), r.at("values").get<std::vector<double>>()};
    }
}

}  // namespace netrca
