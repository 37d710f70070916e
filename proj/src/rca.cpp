#include "netrca/rca.hpp"

#include "netrca/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

namespace netrca {

RcaMethod parse_method(const std::string& name) {
    if (name == "tcorca") return RcaMethod::Tcorca;
    if (name == "threshold") return RcaMethod::Threshold;
    if (name == "ig") return RcaMethod::Ig;
    if (name == "lbp-ig") return RcaMethod::LbpIg;
    throw Error(ErrorKind::InvalidConfig, "unknown RCA method '" + name + "'");
}

std::string to_string(RcaMethod method) {
    switch (method) {
        case RcaMethod::Tcorca: return "tcorca";
        case RcaMethod::Threshold: return "threshold";
        case RcaMethod::Ig: return "ig";
        case RcaMethod::LbpIg: return "lbp-ig";
    }
    return "tcorca";
}

const std::vector<RcaMethod>& all_methods() {
    static const std::vector<RcaMethod> methods{RcaMethod::Tcorca, RcaMethod::Threshold, RcaMethod::Ig,
                                                RcaMethod::LbpIg};
    return methods;
}

std::vector<std::size_t> RootCauseRanking::channels() const {
    std::vector<std::size_t> out;
    for (const auto& e : entries) out.push_back(e.channel);
    return out;
}

RootCauseRanking make_ranking(RcaMethod method, std::vector<RankEntry> entries, std::size_t n) {
    std::sort(entries.begin(), entries.end(), [](const RankEntry& a, const RankEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.channel < b.channel;
    });
    if (entries.size() > n) entries.resize(n);
    RootCauseRanking r;
    r.method = method;
    r.requested = n;
    r.entries = std::move(entries);
    return r;
}

LbpResult run_lbp(const LbpGraph& graph, const LbpParams& params) {
    if (!(params.propagation_prob > 0.0 && params.propagation_prob < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "LBP propagation probability must lie in (0, 1)");
    }
    if (!(params.damping >= 0.0 && params.damping < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "LBP damping must lie in [0, 1)");
    }
    if (params.abnormality.size() != graph.nodes) {
        throw Error(ErrorKind::InvalidConfig, "LBP needs one abnormality degree per node");
    }
    using Msg = std::array<double, 2>;
    const std::size_t E = graph.edges.size();
    // msg[2e] flows u -> v, msg[2e + 1] flows v -> u.
    std::vector<Msg> msg(2 * E, Msg{0.5, 0.5});
    std::vector<std::vector<std::size_t>> incoming(graph.nodes);
    for (std::size_t e = 0; e < E; ++e) {
        const auto& ed = graph.edges[e];
        if (ed.u >= graph.nodes || ed.v >= graph.nodes || ed.u == ed.v) {
            throw Error(ErrorKind::MalformedInput, "LBP edge endpoints invalid");
        }
        incoming[ed.v].push_back(2 * e);
        incoming[ed.u].push_back(2 * e + 1);
    }
    auto unary = [&](std::size_t node) {
        const double a = std::clamp(params.abnormality[node], 0.0, 1.0);
        return Msg{1.0 - a, a};
    };
    auto coupling = [&](const LbpGraph::Edge& ed) {
        return ed.broken ? params.propagation_prob : params.propagation_prob / 4.0;
    };

    LbpResult result;
    result.converged = E == 0;
    for (std::size_t iter = 0; iter < params.max_iters && E > 0; ++iter) {
        std::vector<Msg> next(2 * E);
        double delta = 0.0;
        for (std::size_t m = 0; m < 2 * E; ++m) {
            const auto& ed = graph.edges[m / 2];
            const std::size_t from = (m % 2 == 0) ? ed.u : ed.v;
            Msg h = unary(from);
            for (std::size_t in : incoming[from]) {
                if (in / 2 == m / 2) continue;
                h[0] *= msg[in][0];
                h[1] *= msg[in][1];
            }
            const double p = coupling(ed);
            Msg out{h[0] * (1.0 - p) + h[1] * p, h[0] * p + h[1] * (1.0 - p)};
            double s = out[0] + out[1];
            if (!(s > 0.0)) out = Msg{0.5, 0.5}, s = 1.0;
            out[0] /= s;
            out[1] /= s;
            out[0] = (1.0 - params.damping) * out[0] + params.damping * msg[m][0];
            out[1] = (1.0 - params.damping) * out[1] + params.damping * msg[m][1];
            s = out[0] + out[1];
            out[0] /= s;
            out[1] /= s;
            delta = std::max({delta, std::fabs(out[0] - msg[m][0]), std::fabs(out[1] - msg[m][1])});
            next[m] = out;
        }
        msg = std::move(next);
        result.iterations = iter + 1;
        if (delta < params.tol) {
            result.converged = true;
            break;
        }
    }

    result.belief.resize(graph.nodes);
    for (std::size_t node = 0; node < graph.nodes; ++node) {
        Msg b = unary(node);
        for (std::size_t in : incoming[node]) {
            b[0] *= msg[in][0];
            b[1] *= msg[in][1];
        }
        const double s = b[0] + b[1];
        result.belief[node] = s > 0.0 ? b[1] / s : 0.0;
    }
    return result;
}

RootCauseRanking threshold_rank(const TimeSeriesPanel& panel, const ChannelStats& stats, IndexRange window,
                                double k_sigma, std::size_t n) {
    if (window.empty() || window.end > panel.length()) {
        throw Error(ErrorKind::InvalidWindow, "threshold window outside panel");
    }
    if (stats.mean.size() != panel.channels()) {
        throw Error(ErrorKind::ChannelMismatch, "statistics do not match panel width");
    }
    std::vector<RankEntry> entries;
    for (std::size_t c = 0; c < panel.channels(); ++c) {
        if (stats.constant[c]) continue;
        double score = 0.0;
        for (std::size_t t = window.begin; t < window.end; ++t) {
            score = std::max(score, std::fabs(panel.at(t, c) - stats.mean[c]) / stats.std[c]);
        }
        if (score >= k_sigma) entries.push_back({c, score});
    }
    return make_ranking(RcaMethod::Threshold, std::move(entries), n);
}

std::vector<double> broken_ratios(const AnomalyEvent& event, const InvariantGraph& graph) {
    std::vector<double> total(graph.channels(), 0.0);
    std::vector<double> broken(graph.channels(), 0.0);
    for (const auto& s : event.statuses) {
        const auto& e = graph.edges.at(s.edge);
        for (std::size_t c : {e.source, e.target}) {
            total[c] += 1.0;
            if (s.broken) broken[c] += 1.0;
        }
    }
    std::vector<double> ratio(graph.channels(), 0.0);
    for (std::size_t c = 0; c < ratio.size(); ++c) {
        if (total[c] > 0.0) ratio[c] = broken[c] / total[c];
    }
    return ratio;
}

RootCauseRanking ig_rank(const AnomalyEvent& event, const InvariantGraph& graph, std::size_t n) {
    const auto ratio = broken_ratios(event, graph);
    std::vector<RankEntry> entries;
    for (std::size_t c = 0; c < ratio.size(); ++c) {
        if (ratio[c] > 0.0) entries.push_back({c, ratio[c]});
    }
    return make_ranking(RcaMethod::Ig, std::move(entries), n);
}

RootCauseRanking lbp_ig_rank(const AnomalyEvent& event, const InvariantGraph& graph, const LbpParams& params,
                             std::size_t n) {
    LbpGraph lg;
    lg.nodes = graph.channels();
    std::vector<bool> broken(graph.edges.size(), false);
    for (const auto& s : event.statuses) broken.at(s.edge) = s.broken;
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        lg.edges.push_back({graph.edges[e].source, graph.edges[e].target, broken[e]});
    }
    LbpParams p = params;
    if (p.abnormality.empty()) p.abnormality = broken_ratios(event, graph);
    const LbpResult res = run_lbp(lg, p);

    std::vector<RankEntry> entries;
    for (std::size_t c : event.anomalous_channels) entries.push_back({c, res.belief[c]});
    RootCauseRanking r = make_ranking(RcaMethod::LbpIg, std::move(entries), n);
    r.converged = res.converged;
    return r;
}

RootCauseRanking tcorca_rank(const AnomalyEvent& event, const CausalConfig& config, std::size_t n,
                             TcorcaDiagnostics* diagnostics) {
    if (event.anomalous_channels.empty()) {
        throw Error(ErrorKind::InsufficientData, "event has no anomalous channels");
    }
    std::vector<double> peak;
    std::vector<std::size_t> nodes;
    std::vector<std::vector<double>> series;
    for (std::size_t c : event.anomalous_channels) {
        const auto& values = event.residual_series.at(c).values;
        double pk = 0.0;
        for (double v : values) pk = std::max(pk, std::fabs(v));
        nodes.push_back(c);
        peak.push_back(pk);
        series.push_back(values);
    }

    TcorcaDiagnostics diag;
    diag.channels = nodes;
    auto by_peak = [&] {
        std::vector<RankEntry> entries;
        for (std::size_t i = 0; i < nodes.size(); ++i) entries.push_back({nodes[i], peak[i]});
        diag.candidates = nodes;
        diag.fallback = true;
        if (diagnostics) *diagnostics = diag;
        return make_ranking(RcaMethod::Tcorca, std::move(entries), n);
    };
    if (nodes.size() == 1) return by_peak();

    // Flat residuals carry no information for the CI tests; they keep their (zero) peak score.
    std::vector<std::size_t> active;
    std::vector<std::vector<double>> active_series;
    const std::size_t tau = config.tau_max;
    auto varies = [&](const std::vector<double>& s) {
        if (s.size() <= tau) return false;
        // Every lagged copy used by the CI tests must vary.
        for (std::size_t lag = 0; lag <= tau; ++lag) {
            const auto first = s.begin() + static_cast<std::ptrdiff_t>(tau - lag);
            const auto last = s.end() - static_cast<std::ptrdiff_t>(lag);
            const auto [lo, hi] = std::minmax_element(first, last);
            if (!(*hi - *lo > 1e-9)) return false;
        }
        return true;
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& s = series[i];
        if (varies(s)) {
            active.push_back(i);
            active_series.push_back(s);
        }
    }
    if (active.size() < 2) return by_peak();

    const Skeleton sk = pc_skeleton(active_series, config.tau_max, config.alpha, config.max_cond);
    diag.causal = orient(sk);

    const std::size_t k = nodes.size();
    std::vector<std::vector<std::size_t>> children(k);
    std::vector<std::size_t> indegree(k, 0);
    for (const auto& [cause, effect] : diag.causal.channel_arcs()) {
        children[active[cause]].push_back(active[effect]);
        ++indegree[active[effect]];
    }
    if (diag.causal.channel_arcs().empty()) return by_peak();

    auto descendants = [&](std::size_t start) {
        std::vector<bool> seen(k, false);
        std::vector<std::size_t> stack{start};
        seen[start] = true;
        std::size_t count = 0;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v : children[u]) {
                if (!seen[v]) {
                    seen[v] = true;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return std::pair{count, seen};
    };

    // Sources of the condensation: a node is a candidate unless some node outside
    // its strongly connected component reaches it.
    std::vector<std::vector<bool>> reach(k);
    for (std::size_t i = 0; i < k; ++i) reach[i] = descendants(i).second;
    std::vector<bool> candidate(k, true);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i != j && reach[j][i] && !reach[i][j]) {
                candidate[i] = false;
                break;
            }
        }
    }

    std::vector<RankEntry> entries;
    for (std::size_t i = 0; i < k; ++i) {
        const double desc = static_cast<double>(descendants(i).first);
        entries.push_back({nodes[i], (1.0 + desc) * peak[i]});
        if (candidate[i]) diag.candidates.push_back(nodes[i]);
    }
    if (diagnostics) *diagnostics = diag;
    return make_ranking(RcaMethod::Tcorca, std::move(entries), n);
}

nlohmann::json ranking_json(const RootCauseRanking& ranking, const std::vector<std::string>& names) {
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        entries.push_back({{"rank", i + 1},
                           {"channel", e.channel < names.size() ? names[e.channel] : std::to_string(e.channel)},
                           {"score", e.score},
                           {"method", to_string(ranking.method)}});
    }
    return {{"format_version", 1},
            {"kind", "root_cause_ranking"},
            {"method", to_string(ranking.method)},
            {"top_n", ranking.requested},
            {"converged", ranking.converged},
            {"entries", entries}};
}

std::string ranking_table(const RootCauseRanking& ranking, const std::vector<std::string>& names) {
    std::ostringstream out;
    out << std::left << std::setw(6) << "rank" << std::setw(24) << "channel" << "score\n";
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        const auto& e = ranking.entries[i];
        out << std::left << std::setw(6) << (i + 1) << std::setw(24)
            << (e.channel < names.size() ? names[e.channel] : std::to_string(e.channel)) << std::setprecision(6)
            << e.score << '\n';
    }
    return out.str();
}

void to_json(nlohmann::json& j, const LbpParams& p) {
    j = nlohmann::json{{"propagation_prob", p.propagation_prob},
                       {"damping", p.damping},
                       {"max_iters", p.max_iters},
                       {"tol", p.tol}};
}

void from_json(const nlohmann::json& j, LbpParams& p) {
    p.propagation_prob = j.at("propagation_prob").get<double>();
    p.damping = j.at("damping").get<double>();
    p.max_iters = j.at("max_iters").get<std::size_t>();
    p.tol = j.at("tol").get<double>();
}

}  // namespace netrca
