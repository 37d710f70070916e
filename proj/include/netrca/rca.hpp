#pragma once

#include "netrca/causal.hpp"
#include "netrca/detect.hpp"
#include "netrca/invariant.hpp"
#include "netrca/panel.hpp"

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

enum class RcaMethod { Tcorca, Threshold, Ig, LbpIg };

RcaMethod parse_method(const std::string& name);
std::string to_string(RcaMethod method);
const std::vector<RcaMethod>& all_methods();

struct RankEntry {
    std::size_t channel = 0;
    double score = 0.0;
    bool operator==(const RankEntry&) const = default;
};

struct RootCauseRanking {
    RcaMethod method = RcaMethod::Tcorca;
    std::size_t requested = 0;
    std::vector<RankEntry> entries;  ///< scores non-increasing, ties by ascending channel
    bool converged = true;           ///< false when an iterative ranker hit its iteration cap

    std::vector<std::size_t> channels() const;
};

/// Sort by score descending then channel ascending, drop entries past n.
RootCauseRanking make_ranking(RcaMethod method, std::vector<RankEntry> entries, std::size_t n);

struct LbpParams {
    double propagation_prob = 0.5;
    double damping = 0.3;
    std::size_t max_iters = 100;
    double tol = 1e-6;
    std::vector<double> abnormality;  ///< per node; filled from broken-link ratios when ranking an event
    bool operator==(const LbpParams&) const = default;
};

/// Pairwise binary Markov field over graph nodes.
struct LbpGraph {
    struct Edge {
        std::size_t u = 0;
        std::size_t v = 0;
        bool broken = false;
    };
    std::size_t nodes = 0;
    std::vector<Edge> edges;
};

struct LbpResult {
    std::vector<double> belief;  ///< marginal P(node is root cause)
    std::size_t iterations = 0;
    bool converged = false;
};

/**
 * Damped sum-product loopy belief propagation with a synchronous schedule.
 * Unary potential [1 - a, a]; pairwise [[1-p', p'], [p', 1-p']] with p' = p on
 * broken edges and p/4 on intact ones.
 */
LbpResult run_lbp(const LbpGraph& graph, const LbpParams& params);

/// score(c) = max_t |x_c(t) - mean_c| / std_c over the window; kept when >= k_sigma.
RootCauseRanking threshold_rank(const TimeSeriesPanel& panel, const ChannelStats& stats, IndexRange window,
                                double k_sigma, std::size_t n);

/// Per-channel broken-link ratio over the event's statuses.
std::vector<double> broken_ratios(const AnomalyEvent& event, const InvariantGraph& graph);

RootCauseRanking ig_rank(const AnomalyEvent& event, const InvariantGraph& graph, std::size_t n);

RootCauseRanking lbp_ig_rank(const AnomalyEvent& event, const InvariantGraph& graph, const LbpParams& params,
                             std::size_t n);

struct TcorcaDiagnostics {
    CausalGraph causal;
    std::vector<std::size_t> channels;    ///< panel channel of each causal node
    std::vector<std::size_t> candidates;  ///< panel channels
    bool fallback = false;                ///< no arcs: ranked by peak residual
};

/**
 * Causal ranking over the event's residual series: lagged PC + orientation on
 * the anomalous channels, sources of the resulting graph as candidates, and
 * score (1 + anomalous descendants) * peak residual for every anomalous channel.
 */
RootCauseRanking tcorca_rank(const AnomalyEvent& event, const CausalConfig& config, std::size_t n,
                             TcorcaDiagnostics* diagnostics = nullptr);

nlohmann::json ranking_json(const RootCauseRanking& ranking, const std::vector<std::string>& names);
std::string ranking_table(const RootCauseRanking& ranking, const std::vector<std::string>& names);

void to_json(nlohmann::json& j, const LbpParams& p);
void from_json(const nlohmann::json& j, LbpParams& p);

}  // namespace netrca
