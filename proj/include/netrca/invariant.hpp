#pragma once

#include "netrca/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

enum class FeatureMap { Linear, Quadratic };

FeatureMap parse_feature_map(const std::string& name);
std::string to_string(FeatureMap map);

struct ArxOrders {
    std::size_t ar = 2;         ///< n: lags of the target
    std::size_t exo = 2;        ///< m: exogenous terms are x(t-k-0) .. x(t-k-m)
    std::size_t max_delay = 5;  ///< k_max: delay search bound
    bool operator==(const ArxOrders&) const = default;
};

/**
 * One fitted invariant y(t) = sum_i a_i y(t-i) + sum_j b_j x(t-k-j) [+ sum_j q_j x(t-k-j)^2] + c.
 *
 * coeffs layout: [a_1..a_n, b_0..b_m, (q_0..q_m when quadratic), c].
 */
struct ArxInvariant {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t ar_order = 0;
    std::size_t exo_order = 0;
    std::size_t delay = 0;
    FeatureMap feature_map = FeatureMap::Linear;
    std::vector<double> coeffs;
    double fitness = 0.0;
    double residual_threshold = 0.0;
    IndexRange fit_range;  ///< rows whose one-step residuals define fitness and threshold
    bool rank_deficient = false;

    /// First index at which every lag exists.
    std::size_t warmup() const { return std::max(ar_order, delay + exo_order); }
    double intercept() const { return coeffs.back(); }

    bool operator==(const ArxInvariant&) const = default;
};

struct ArxFitOptions {
    ArxOrders orders;
    FeatureMap feature_map = FeatureMap::Linear;
    double tol_factor = 1.1;
};

/**
 * Least-squares fit of target on its own lags and lagged source values, with
 * the delay chosen in [0, max_delay] to maximize fitness 1 - sqrt(SSE/SST).
 * All candidate delays are scored on the same rows. Rank-deficient designs are
 * solved with the minimum-norm solution and flagged.
 */
ArxInvariant fit_arx(const TimeSeriesPanel& panel, std::size_t source, std::size_t target,
                     IndexRange train_range, const ArxFitOptions& options = {});

/// r(t) = y(t) - yhat(t) for every t in range.
std::vector<double> predict_residuals(const ArxInvariant& inv, const TimeSeriesPanel& panel, IndexRange range);

/// Fitness recomputed from residuals on the invariant's own fit range.
double recompute_fitness(const ArxInvariant& inv, const TimeSeriesPanel& panel);

struct FccgConfig {
    double fitness_min = 0.7;
    ArxOrders orders;
    FeatureMap feature_map = FeatureMap::Linear;
    std::size_t max_cluster_size = 0;  ///< 0 selects ceil(sqrt(D))
    double tol_factor = 1.1;
    bool operator==(const FccgConfig&) const = default;
};

struct Cluster {
    std::size_t pivot = 0;
    std::vector<std::size_t> members;  ///< ascending, excluding the pivot
    bool operator==(const Cluster&) const = default;
};

class InvariantGraph {
public:
    InvariantGraph() = default;

    std::vector<std::string> channel_names;
    std::vector<Cluster> clusters;     ///< in pivot draw order
    std::vector<ArxInvariant> edges;   ///< pivot-member edges by cluster, then pivot-pivot edges
    std::vector<std::size_t> constant_channels;
    IndexRange fitted_on;
    FccgConfig config;
    std::uint64_t seed = 0;
    std::size_t pair_fit_count = 0;

    std::size_t channels() const { return channel_names.size(); }
    /// Edge indices incident to channel c.
    std::vector<std::size_t> incident_edges(std::size_t c) const;
    /// Deepest warm-up over all edges.
    std::size_t max_warmup() const;
    std::vector<std::size_t> pivots() const;

    bool operator==(const InvariantGraph&) const = default;
};

/**
 * Fast cluster correlation graph: repeatedly draw an unassigned pivot, fit it
 * against every remaining unassigned channel in both directions, and absorb the
 * best-fitting channels (fitness >= fitness_min, at most max_cluster_size per
 * cluster) until all channels are assigned; finally link pivots to each other.
 * Constant channels are excluded from the search.
 */
InvariantGraph fccg_cluster(const TimeSeriesPanel& panel, IndexRange train_range, const FccgConfig& config,
                            std::uint64_t seed);

/// Same procedure with the pivot sequence given explicitly: each round takes the
/// next listed channel that is still unassigned (the lowest unassigned index once
/// the list is exhausted).
InvariantGraph fccg_cluster_with_pivots(const TimeSeriesPanel& panel, IndexRange train_range,
                                        const FccgConfig& config, const std::vector<std::size_t>& pivot_order);

/// Exact number of fit_arx calls performed while building the graph.
inline std::size_t graph_pair_fit_count(const InvariantGraph& graph) { return graph.pair_fit_count; }

std::size_t effective_cluster_cap(const FccgConfig& config, std::size_t channels);

void to_json(nlohmann::json& j, const ArxOrders& o);
void from_json(const nlohmann::json& j, ArxOrders& o);
void to_json(nlohmann::json& j, const FccgConfig& c);
void from_json(const nlohmann::json& j, FccgConfig& c);
void to_json(nlohmann::json& j, const ArxInvariant& e);
void from_json(const nlohmann::json& j, ArxInvariant& e);
void to_json(nlohmann::json& j, const InvariantGraph& g);
void from_json(const nlohmann::json& j, InvariantGraph& g);

}  // namespace netrca
