#pragma once

#include "netrca/invariant.hpp"
#include "netrca/panel.hpp"

#include <map>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

struct DetectConfig {
    double break_ratio_min = 0.2;   ///< fraction of window samples with |r| > epsilon
    double system_threshold = 0.05; ///< broken edges / all edges needed for an event
    std::size_t window = 100;       ///< sliding-scan window length
    bool operator==(const DetectConfig&) const = default;
};

struct LinkStatus {
    std::size_t edge = 0;  ///< index into InvariantGraph::edges
    IndexRange window;
    bool broken = false;
    double violation_ratio = 0.0;
    double peak_residual = 0.0;
    bool operator==(const LinkStatus&) const = default;
};

struct ChannelResidual {
    std::size_t edge = 0;         ///< representative edge
    std::vector<double> values;   ///< one per window sample
    bool operator==(const ChannelResidual&) const = default;
};

struct AnomalyEvent {
    IndexRange window;
    std::vector<LinkStatus> statuses;
    std::vector<std::size_t> anomalous_channels;  ///< ascending
    std::map<std::size_t, ChannelResidual> residual_series;
    double system_broken_ratio = 0.0;
    std::vector<std::string> channel_names;  ///< copied from the graph, for export

    bool is_anomalous(std::size_t c) const;
    bool operator==(const AnomalyEvent&) const = default;
};

/// One status per edge, in edge order.
std::vector<LinkStatus> evaluate_links(const InvariantGraph& graph, const TimeSeriesPanel& panel, IndexRange window,
                                       double break_ratio_min = 0.2);

/**
 * Assembles an event from precomputed statuses: fires when the broken share of
 * edges reaches system_threshold or any edge is violated on every sample.
 * Each anomalous channel is represented by the residual of its highest-fitness
 * incoming edge, falling back to its highest-fitness incident edge.
 */
std::optional<AnomalyEvent> assemble_event(const InvariantGraph& graph, const TimeSeriesPanel& panel,
                                           IndexRange window, std::vector<LinkStatus> statuses,
                                           double system_threshold);

std::optional<AnomalyEvent> detect_anomaly(const InvariantGraph& graph, const TimeSeriesPanel& panel,
                                           IndexRange window, double system_threshold = 0.05,
                                           double break_ratio_min = 0.2);

/// Windows of config.window samples at stride window/2, starting after the graph warm-up.
std::vector<IndexRange> sliding_windows(const InvariantGraph& graph, std::size_t length, std::size_t window,
                                        std::size_t begin = 0);

std::vector<AnomalyEvent> scan(const InvariantGraph& graph, const TimeSeriesPanel& panel, const DetectConfig& config,
                               std::size_t begin = 0);

void to_json(nlohmann::json& j, const DetectConfig& c);
void from_json(const nlohmann::json& j, DetectConfig& c);
void to_json(nlohmann::json& j, const LinkStatus& s);
void from_json(const nlohmann::json& j, LinkStatus& s);
void to_json(nlohmann::json& j, const AnomalyEvent& e);
void from_json(const nlohmann::json& j, AnomalyEvent& e);

}  // namespace netrca
