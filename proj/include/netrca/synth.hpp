#pragma once

#include "netrca/panel.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

enum class AnomalyKind { Spike, LevelShift, AmplitudeChange };

AnomalyKind parse_anomaly_kind(const std::string& name);
std::string to_string(AnomalyKind kind);

struct Dependency {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t delay = 1;
    double gain = 1.0;
    bool operator==(const Dependency&) const = default;
};

/// Explicitly placed anomaly; overrides random placement when any are given.
struct PlannedAnomaly {
    std::size_t channel = 0;
    AnomalyKind kind = AnomalyKind::LevelShift;
    IndexRange window;
    bool operator==(const PlannedAnomaly&) const = default;
};

/// Shape of randomly drawn dependencies (used when `dependencies` is empty).
struct DependencyShape {
    double second_parent_prob = 0.3;
    std::size_t delay_min = 1;
    std::size_t delay_max = 5;
    double gain_min = 0.5;
    double gain_max = 1.5;
    bool operator==(const DependencyShape&) const = default;
};

/**
 * Channels [0, n_sources) are sinusoids A sin(2 pi f t + phi); every other
 * channel is the gain-weighted sum of its delayed parents plus Gaussian noise.
 */
struct ScenarioSpec {
    std::size_t channels = 30;
    std::size_t length = 5000;
    std::size_t n_sources = 10;
    std::vector<Dependency> dependencies;
    bool random_dependencies = true;
    DependencyShape shape;
    double noise_std = 0.1;
    std::size_t n_anomalies = 5;
    std::vector<AnomalyKind> kinds{AnomalyKind::LevelShift, AnomalyKind::AmplitudeChange};
    std::size_t window_length = 100;
    std::size_t n_windows = 1;
    double anomaly_region_start = 0.6;  ///< fraction of length before which nothing is injected
    bool propagate = true;
    std::uint64_t seed = 0;
    double spike_sigma = 8.0;
    double shift_sigma = 5.0;
    double amplitude_factor = 2.5;
    std::vector<PlannedAnomaly> anomalies;
    std::int64_t start_time = 1'600'000'000;
    std::int64_t step_seconds = 60;

    bool operator==(const ScenarioSpec&) const = default;
};

struct InjectedAnomaly {
    std::size_t channel = 0;
    AnomalyKind kind = AnomalyKind::LevelShift;
    IndexRange span;  ///< samples actually modified (spikes cover 1-3 samples)
    bool operator==(const InjectedAnomaly&) const = default;
};

struct TruthWindow {
    IndexRange window;
    std::vector<std::size_t> root_causes;  ///< ascending
    std::vector<InjectedAnomaly> anomalies;
    bool operator==(const TruthWindow&) const = default;
};

struct GroundTruth {
    std::vector<Dependency> dependencies;
    std::vector<TruthWindow> windows;
    bool operator==(const GroundTruth&) const = default;
};

struct Scenario {
    TimeSeriesPanel panel;
    GroundTruth truth;
};

/// Dependencies of a scenario: the explicit list, or a seeded random DAG.
std::vector<Dependency> resolve_dependencies(const ScenarioSpec& spec);

/// Throws InvalidSpec (naming the cycle for cyclic dependencies).
void validate_spec(const ScenarioSpec& spec);

/// Clean panel; truth carries the dependency DAG and no windows.
Scenario generate_panel(const ScenarioSpec& spec);

/**
 * Adds the scenario's anomalies: spike = +spike_sigma * sigma on 1-3 samples,
 * level shift = +shift_sigma * sigma over the window, amplitude change =
 * mean + factor * (x - mean) over the window, with sigma and mean taken from the
 * clean channel. With propagate, descendants are re-derived through the
 * dependency DAG; truth lists only the injected channels.
 */
Scenario inject_anomalies(const TimeSeriesPanel& panel, const GroundTruth& truth, const ScenarioSpec& spec);

/// generate_panel followed by inject_anomalies.
Scenario generate_scenario(const ScenarioSpec& spec);

std::vector<std::string> channel_names(std::size_t channels);

void to_json(nlohmann::json& j, const ScenarioSpec& s);
/// Strict: unknown keys are rejected, missing keys keep their defaults.
void from_json(const nlohmann::json& j, ScenarioSpec& s);
void to_json(nlohmann::json& j, const GroundTruth& t);
void from_json(const nlohmann::json& j, GroundTruth& t);

}  // namespace netrca
