#pragma once

#include "netrca/eval.hpp"
#include "netrca/invariant.hpp"
#include "netrca/panel.hpp"
#include "netrca/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

struct RunPaths {
    std::string input_panel;
    std::string model = "model.json";
    std::string event;
    std::string output_dir = "out";
    bool operator==(const RunPaths&) const = default;
};

struct BenchSettings {
    std::size_t seeds = 20;
    std::vector<std::size_t> sweep{2, 5, 8, 11};
    std::size_t jobs = 1;
    std::vector<std::string> methods{"tcorca", "threshold", "ig", "lbp-ig"};
    bool operator==(const BenchSettings&) const = default;
};

struct RunConfig {
    static constexpr int kFormatVersion = 1;

    RunPaths paths;
    ImputeMethod impute = ImputeMethod::LinearInterpolate;
    PipelineConfig pipeline;
    std::string method = "tcorca";
    std::size_t top_n = 5;
    std::uint64_t seed = 0;
    ScenarioSpec scenario;
    BenchSettings bench;

    bool operator==(const RunConfig&) const = default;
};

/// Fitted artifact: preprocessing settings, training statistics and the invariant graph.
struct Model {
    ImputeMethod impute = ImputeMethod::LinearInterpolate;
    std::size_t smooth_window = 5;
    ChannelStats stats;
    InvariantGraph graph;
};

nlohmann::json model_json(const Model& model);
Model parse_model(const nlohmann::json& j);

/// Impute, smooth and standardize with the model's statistics; columns are
/// matched to the model by name (ChannelMismatch names a missing channel).
struct Prepared {
    TimeSeriesPanel raw;       ///< imputed and smoothed, model column order
    TimeSeriesPanel standard;  ///< raw standardized with the model statistics
};
Prepared prepare_panel(const TimeSeriesPanel& panel, const Model& model);

nlohmann::json config_json(const RunConfig& config);

/// Missing keys take defaults; unknown keys and a wrong format_version throw InvalidConfig.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

}  // namespace netrca
