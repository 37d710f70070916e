#pragma once

#include "netrca/causal.hpp"
#include "netrca/detect.hpp"
#include "netrca/invariant.hpp"
#include "netrca/rca.hpp"
#include "netrca/synth.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    bool operator==(const Prf&) const = default;
};

/// F1 from precision and recall; 0 when both are 0.
double f1_score(double precision, double recall);

/// Scores the top-min(n, |entries|) channels of a ranking. Throws UndefinedMetric on empty truth.
Prf precision_recall_f1(const RootCauseRanking& ranking, const std::vector<std::size_t>& truth, std::size_t n);

/// Micro-averaged metrics from pooled counts.
Prf pooled(std::size_t tp, std::size_t fp, std::size_t fn);

/// Preprocessing and model parameters shared by the benchmark and the CLI.
struct PipelineConfig {
    std::size_t smooth_window = 5;
    double train_fraction = 0.5;
    FccgConfig fccg;
    DetectConfig detect;
    CausalConfig causal;
    LbpParams lbp;
    double threshold_k_sigma = 3.0;
    std::size_t window_lead = 50;  ///< analysis window starts this many samples before onset
    bool operator==(const PipelineConfig&) const = default;
};

struct BenchmarkOptions {
    std::vector<RcaMethod> methods = all_methods();
    std::size_t top_n = 5;
    std::size_t jobs = 1;
    PipelineConfig pipeline;
};

struct StageTimes {
    double generate = 0.0;
    double preprocess = 0.0;
    double fit = 0.0;
    double detect = 0.0;
    std::map<RcaMethod, double> rank;
};

struct ScenarioResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::size_t n_anomalies = 0;
    bool ok = false;
    std::string error;
    std::size_t windows = 0;
    std::size_t events = 0;  ///< analysis windows that produced an event
    std::map<RcaMethod, Prf> metrics;
    StageTimes times;
};

struct MethodSummary {
    RcaMethod method = RcaMethod::Tcorca;
    std::size_t scenarios = 0;
    Prf mean;  ///< counts are totals over scenarios
    double precision_std = 0.0;
    double recall_std = 0.0;
    double f1_std = 0.0;
};

struct MetricReport {
    std::size_t top_n = 0;
    std::vector<RcaMethod> methods;
    std::vector<ScenarioResult> rows;  ///< ordered by scenario index
    std::vector<MethodSummary> summary;
    std::size_t failures = 0;
    bool partial = false;
    std::string fingerprint;
    double wall_seconds = 0.0;

    const MethodSummary& of(RcaMethod method) const;
};

/// One scenario through generate, preprocess, fit, detect, rank and score.
ScenarioResult run_scenario(const ScenarioSpec& spec, const BenchmarkOptions& options, std::size_t index = 0);

/// Scenarios run on options.jobs worker threads; the report does not depend on jobs.
MetricReport run_benchmark(const std::vector<ScenarioSpec>& suite, const BenchmarkOptions& options);

/// `seeds` copies of base with seeds base.seed, base.seed + 1, ...
std::vector<ScenarioSpec> seed_suite(const ScenarioSpec& base, std::size_t seeds);

/// FNV-1a over the canonical JSON of suite and options (jobs excluded).
std::string config_fingerprint(const std::vector<ScenarioSpec>& suite, const BenchmarkOptions& options);

/// Deterministic content only; runtimes go to timing_json.
nlohmann::json report_json(const MetricReport& report);
nlohmann::json timing_json(const MetricReport& report);
/// One row per method x scenario.
std::string report_csv(const MetricReport& report);

struct SweepPoint {
    std::size_t n_anomalies = 0;
    MetricReport report;
};

std::vector<SweepPoint> run_sweep(const ScenarioSpec& base, std::size_t seeds, const std::vector<std::size_t>& counts,
                                  const BenchmarkOptions& options);

/// x = anomaly count, one precision/recall/F1 series per method.
nlohmann::json plot_data(const std::vector<SweepPoint>& sweep);

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

}  // namespace netrca
