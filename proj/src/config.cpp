#include "netrca/config.hpp"

#include "netrca/error.hpp"

#include <fstream>

namespace netrca {

namespace {

// Every key of `user` must exist in `defaults`; objects are checked recursively.
void check_keys(const nlohmann::json& user, const nlohmann::json& defaults, const std::string& where) {
    if (!user.is_object()) throw Error(ErrorKind::InvalidConfig, where + ": expected a JSON object");
    for (const auto& [key, value] : user.items()) {
        if (!defaults.contains(key)) throw Error(ErrorKind::InvalidConfig, where + ": unknown key '" + key + "'");
        const auto& d = defaults.at(key);
        if (d.is_object() && !value.is_null()) check_keys(value, d, where + "." + key);
    }
}

}  // namespace

nlohmann::json model_json(const Model& model) {
    return {{"format_version", 1},
            {"kind", "model"},
            {"impute", to_string(model.impute)},
            {"smooth_window", model.smooth_window},
            {"stats", model.stats},
            {"graph", model.graph}};
}

Model parse_model(const nlohmann::json& j) {
    try {
        if (j.at("format_version") != 1 || j.at("kind") != "model") {
            throw Error(ErrorKind::MalformedInput, "not a version 1 model document");
        }
        Model m;
        m.impute = parse_impute_method(j.at("impute").get<std::string>());
        m.smooth_window = j.at("smooth_window").get<std::size_t>();
        m.stats = j.at("stats").get<ChannelStats>();
        m.graph = j.at("graph").get<InvariantGraph>();
        if (m.stats.mean.size() != m.graph.channels()) {
            throw Error(ErrorKind::MalformedInput, "model statistics and graph disagree on channel count");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedInput, std::string("model: ") + e.what());
    }
}

Prepared prepare_panel(const TimeSeriesPanel& panel, const Model& model) {
    const auto& names = model.graph.channel_names;
    Matrix values(static_cast<Eigen::Index>(panel.length()), static_cast<Eigen::Index>(names.size()));
    BoolMatrix mask(values.rows(), values.cols());
    for (std::size_t c = 0; c < names.size(); ++c) {
        const long idx = panel.find_channel(names[c]);
        if (idx < 0) throw Error(ErrorKind::ChannelMismatch, "panel is missing model channel '" + names[c] + "'");
        values.col(static_cast<Eigen::Index>(c)) = panel.values().col(idx);
        mask.col(static_cast<Eigen::Index>(c)) = panel.missing_mask().col(idx);
    }
    TimeSeriesPanel ordered(panel.timestamps(), names, std::move(values), std::move(mask));
    TimeSeriesPanel raw = impute_missing(ordered, model.impute);
    if (model.smooth_window > 1) raw = smooth(raw, model.smooth_window);
    TimeSeriesPanel standard = apply_stats(raw, model.stats);
    return Prepared{std::move(raw), std::move(standard)};
}

nlohmann::json config_json(const RunConfig& c) {
    return {{"format_version", RunConfig::kFormatVersion},
            {"paths",
             {{"input_panel", c.paths.input_panel},
              {"model", c.paths.model},
              {"event", c.paths.event},
              {"output_dir", c.paths.output_dir}}},
            {"impute", to_string(c.impute)},
            {"pipeline", c.pipeline},
            {"method", c.method},
            {"top_n", c.top_n},
            {"seed", c.seed},
            {"scenario", c.scenario},
            {"bench",
             {{"seeds", c.bench.seeds}, {"sweep", c.bench.sweep}, {"jobs", c.bench.jobs}, {"methods", c.bench.methods}}}};
}

RunConfig parse_config(const nlohmann::json& j) {
    const nlohmann::json defaults = config_json(RunConfig{});
    check_keys(j, defaults, "config");
    if (j.contains("format_version") && j.at("format_version") != RunConfig::kFormatVersion) {
        throw Error(ErrorKind::InvalidConfig, "unsupported config format_version " + j.at("format_version").dump());
    }
    nlohmann::json merged = defaults;
    merged.merge_patch(j);
    RunConfig c;
    try {
        const auto& p = merged.at("paths");
        c.paths.input_panel = p.at("input_panel").get<std::string>();
        c.paths.model = p.at("model").get<std::string>();
        c.paths.event = p.at("event").get<std::string>();
        c.paths.output_dir = p.at("output_dir").get<std::string>();
        c.impute = parse_impute_method(merged.at("impute").get<std::string>());
        c.pipeline = merged.at("pipeline").get<PipelineConfig>();
        c.method = merged.at("method").get<std::string>();
        parse_method(c.method);
        c.top_n = merged.at("top_n").get<std::size_t>();
        c.seed = merged.at("seed").get<std::uint64_t>();
        const auto& b = merged.at("bench");
        c.bench.seeds = b.at("seeds").get<std::size_t>();
        c.bench.sweep = b.at("sweep").get<std::vector<std::size_t>>();
        c.bench.jobs = b.at("jobs").get<std::size_t>();
        c.bench.methods = b.at("methods").get<std::vector<std::string>>();
        for (const auto& m : c.bench.methods) parse_method(m);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
    }
    // Scenario errors are spec errors, reported with their own kind.
    c.scenario = merged.at("scenario").get<ScenarioSpec>();
    if (c.top_n == 0) throw Error(ErrorKind::InvalidConfig, "top_n must be at least 1");
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingInput, "cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidConfig, "config " + path + ": " + e.what());
    }
    return parse_config(j);
}

}  // namespace netrca
