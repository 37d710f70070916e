#include "netrca/invariant.hpp"

#include "netrca/error.hpp"
#include "netrca/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netrca {

namespace {

constexpr double kRankTolerance = 1e-9;

// Threshold floor for exact (noise-free) fits, in standardized units.
constexpr double kResidualFloor = 1e-8;

std::size_t design_width(std::size_t ar, std::size_t exo, FeatureMap map) {
    const std::size_t exo_terms = exo + 1;
    return ar + exo_terms * (map == FeatureMap::Quadratic ? 2 : 1) + 1;
}

// Fills one regressor row for time t.
template <typename Row>
void fill_row(Row&& row, const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::size_t t,
              std::size_t ar, std::size_t exo, std::size_t delay, FeatureMap map) {
    Eigen::Index col = 0;
    for (std::size_t i = 1; i <= ar; ++i) row(col++) = y(static_cast<Eigen::Index>(t - i));
    for (std::size_t j = 0; j <= exo; ++j) row(col++) = x(static_cast<Eigen::Index>(t - delay - j));
    if (map == FeatureMap::Quadratic) {
        for (std::size_t j = 0; j <= exo; ++j) {
            const double v = x(static_cast<Eigen::Index>(t - delay - j));
            row(col++) = v * v;
        }
    }
    row(col) = 1.0;
}

struct Candidate {
    std::vector<double> coeffs;
    std::vector<double> residuals;
    double fitness = -std::numeric_limits<double>::infinity();
    bool rank_deficient = false;
};

Candidate solve_for_delay(const Eigen::VectorXd& x, const Eigen::VectorXd& y, IndexRange rows, std::size_t ar,
                          std::size_t exo, std::size_t delay, FeatureMap map, double sst) {
    const std::size_t p = design_width(ar, exo, map);
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p));
    Eigen::VectorXd target(n);
    for (std::size_t t = rows.begin; t < rows.end; ++t) {
        const auto r = static_cast<Eigen::Index>(t - rows.begin);
        fill_row(X.row(r), x, y, t, ar, exo, delay, map);
        target(r) = y(static_cast<Eigen::Index>(t));
    }
    // Lags of a noise-free sinusoid are collinear up to rounding; treat such
    // directions as null so the minimum-norm solution stays bounded.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X.rows(), X.cols());
    cod.setThreshold(kRankTolerance);
    cod.compute(X);
    Eigen::VectorXd beta = cod.solve(target);
    Eigen::VectorXd resid = target - X * beta;

    Candidate c;
    c.coeffs.assign(beta.data(), beta.data() + beta.size());
    c.residuals.assign(resid.data(), resid.data() + resid.size());
    c.fitness = 1.0 - std::sqrt(resid.squaredNorm() / sst);
    c.rank_deficient = cod.rank() < static_cast<Eigen::Index>(p);
    return c;
}

}  // namespace

FeatureMap parse_feature_map(const std::string& name) {
    if (name == "linear") return FeatureMap::Linear;
    if (name == "quadratic") return FeatureMap::Quadratic;
    throw Error(ErrorKind::InvalidConfig, "unknown feature map '" + name + "'");
}

std::string to_string(FeatureMap map) {
    return map == FeatureMap::Quadratic ? "quadratic" : "linear";
}

ArxInvariant fit_arx(const TimeSeriesPanel& panel, std::size_t source, std::size_t target, IndexRange train_range,
                     const ArxFitOptions& options) {
    if (source >= panel.channels() || target >= panel.channels()) {
        throw Error(ErrorKind::MalformedInput, "ARX channel index out of range");
    }
    if (source == target) {
        throw Error(ErrorKind::MalformedInput, "ARX source and target must differ");
    }
    if (train_range.end > panel.length() || train_range.empty()) {
        throw Error(ErrorKind::InvalidWindow, "ARX training range outside panel");
    }
    const auto& o = options.orders;
    const std::size_t warmup = std::max(o.ar, o.max_delay + o.exo);
    const IndexRange rows{std::max(train_range.begin, warmup), train_range.end};
    const std::size_t min_rows = 10 * (o.ar + o.exo + 2);
    if (rows.size() <= min_rows) {
        throw Error(ErrorKind::InsufficientData, "ARX fit needs more than " + std::to_string(min_rows) +
                                                     " usable training rows, got " + std::to_string(rows.size()));
    }

    const Eigen::VectorXd x = panel.column(source);
    const Eigen::VectorXd y = panel.column(target);
    const auto seg = y.segment(static_cast<Eigen::Index>(rows.begin), static_cast<Eigen::Index>(rows.size()));
    const double sst = (seg.array() - seg.mean()).square().sum();
    if (!(sst > 1e-24 * static_cast<double>(rows.size()))) {
        throw Error(ErrorKind::DegenerateChannel,
                    "target channel '" + panel.channel_names()[target] + "' has zero variance on the training range");
    }

    Candidate best;
    std::size_t best_delay = 0;
    for (std::size_t k = 0; k <= o.max_delay; ++k) {
        Candidate c = solve_for_delay(x, y, rows, o.ar, o.exo, k, options.feature_map, sst);
        if (c.fitness > best.fitness) {
            best = std::move(c);
            best_delay = k;
        }
    }

    double max_abs = 0.0;
    for (double r : best.residuals) max_abs = std::max(max_abs, std::fabs(r));

    ArxInvariant inv;
    inv.source = source;
    inv.target = target;
    inv.ar_order = o.ar;
    inv.exo_order = o.exo;
    inv.delay = best_delay;
    inv.feature_map = options.feature_map;
    inv.coeffs = std::move(best.coeffs);
    inv.fitness = best.fitness;
    inv.residual_threshold = std::max(options.tol_factor * max_abs, kResidualFloor);
    inv.fit_range = rows;
    inv.rank_deficient = best.rank_deficient;
    return inv;
}

std::vector<double> predict_residuals(const ArxInvariant& inv, const TimeSeriesPanel& panel, IndexRange range) {
    if (range.begin < inv.warmup()) {
        throw Error(ErrorKind::InvalidWindow, "residual range starts at " + std::to_string(range.begin) +
                                                  " before warm-up " + std::to_string(inv.warmup()));
    }
    if (range.end > panel.length()) {
        throw Error(ErrorKind::InvalidWindow, "residual range exceeds panel length");
    }
    const Eigen::VectorXd x = panel.column(inv.source);
    const Eigen::VectorXd y = panel.column(inv.target);
    const std::size_t p = inv.coeffs.size();
    Eigen::Map<const Eigen::VectorXd> beta(inv.coeffs.data(), static_cast<Eigen::Index>(p));
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(p));
    std::vector<double> out;
    out.reserve(range.size());
    for (std::size_t t = range.begin; t < range.end; ++t) {
        fill_row(row, x, y, t, inv.ar_order, inv.exo_order, inv.delay, inv.feature_map);
        out.push_back(y(static_cast<Eigen::Index>(t)) - row.dot(beta));
    }
    return out;
}

double recompute_fitness(const ArxInvariant& inv, const TimeSeriesPanel& panel) {
    const auto r = predict_residuals(inv, panel, inv.fit_range);
    const Eigen::VectorXd y = panel.column(inv.target);
    const auto seg = y.segment(static_cast<Eigen::Index>(inv.fit_range.begin),
                               static_cast<Eigen::Index>(inv.fit_range.size()));
    const double sst = (seg.array() - seg.mean()).square().sum();
    double sse = 0.0;
    for (double v : r) sse += v * v;
    return 1.0 - std::sqrt(sse / sst);
}

std::vector<std::size_t> InvariantGraph::incident_edges(std::size_t c) const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].source == c || edges[e].target == c) out.push_back(e);
    }
    return out;
}

std::size_t InvariantGraph::max_warmup() const {
    std::size_t w = 0;
    for (const auto& e : edges) w = std::max(w, e.warmup());
    return w;
}

std::vector<std::size_t> InvariantGraph::pivots() const {
    std::vector<std::size_t> out;
    for (const auto& c : clusters) out.push_back(c.pivot);
    return out;
}

std::size_t effective_cluster_cap(const FccgConfig& config, std::size_t channels) {
    if (config.max_cluster_size > 0) return config.max_cluster_size;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(channels))));
}

namespace {

template <typename ChoosePivot>
InvariantGraph build_graph(const TimeSeriesPanel& panel, IndexRange train_range, const FccgConfig& config,
                           std::uint64_t seed, ChoosePivot&& choose_pivot) {
    const ChannelStats stats = compute_stats(panel, train_range);
    InvariantGraph graph;
    graph.channel_names = panel.channel_names();
    graph.fitted_on = train_range;
    graph.config = config;
    graph.seed = seed;

    std::vector<std::size_t> unassigned;
    for (std::size_t c = 0; c < panel.channels(); ++c) {
        if (stats.constant[c]) {
            graph.constant_channels.push_back(c);
        } else {
            unassigned.push_back(c);
        }
    }
    if (unassigned.empty()) {
        throw Error(ErrorKind::NoInvariantsFound, "every channel is constant on the training range");
    }

    const ArxFitOptions fit_options{config.orders, config.feature_map, config.tol_factor};
    const std::size_t cap = std::max<std::size_t>(1, effective_cluster_cap(config, panel.channels()));

    // Better of the two directions; ties go to `preferred_source` as the source.
    auto fit_pair = [&](std::size_t preferred_source, std::size_t other) {
        ArxInvariant forward = fit_arx(panel, preferred_source, other, train_range, fit_options);
        ArxInvariant backward = fit_arx(panel, other, preferred_source, train_range, fit_options);
        graph.pair_fit_count += 2;
        return backward.fitness > forward.fitness ? backward : forward;
    };

    std::vector<ArxInvariant> member_edges;
    while (!unassigned.empty()) {
        const std::size_t pick = choose_pivot(unassigned);
        const std::size_t pivot = unassigned[pick];
        unassigned.erase(unassigned.begin() + static_cast<long>(pick));

        std::vector<ArxInvariant> strong;
        for (std::size_t c : unassigned) {
            ArxInvariant e = fit_pair(pivot, c);
            if (e.fitness >= config.fitness_min) strong.push_back(std::move(e));
        }
        auto other_end = [pivot](const ArxInvariant& e) { return e.source == pivot ? e.target : e.source; };
        std::stable_sort(strong.begin(), strong.end(), [&](const ArxInvariant& a, const ArxInvariant& b) {
            if (a.fitness != b.fitness) return a.fitness > b.fitness;
            return other_end(a) < other_end(b);
        });
        if (strong.size() > cap - 1) strong.resize(cap - 1);

        Cluster cluster{pivot, {}};
        for (const auto& e : strong) cluster.members.push_back(other_end(e));
        std::sort(cluster.members.begin(), cluster.members.end());
        std::sort(strong.begin(), strong.end(),
                  [&](const ArxInvariant& a, const ArxInvariant& b) { return other_end(a) < other_end(b); });
        for (auto& e : strong) member_edges.push_back(std::move(e));
        std::erase_if(unassigned, [&](std::size_t c) {
            return std::binary_search(cluster.members.begin(), cluster.members.end(), c);
        });
        graph.clusters.push_back(std::move(cluster));
    }

    graph.edges = std::move(member_edges);
    std::vector<std::size_t> pivots = graph.pivots();
    std::sort(pivots.begin(), pivots.end());
    for (std::size_t i = 0; i < pivots.size(); ++i) {
        for (std::size_t j = i + 1; j < pivots.size(); ++j) {
            ArxInvariant e = fit_pair(pivots[i], pivots[j]);
            if (e.fitness >= config.fitness_min) graph.edges.push_back(std::move(e));
        }
    }
    return graph;
}

}  // namespace

InvariantGraph fccg_cluster(const TimeSeriesPanel& panel, IndexRange train_range, const FccgConfig& config,
                            std::uint64_t seed) {
    Rng rng(seed);
    return build_graph(panel, train_range, config, seed,
                       [&rng](const std::vector<std::size_t>& unassigned) { return rng.index(unassigned.size()); });
}

InvariantGraph fccg_cluster_with_pivots(const TimeSeriesPanel& panel, IndexRange train_range,
                                        const FccgConfig& config, const std::vector<std::size_t>& pivot_order) {
    std::size_t next = 0;
    return build_graph(panel, train_range, config, 0, [&](const std::vector<std::size_t>& unassigned) {
        while (next < pivot_order.size()) {
            auto it = std::find(unassigned.begin(), unassigned.end(), pivot_order[next++]);
            if (it != unassigned.end()) return static_cast<std::size_t>(it - unassigned.begin());
        }
        return std::size_t{0};
    });
}

void to_json(nlohmann::json& j, const ArxOrders& o) {
    j = nlohmann::json{{"ar_order", o.ar}, {"exo_order", o.exo}, {"max_delay", o.max_delay}};
}

void from_json(const nlohmann::json& j, ArxOrders& o) {
    o.ar = j.at("ar_order").get<std::size_t>();
    o.exo = j.at("exo_order").get<std::size_t>();
    o.max_delay = j.at("max_delay").get<std::size_t>();
}

void to_json(nlohmann::json& j, const FccgConfig& c) {
    j = nlohmann::json{{"fitness_min", c.fitness_min},
                       {"orders", c.orders},
                       {"feature_map", to_string(c.feature_map)},
                       {"max_cluster_size", c.max_cluster_size},
                       {"tol_factor", c.tol_factor}};
}

void from_json(const nlohmann::json& j, FccgConfig& c) {
    c.fitness_min = j.at("fitness_min").get<double>();
    c.orders = j.at("orders").get<ArxOrders>();
    c.feature_map = parse_feature_map(j.at("feature_map").get<std::string>());
    c.max_cluster_size = j.at("max_cluster_size").get<std::size_t>();
    c.tol_factor = j.at("tol_factor").get<double>();
}

void to_json(nlohmann::json& j, const ArxInvariant& e) {
    j = nlohmann::json{{"source", e.source},
                       {"target", e.target},
                       {"ar_order", e.ar_order},
                       {"exo_order", e.exo_order},
                       {"delay", e.delay},
                       {"feature_map", to_string(e.feature_map)},
                       {"coeffs", e.coeffs},
                       {"fitness", e.fitness},
                       {"residual_threshold", e.residual_threshold},
                       {"fit_range", e.fit_range},
                       {"rank_deficient", e.rank_deficient}};
}

void from_json(const nlohmann::json& j, ArxInvariant& e) {
    e.source = j.at("source").get<std::size_t>();
    e.target = j.at("target").get<std::size_t>();
    e.ar_order = j.at("ar_order").get<std::size_t>();
    e.exo_order = j.at("exo_order").get<std::size_t>();
    e.delay = j.at("delay").get<std::size_t>();
    e.feature_map = parse_feature_map(j.at("feature_map").get<std::string>());
    e.coeffs = j.at("coeffs").get<std::vector<double>>();
    e.fitness = j.at("fitness").get<double>();
    e.residual_threshold = j.at("residual_threshold").get<double>();
    e.fit_range = j.at("fit_range").get<IndexRange>();
    e.rank_deficient = j.at("rank_deficient").get<bool>();
    if (e.coeffs.size() != design_width(e.ar_order, e.exo_order, e.feature_map)) {
        throw Error(ErrorKind::MalformedInput, "edge coefficient count does not match its orders");
    }
}

void to_json(nlohmann::json& j, const InvariantGraph& g) {
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : g.clusters) clusters.push_back({{"pivot", c.pivot}, {"members", c.members}});
    j = nlohmann::json{{"format_version", 1},
                       {"kind", "invariant_graph"},
                       {"channel_names", g.channel_names},
                       {"config", g.config},
                       {"seed", g.seed},
                       {"fitted_on", g.fitted_on},
                       {"constant_channels", g.constant_channels},
                       {"clusters", clusters},
                       {"edges", g.edges},
                       {"pair_fit_count", g.pair_fit_count}};
}

void from_json(const nlohmann::json& j, InvariantGraph& g) {
    if (j.at("format_version").get<int>() != 1) {
        throw Error(ErrorKind::MalformedInput, "unsupported invariant graph format_version");
    }
    g.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    g.config = j.at("config").get<FccgConfig>();
    g.seed = j.at("seed").get<std::uint64_t>();
    g.fitted_on = j.at("fitted_on").get<IndexRange>();
    g.constant_channels = j.at("constant_channels").get<std::vector<std::size_t>>();
    g.clusters.clear();
    for (const auto& c : j.at("clusters")) {
        g.clusters.push_back({c.at("pivot").get<std::size_t>(), c.at("members").get<std::vector<std::size_t>>()});
    }
    g.edges = j.at("edges").get<std::vector<ArxInvariant>>();
    g.pair_fit_count = j.at("pair_fit_count").get<std::size_t>();
}

}  // namespace netrca
