#include "netrca/causal.hpp"

#include "netrca/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

namespace netrca {

namespace {

constexpr double kRidge = 1e-8;

std::vector<std::size_t> canonical_index(std::size_t i, std::size_t j, std::span<const std::size_t> cond) {
    std::vector<std::size_t> idx{std::min(i, j), std::max(i, j)};
    std::vector<std::size_t> c(cond.begin(), cond.end());
    std::sort(c.begin(), c.end());
    idx.insert(idx.end(), c.begin(), c.end());
    return idx;
}

Matrix sample_covariance(const Matrix& data) {
    const Matrix centered = data.rowwise() - data.colwise().mean();
    return (centered.adjoint() * centered) / static_cast<double>(std::max<Eigen::Index>(1, data.rows() - 1));
}

// Calls f(subset) for every size-k subset of pool in lexicographic order; stops when f returns true.
template <typename F>
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, F&& f) {
    if (k > pool.size()) return false;
    std::vector<std::size_t> pick(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    std::vector<std::size_t> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = pool[pick[i]];
        if (f(subset)) return true;
        if (k == 0) return false;
        std::size_t i = k;
        while (i > 0 && pick[i - 1] == pool.size() - k + (i - 1)) --i;
        if (i == 0) return false;
        ++pick[i - 1];
        for (std::size_t m = i; m < k; ++m) pick[m] = pick[m - 1] + 1;
    }
}

}  // namespace

double partial_correlation_cov(const Matrix& cov, std::size_t i, std::size_t j, std::span<const std::size_t> cond,
                               bool* regularized) {
    const auto idx = canonical_index(i, j, cond);
    const auto a = static_cast<Eigen::Index>(idx[0]);
    const auto b = static_cast<Eigen::Index>(idx[1]);
    if (!(cov(a, a) > 0.0) || !(cov(b, b) > 0.0)) {
        throw Error(ErrorKind::DegenerateChannel, "partial correlation of a constant variable");
    }
    double saa = cov(a, a);
    double sbb = cov(b, b);
    double sab = cov(a, b);
    const std::size_t k = idx.size() - 2;
    if (k > 0) {
        const auto kk = static_cast<Eigen::Index>(k);
        Matrix scc(kk, kk);
        Eigen::MatrixXd sxc(2, kk);
        for (Eigen::Index r = 0; r < kk; ++r) {
            const auto cr = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r) + 2]);
            sxc(0, r) = cov(a, cr);
            sxc(1, r) = cov(b, cr);
            for (Eigen::Index c = 0; c < kk; ++c) {
                scc(r, c) = cov(cr, static_cast<Eigen::Index>(idx[static_cast<std::size_t>(c) + 2]));
            }
        }
        Eigen::LDLT<Matrix> ldlt(scc);
        const double scale = std::max(1.0, scc.diagonal().cwiseAbs().maxCoeff());
        const double min_pivot = ldlt.vectorD().minCoeff();
        if (ldlt.info() != Eigen::Success || !(min_pivot > 1e-12 * scale)) {
            ldlt.compute(scc + Matrix::Identity(kk, kk) * kRidge * scale);
            if (regularized) *regularized = true;
        }
        const Eigen::MatrixXd proj = sxc * ldlt.solve(sxc.transpose());
        saa -= proj(0, 0);
        sbb -= proj(1, 1);
        sab -= proj(0, 1);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        // One side is fully explained by the conditioning set.
        if (regularized) *regularized = true;
        return 0.0;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double partial_correlation(const Matrix& data, std::size_t i, std::size_t j, std::span<const std::size_t> cond) {
    const auto cols = static_cast<std::size_t>(data.cols());
    if (i >= cols || j >= cols || std::any_of(cond.begin(), cond.end(), [&](std::size_t c) { return c >= cols; })) {
        throw Error(ErrorKind::MalformedInput, "partial correlation variable out of range");
    }
    if (static_cast<std::size_t>(data.rows()) <= cond.size() + 3) {
        throw Error(ErrorKind::InsufficientData, "partial correlation needs more than |cond| + 3 samples");
    }
    const auto idx = canonical_index(i, j, cond);
    std::vector<std::size_t> unique_idx = idx;
    std::sort(unique_idx.begin(), unique_idx.end());
    unique_idx.erase(std::unique(unique_idx.begin(), unique_idx.end()), unique_idx.end());
    Matrix sub(data.rows(), static_cast<Eigen::Index>(unique_idx.size()));
    for (std::size_t c = 0; c < unique_idx.size(); ++c) {
        sub.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(unique_idx[c]));
    }
    const Matrix cov = sample_covariance(sub);
    auto local = [&](std::size_t v) {
        return static_cast<std::size_t>(std::lower_bound(unique_idx.begin(), unique_idx.end(), v) - unique_idx.begin());
    };
    for (std::size_t v : {i, j}) {
        const auto l = static_cast<Eigen::Index>(local(v));
        if (!(cov(l, l) > 1e-24)) {
            throw Error(ErrorKind::DegenerateChannel, "variable " + std::to_string(v) + " is constant");
        }
    }
    std::vector<std::size_t> local_cond;
    for (std::size_t c : cond) local_cond.push_back(local(c));
    return partial_correlation_cov(cov, local(i), local(j), local_cond);
}

double fisher_z(double rho, std::size_t n, std::size_t cond_size) {
    if (n <= cond_size + 3) {
        throw Error(ErrorKind::InsufficientData, "Fisher z needs n - |S| - 3 > 0");
    }
    if (std::fabs(rho) >= 1.0) {
        return std::copysign(std::numeric_limits<double>::infinity(), rho);
    }
    return std::sqrt(static_cast<double>(n - cond_size - 3)) * std::atanh(rho);
}

Independence ci_test(double rho, std::size_t n, std::size_t cond_size, double alpha) {
    const double z = fisher_z(rho, n, cond_size);
    if (std::isinf(z)) return Independence::Dependent;
    static const boost::math::normal_distribution<double> standard;
    const double critical = boost::math::quantile(standard, 1.0 - alpha / 2.0);
    return std::fabs(z) <= critical ? Independence::Independent : Independence::Dependent;
}

FisherZTest::FisherZTest(const Matrix& data, double alpha)
    : cov_(sample_covariance(data)), samples_(static_cast<std::size_t>(data.rows())), alpha_(alpha) {
    for (Eigen::Index c = 0; c < cov_.cols(); ++c) {
        if (!(cov_(c, c) > 1e-24)) {
            throw Error(ErrorKind::DegenerateChannel, "variable " + std::to_string(c) + " is constant");
        }
    }
}

CiTest::Result FisherZTest::test(std::size_t u, std::size_t v, std::span<const std::size_t> cond) const {
    bool reg = false;
    const double rho = partial_correlation_cov(cov_, u, v, cond, &reg);
    if (reg) regularized_ = true;
    const double z = fisher_z(rho, samples_, cond.size());
    return {ci_test(rho, samples_, cond.size(), alpha_) == Independence::Independent, z};
}

CiTest::Result PopulationCiOracle::test(std::size_t u, std::size_t v, std::span<const std::size_t> cond) const {
    const double rho = partial_correlation_cov(cov_, u, v, cond);
    return {std::fabs(rho) < tol_, rho};
}

LaggedDataset build_lagged(const std::vector<std::vector<double>>& series, std::size_t tau_max) {
    LaggedDataset out;
    out.channels = series.size();
    out.tau_max = tau_max;
    if (series.empty()) return out;
    const std::size_t length = series.front().size();
    for (const auto& s : series) {
        if (s.size() != length) throw Error(ErrorKind::MalformedInput, "residual series differ in length");
    }
    if (length <= tau_max) {
        throw Error(ErrorKind::InsufficientData, "series shorter than the lag bound");
    }
    const std::size_t rows = length - tau_max;
    out.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(out.channels * (tau_max + 1)));
    for (std::size_t lag = 0; lag <= tau_max; ++lag) {
        for (std::size_t c = 0; c < out.channels; ++c) {
            out.variables.push_back({c, lag});
            const auto col = static_cast<Eigen::Index>(lag * out.channels + c);
            for (std::size_t r = 0; r < rows; ++r) {
                out.data(static_cast<Eigen::Index>(r), col) = series[c][r + tau_max - lag];
            }
        }
    }
    return out;
}

bool Skeleton::adjacent(std::size_t u, std::size_t v) const {
    return edges.count({std::min(u, v), std::max(u, v)}) > 0;
}

std::vector<std::size_t> Skeleton::neighbors(std::size_t u) const {
    std::vector<std::size_t> out;
    for (const auto& [pair, stat] : edges) {
        if (pair.first == u) out.push_back(pair.second);
        if (pair.second == u) out.push_back(pair.first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

Skeleton pc_skeleton(std::size_t channels, std::size_t tau_max, const CiTest& test, std::size_t max_cond) {
    Skeleton sk;
    sk.channels = channels;
    sk.tau_max = tau_max;
    for (std::size_t lag = 0; lag <= tau_max; ++lag) {
        for (std::size_t c = 0; c < channels; ++c) sk.variables.push_back({c, lag});
    }
    if (channels < 2) return sk;

    constexpr double kUntested = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t d = c + 1; d < channels; ++d) sk.edges[{c, d}] = kUntested;
        for (std::size_t lag = 1; lag <= tau_max; ++lag) {
            for (std::size_t d = 0; d < channels; ++d) sk.edges[{c, lag * channels + d}] = kUntested;
        }
    }

    const std::size_t nvars = sk.variables.size();
    for (std::size_t level = 0; level <= max_cond; ++level) {
        std::vector<std::vector<std::size_t>> adj(nvars);
        for (const auto& [pair, stat] : sk.edges) {
            adj[pair.first].push_back(pair.second);
            adj[pair.second].push_back(pair.first);
        }
        for (auto& a : adj) std::sort(a.begin(), a.end());

        bool testable = false;
        std::vector<std::pair<VarPair, std::vector<std::size_t>>> removals;
        for (auto& [pair, stat] : sk.edges) {
            const auto [u, v] = pair;
            auto pool_of = [&](std::size_t side) {
                std::vector<std::size_t> pool;
                for (std::size_t w : adj[side]) {
                    if (w != u && w != v) pool.push_back(w);
                }
                return pool;
            };
            const auto pool_u = pool_of(u);
            const auto pool_v = pool_of(v);
            std::vector<std::size_t> separating;
            auto try_subset = [&](const std::vector<std::size_t>& s) {
                const auto r = test.test(u, v, s);
                ++sk.tests;
                stat = std::min(stat, std::fabs(r.statistic));
                if (r.independent) {
                    separating = s;
                    return true;
                }
                return false;
            };
            bool removed = false;
            if (pool_u.size() >= level) {
                testable = true;
                removed = for_each_subset(pool_u, level, try_subset);
            }
            if (!removed && pool_v.size() >= level && (level > 0 || pool_u.size() < level)) {
                testable = true;
                removed = for_each_subset(pool_v, level, [&](const std::vector<std::size_t>& s) {
                    const bool seen = std::all_of(s.begin(), s.end(), [&](std::size_t w) {
                        return std::binary_search(pool_u.begin(), pool_u.end(), w);
                    });
                    return seen ? false : try_subset(s);
                });
            }
            if (removed) removals.push_back({pair, separating});
        }
        for (auto& [pair, set] : removals) {
            sk.edges.erase(pair);
            sk.sepsets[pair] = std::move(set);
        }
        if (!testable) break;
    }
    return sk;
}

Skeleton pc_skeleton(const std::vector<std::vector<double>>& residuals, std::size_t tau_max, double alpha,
                     std::size_t max_cond) {
    if (residuals.size() < 2) {
        return pc_skeleton(residuals.size(), tau_max, PopulationCiOracle(Matrix::Identity(1, 1)), max_cond);
    }
    const std::size_t length = residuals.front().size();
    const std::size_t needed = 10 * (max_cond + 3);
    if (length <= tau_max || length - tau_max <= needed) {
        throw Error(ErrorKind::InsufficientData, "causal discovery needs more than " + std::to_string(needed) +
                                                     " samples after lagging, got " +
                                                     std::to_string(length > tau_max ? length - tau_max : 0));
    }
    const LaggedDataset ds = build_lagged(residuals, tau_max);
    const FisherZTest test(ds.data, alpha);
    return pc_skeleton(residuals.size(), tau_max, test, max_cond);
}

std::vector<VarPair> CausalGraph::channel_arcs() const {
    std::set<VarPair> arcs;
    for (const auto& e : edges) {
        if (e.kind == EdgeKind::Directed && e.cause.channel != e.effect) arcs.insert({e.cause.channel, e.effect});
    }
    return {arcs.begin(), arcs.end()};
}

const Sepset* CausalGraph::find_sepset(LaggedVariable a, LaggedVariable b) const {
    for (const auto& s : sepsets) {
        if ((s.a == a && s.b == b) || (s.a == b && s.b == a)) return &s;
    }
    return nullptr;
}

CausalGraph orient(const Skeleton& sk) {
    CausalGraph g;
    g.channels = sk.channels;
    g.tau_max = sk.tau_max;
    const std::size_t C = sk.channels;
    auto is_present = [C](std::size_t v) { return v < C; };

    // head[{a, b}] means an arrowhead at b on the contemporaneous edge a - b.
    std::set<VarPair> head;
    for (std::size_t w = 0; w < C; ++w) {
        const auto nbrs = sk.neighbors(w);
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            for (std::size_t k = i + 1; k < nbrs.size(); ++k) {
                const std::size_t a = nbrs[i];
                const std::size_t b = nbrs[k];
                if (!is_present(a) && !is_present(b)) continue;  // lagged-lagged pairs are never tested
                if (sk.adjacent(a, b)) continue;
                auto it = sk.sepsets.find({std::min(a, b), std::max(a, b)});
                if (it == sk.sepsets.end()) continue;
                if (std::find(it->second.begin(), it->second.end(), w) != it->second.end()) continue;
                if (is_present(a)) head.insert({a, w});
                if (is_present(b)) head.insert({b, w});
            }
        }
    }

    for (const auto& [pair, stat] : sk.edges) {
        const auto [u, v] = pair;
        CausalEdge e;
        e.statistic = stat;
        if (!is_present(v)) {
            e.cause = sk.variables[v];
            e.effect = sk.variables[u].channel;
            e.kind = EdgeKind::Directed;
        } else {
            const bool at_v = head.count({u, v}) > 0;
            const bool at_u = head.count({v, u}) > 0;
            if (at_v && !at_u) {
                e.cause = {u, 0};
                e.effect = v;
                e.kind = EdgeKind::Directed;
            } else if (at_u && !at_v) {
                e.cause = {v, 0};
                e.effect = u;
                e.kind = EdgeKind::Directed;
            } else {
                e.cause = {u, 0};
                e.effect = v;
                e.kind = EdgeKind::Bidirected;
            }
        }
        g.edges.push_back(e);
    }
    for (const auto& [pair, set] : sk.sepsets) {
        Sepset s{sk.variables[pair.first], sk.variables[pair.second], {}};
        for (std::size_t w : set) s.set.push_back(sk.variables[w]);
        g.sepsets.push_back(std::move(s));
    }
    return g;
}

std::string to_dot(const CausalGraph& graph, const std::vector<std::string>& names) {
    auto name = [&](std::size_t c) { return c < names.size() ? names[c] : "c" + std::to_string(c); };
    std::ostringstream out;
    out << "digraph causal {\n";
    for (std::size_t c = 0; c < graph.channels; ++c) out << "  \"" << name(c) << "\";\n";
    for (const auto& e : graph.edges) {
        if (e.cause.channel == e.effect && e.cause.lag > 0) continue;
        out << "  \"" << name(e.cause.channel) << "\" -> \"" << name(e.effect) << "\" [label=\"lag " << e.cause.lag
            << "\"";
        if (e.kind == EdgeKind::Bidirected) out << ", dir=both";
        out << "];\n";
    }
    out << "}\n";
    return out.str();
}

void to_json(nlohmann::json& j, const CausalConfig& c) {
    j = nlohmann::json{{"tau_max", c.tau_max}, {"alpha", c.alpha}, {"max_cond", c.max_cond}};
}

void from_json(const nlohmann::json& j, CausalConfig& c) {
    c.tau_max = j.at("tau_max").get<std::size_t>();
    c.alpha = j.at("alpha").get<double>();
    c.max_cond = j.at("max_cond").get<std::size_t>();
}

nlohmann::json causal_graph_json(const CausalGraph& graph, const std::vector<std::string>& names) {
    auto name = [&](std::size_t c) { return c < names.size() ? names[c] : "c" + std::to_string(c); };
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        edges.push_back({{"cause", name(e.cause.channel)},
                         {"lag", e.cause.lag},
                         {"effect", name(e.effect)},
                         {"kind", e.kind == EdgeKind::Directed ? "directed" : "bidirected"},
                         {"statistic", std::isinf(e.statistic) ? nlohmann::json(nullptr) : nlohmann::json(e.statistic)}});
    }
    nlohmann::json sepsets = nlohmann::json::array();
    for (const auto& s : graph.sepsets) {
        nlohmann::json set = nlohmann::json::array();
        for (const auto& v : s.set) set.push_back({{"channel", name(v.channel)}, {"lag", v.lag}});
        sepsets.push_back({{"a", {{"channel", name(s.a.channel)}, {"lag", s.a.lag}}},
                           {"b", {{"channel", name(s.b.channel)}, {"lag", s.b.lag}}},
                           {"set", set}});
    }
    nlohmann::json nodes = nlohmann::json::array();
    for (std::size_t c = 0; c < graph.channels; ++c) nodes.push_back(name(c));
    return {{"format_version", 1},
            {"kind", "causal_graph"},
            {"tau_max", graph.tau_max},
            {"nodes", nodes},
            {"edges", edges},
            {"sepsets", sepsets}};
}

}  // namespace netrca
