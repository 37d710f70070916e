#pragma once

#include "netrca/panel.hpp"

#include <compare>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace netrca {

struct CausalConfig {
    std::size_t tau_max = 5;
    double alpha = 0.05;
    std::size_t max_cond = 3;
    bool operator==(const CausalConfig&) const = default;
};

struct LaggedVariable {
    std::size_t channel = 0;
    std::size_t lag = 0;
    auto operator<=>(const LaggedVariable&) const = default;
};

/// Correlation of i and j after regressing `cond` out of both (columns of `data`).
double partial_correlation(const Matrix& data, std::size_t i, std::size_t j, std::span<const std::size_t> cond);

/**
 * Same quantity from a covariance matrix. The index set is put in canonical
 * order first, so the result is exactly symmetric in (i, j). A singular
 * conditioning block gets a 1e-8 ridge and sets *regularized.
 */
double partial_correlation_cov(const Matrix& cov, std::size_t i, std::size_t j, std::span<const std::size_t> cond,
                               bool* regularized = nullptr);

enum class Independence { Independent, Dependent };

/// Fisher z = sqrt(n - |S| - 3) atanh(rho); independent iff |z| <= Phi^-1(1 - alpha/2).
Independence ci_test(double rho, std::size_t n, std::size_t cond_size, double alpha);
double fisher_z(double rho, std::size_t n, std::size_t cond_size);

class CiTest {
public:
    struct Result {
        bool independent = false;
        double statistic = 0.0;
    };
    virtual ~CiTest() = default;
    virtual Result test(std::size_t u, std::size_t v, std::span<const std::size_t> cond) const = 0;
};

/// Partial correlation + Fisher z on sample data.
class FisherZTest final : public CiTest {
public:
    FisherZTest(const Matrix& data, double alpha);
    Result test(std::size_t u, std::size_t v, std::span<const std::size_t> cond) const override;
    std::size_t samples() const { return samples_; }
    bool regularized() const { return regularized_; }

private:
    Matrix cov_;
    std::size_t samples_;
    double alpha_;
    mutable bool regularized_ = false;
};

/// Infinite-sample substitute: independence iff the population partial correlation vanishes.
class PopulationCiOracle final : public CiTest {
public:
    explicit PopulationCiOracle(Matrix cov, double tolerance = 1e-9) : cov_(std::move(cov)), tol_(tolerance) {}
    Result test(std::size_t u, std::size_t v, std::span<const std::size_t> cond) const override;

private:
    Matrix cov_;
    double tol_;
};

/// Columns ordered lag-major: index = lag * channels + channel; rows t = tau_max .. length-1.
struct LaggedDataset {
    std::size_t channels = 0;
    std::size_t tau_max = 0;
    std::vector<LaggedVariable> variables;
    Matrix data;
};

LaggedDataset build_lagged(const std::vector<std::vector<double>>& series, std::size_t tau_max);

using VarPair = std::pair<std::size_t, std::size_t>;  ///< variable indices, first < second

struct Skeleton {
    std::size_t channels = 0;
    std::size_t tau_max = 0;
    std::vector<LaggedVariable> variables;
    std::map<VarPair, double> edges;                      ///< retained pairs and their weakest test statistic
    std::map<VarPair, std::vector<std::size_t>> sepsets;  ///< removed pairs and the set that separated them
    std::size_t tests = 0;

    bool adjacent(std::size_t u, std::size_t v) const;
    std::vector<std::size_t> neighbors(std::size_t u) const;
    std::size_t variable_index(LaggedVariable v) const { return v.lag * channels + v.channel; }
};

/**
 * PC-stable edge elimination over present-time channels and their lagged
 * copies. Candidate pairs are (c,0)-(c',0) and (c',lag)-(c,0) for lag >= 1.
 * For each conditioning size up to max_cond, subsets of the frozen adjacencies
 * of either endpoint are tried in lexicographic order; removals are applied
 * together at the end of the sweep.
 */
Skeleton pc_skeleton(std::size_t channels, std::size_t tau_max, const CiTest& test, std::size_t max_cond);

Skeleton pc_skeleton(const std::vector<std::vector<double>>& residuals, std::size_t tau_max, double alpha,
                     std::size_t max_cond);

enum class EdgeKind { Directed, Bidirected };

struct CausalEdge {
    LaggedVariable cause;
    std::size_t effect = 0;
    EdgeKind kind = EdgeKind::Directed;
    double statistic = 0.0;
    bool operator==(const CausalEdge&) const = default;
};

struct Sepset {
    LaggedVariable a;
    LaggedVariable b;
    std::vector<LaggedVariable> set;
    bool operator==(const Sepset&) const = default;
};

struct CausalGraph {
    std::size_t channels = 0;
    std::size_t tau_max = 0;
    std::vector<CausalEdge> edges;
    std::vector<Sepset> sepsets;

    /// Directed edges between distinct channels, as (cause channel, effect channel), deduplicated.
    std::vector<VarPair> channel_arcs() const;
    const Sepset* find_sepset(LaggedVariable a, LaggedVariable b) const;
};

/**
 * Lagged edges point forward in time; an unshielded triple a - w - b with w
 * outside sepset(a, b) becomes a collider; every other contemporaneous edge
 * stays bidirected. Edges that receive arrowheads from both sides are left
 * bidirected as well.
 */
CausalGraph orient(const Skeleton& skeleton);

std::string to_dot(const CausalGraph& graph, const std::vector<std::string>& names);

void to_json(nlohmann::json& j, const CausalConfig& c);
void from_json(const nlohmann::json& j, CausalConfig& c);
nlohmann::json causal_graph_json(const CausalGraph& graph, const std::vector<std::string>& names);

}  // namespace netrca
