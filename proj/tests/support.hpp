#pragma once

#include "netrca/invariant.hpp"
#include "netrca/panel.hpp"
#include "netrca/synth.hpp"
#include "netrca/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netrca::testing {

inline std::vector<std::int64_t> uniform_grid(std::size_t n, std::int64_t step = 60) {
    std::vector<std::int64_t> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = 1'000'000 + step * static_cast<std::int64_t>(i);
    return ts;
}

inline std::vector<std::string> plain_names(std::size_t d) {
    std::vector<std::string> out;
    for (std::size_t c = 0; c < d; ++c) out.push_back("ch" + std::to_string(c));
    return out;
}

inline TimeSeriesPanel make_panel(const std::vector<std::vector<double>>& columns) {
    const std::size_t t = columns.empty() ? 0 : columns.front().size();
    Matrix m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c)
        for (std::size_t i = 0; i < t; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = columns[c][i];
    return TimeSeriesPanel(uniform_grid(t), plain_names(columns.size()), m);
}

inline std::vector<double> white_noise(std::size_t n, Rng& rng, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = sd * rng.normal();
    return v;
}

/// Channels split into consecutive groups; each channel is a noisy, delayed,
/// scaled copy of its group's white-noise driver, so groups are unrelated.
struct PlantedPartition {
    TimeSeriesPanel panel;
    std::vector<std::size_t> group;  ///< group id per channel
};

inline PlantedPartition planted_partition(std::size_t channels, std::size_t group_size, std::size_t length,
                                          std::uint64_t seed, double noise = 0.05) {
    Rng rng(seed);
    const std::size_t pad = 8;
    std::vector<std::vector<double>> cols;
    std::vector<std::size_t> group;
    std::vector<double> driver;
    for (std::size_t c = 0; c < channels; ++c) {
        if (c % group_size == 0) driver = white_noise(length + pad, rng);
        const double gain = rng.uniform(0.5, 1.5);
        const std::size_t delay = rng.index(4);
        std::vector<double> col(length);
        for (std::size_t t = 0; t < length; ++t) col[t] = gain * driver[t + pad - delay] + noise * rng.normal();
        cols.push_back(std::move(col));
        group.push_back(c / group_size);
    }
    return {make_panel(cols), group};
}

struct PlantedArx {
    std::vector<double> a;  ///< AR coefficients a_1..a_n
    std::vector<double> b;  ///< exogenous b_0..b_m
    std::size_t delay = 0;
    double c = 0.0;
};

/// Random stable ARX with every exogenous tap at least 0.2 in magnitude.
inline PlantedArx random_arx(Rng& rng, std::size_t n, std::size_t m, std::size_t max_delay) {
    PlantedArx p;
    for (std::size_t i = 0; i < n; ++i) p.a.push_back(rng.uniform(-0.8, 0.8) / static_cast<double>(n));
    for (std::size_t j = 0; j <= m; ++j) {
        const double mag = rng.uniform(0.2, 1.5);
        p.b.push_back(rng.uniform01() < 0.5 ? -mag : mag);
    }
    p.delay = rng.index(max_delay + 1);
    p.c = rng.uniform(-1.0, 1.0);
    return p;
}

/// y(t) = sum a_i y(t-i) + sum b_j x(t-k-j) + c + noise, with y = 0 before all lags exist.
inline std::vector<double> simulate_arx(const PlantedArx& p, const std::vector<double>& x, double noise, Rng& rng) {
    std::vector<double> y(x.size(), 0.0);
    const std::size_t start = std::max(p.a.size(), p.delay + p.b.size() - 1);
    for (std::size_t t = start; t < x.size(); ++t) {
        double v = p.c;
        for (std::size_t i = 0; i < p.a.size(); ++i) v += p.a[i] * y[t - i - 1];
        for (std::size_t j = 0; j < p.b.size(); ++j) v += p.b[j] * x[t - p.delay - j];
        if (noise > 0.0) v += noise * rng.normal();
        y[t] = v;
    }
    return y;
}

/// Least squares through the normal equations and Gaussian elimination with
/// partial pivoting. Kept independent of Eigen's decompositions.
inline std::vector<double> normal_equations(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
    const std::size_t p = rows.front().size();
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) a[i][j] += rows[r][i] * rows[r][j];
            a[i][p] += rows[r][i] * y[r];
        }
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t best = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[best][col])) best = r;
        std::swap(a[col], a[best]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t k = col; k <= p; ++k) a[r][k] -= f * a[col][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = 0; i < p; ++i) beta[i] = a[i][p] / a[i][i];
    return beta;
}

/// Generated scenario taken through imputation, smoothing, standardization on
/// the first half and graph fitting, as the benchmark does.
struct FittedScenario {
    Scenario scenario;
    TimeSeriesPanel smoothed;
    Standardized standard;
    IndexRange train;
    InvariantGraph graph;
};

inline FittedScenario fit_scenario(const ScenarioSpec& spec, const FccgConfig& fccg = {}, std::size_t smooth_window = 5) {
    Scenario sc = generate_scenario(spec);
    TimeSeriesPanel smoothed = smooth(impute_missing(sc.panel), smooth_window);
    const IndexRange train{0, smoothed.length() / 2};
    Standardized st = standardize(smoothed, train);
    InvariantGraph g = fccg_cluster(st.panel, train, fccg, spec.seed);
    return {std::move(sc), std::move(smoothed), std::move(st), train, std::move(g)};
}

}  // namespace netrca::testing
