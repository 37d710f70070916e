// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failing criteria. Usage: acceptance <path to netrca binary>

#include "netrca/causal.hpp"
#include "netrca/detect.hpp"
#include "netrca/eval.hpp"
#include "netrca/invariant.hpp"
#include "netrca/rca.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace netrca;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Outcome recall_floor() {
    BenchmarkOptions options;
    options.methods = {RcaMethod::Tcorca};
    options.jobs = 4;
    const auto report = run_benchmark(seed_suite(ScenarioSpec{}, 20), options);
    const double recall = report.of(RcaMethod::Tcorca).mean.recall;
    return {recall >= 0.75 && report.failures == 0,
            "tcorca mean recall@5 " + fmt("%.4f", recall) + " over 20 seeds, " + std::to_string(report.failures) +
                " failed scenarios"};
}

Outcome relative_ordering() {
    BenchmarkOptions options;
    options.jobs = 4;
    const auto sweep = run_sweep(ScenarioSpec{}, 20, {2, 5, 8, 11}, options);
    bool ok = true;
    std::ostringstream d;
    d << "F1 tcorca/threshold/ig/lbp-ig:";
    for (const auto& pt : sweep) {
        const double t = pt.report.of(RcaMethod::Tcorca).mean.f1;
        const double th = pt.report.of(RcaMethod::Threshold).mean.f1;
        const double ig = pt.report.of(RcaMethod::Ig).mean.f1;
        const double lbp = pt.report.of(RcaMethod::LbpIg).mean.f1;
        ok = ok && t > ig && t > lbp && t >= th + 0.05 && pt.report.failures == 0;
        d << " k=" << pt.n_anomalies << " " << fmt("%.3f", t) << "/" << fmt("%.3f", th) << "/" << fmt("%.3f", ig)
          << "/" << fmt("%.3f", lbp);
    }
    return {ok, d.str()};
}

Outcome complexity_audit() {
    std::map<std::size_t, double> count;
    for (std::size_t d : {50, 100, 200}) {
        const auto group = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
        double total = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto pp = testing::planted_partition(d, group, 400, seed);
            total += static_cast<double>(graph_pair_fit_count(fccg_cluster(pp.panel, {0, 400}, {}, seed)));
        }
        count[d] = total / 10.0;
    }
    std::vector<double> ratio;
    for (const auto& [d, c] : count) ratio.push_back(c / std::pow(static_cast<double>(d), 1.5));
    bool ok = count[200] < 0.25 * 200.0 * 200.0;
    for (std::size_t i = 1; i < ratio.size(); ++i) ok = ok && ratio[i] <= 1.25 * ratio[i - 1];
    std::ostringstream d;
    d << "mean pair fits " << count[50] << "/" << count[100] << "/" << count[200] << ", count/D^1.5 "
      << fmt("%.3f", ratio[0]) << "/" << fmt("%.3f", ratio[1]) << "/" << fmt("%.3f", ratio[2]) << ", bound "
      << 0.25 * 200 * 200;
    return {ok, d.str()};
}

ArxFitOptions orders(std::size_t n, std::size_t m, std::size_t kmax) {
    ArxFitOptions o;
    o.orders.ar = n;
    o.orders.exo = m;
    o.orders.max_delay = kmax;
    return o;
}

Outcome arx_recovery() {
    Rng rng(2024);
    double clean_err = 0, noisy_err = 0, oracle_err = 0;
    std::size_t wrong_delay = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const bool noisy = trial % 2 == 1;
        const std::size_t n = rng.index(3), m = noisy ? 0 : rng.index(3);
        auto planted = testing::random_arx(rng, n, m, 5);
        if (noisy) planted.b[0] = 1.0;
        const std::size_t T = noisy ? 2000 : 600;
        const auto x = testing::white_noise(T, rng);
        const auto y = testing::simulate_arx(planted, x, noisy ? 0.1 : 0.0, rng);
        const auto inv = fit_arx(testing::make_panel({x, y}), 0, 1, {0, T}, orders(n, m, 5));
        wrong_delay += inv.delay == planted.delay ? 0 : 1;
        if (inv.delay != planted.delay) continue;

        double err = std::fabs(inv.intercept() - planted.c);
        for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(inv.coeffs[i] - planted.a[i]));
        for (std::size_t j = 0; j <= m; ++j) err = std::max(err, std::fabs(inv.coeffs[n + j] - planted.b[j]));
        (noisy ? noisy_err : clean_err) = std::max(noisy ? noisy_err : clean_err, err);

        std::vector<std::vector<double>> rows;
        std::vector<double> target;
        for (std::size_t t = inv.fit_range.begin; t < inv.fit_range.end; ++t) {
            std::vector<double> row;
            for (std::size_t i = 1; i <= n; ++i) row.push_back(y[t - i]);
            for (std::size_t j = 0; j <= m; ++j) row.push_back(x[t - inv.delay - j]);
            row.push_back(1.0);
            rows.push_back(std::move(row));
            target.push_back(y[t]);
        }
        const auto beta = testing::normal_equations(rows, target);
        for (std::size_t i = 0; i < beta.size(); ++i)
            oracle_err = std::max(oracle_err, std::fabs(beta[i] - inv.coeffs[i]));
    }
    const bool ok = wrong_delay == 0 && clean_err < 1e-6 && noisy_err < 5e-2 && oracle_err < 1e-6;
    return {ok, "200 planted pairs: wrong delays " + std::to_string(wrong_delay) + ", max error noise-free " +
                    fmt("%.2e", clean_err) + ", noise 0.1 " + fmt("%.2e", noisy_err) + ", vs normal equations " +
                    fmt("%.2e", oracle_err)};
}

Outcome causal_oracle() {
    Rng rng(5);
    std::size_t checked = 0, mismatched = 0;
    for (std::size_t n = 2; n <= 4; ++n) {
        for (const auto& dag : testing::all_dags(n)) {
            std::vector<std::vector<double>> w(n);
            for (std::size_t v = 0; v < n; ++v)
                for (std::size_t k = 0; k < dag.parents[v].size(); ++k) w[v].push_back(rng.uniform(0.5, 1.5));
            const auto sk = pc_skeleton(n, 0, PopulationCiOracle(testing::scm_covariance(dag, w)), n - 2);
            std::set<std::pair<std::size_t, std::size_t>> skeleton, directed;
            for (const auto& [pair, stat] : sk.edges) skeleton.insert(pair);
            for (const auto& e : orient(sk).edges)
                if (e.kind == EdgeKind::Directed) directed.insert({e.cause.channel, e.effect});
            ++checked;
            if (skeleton != testing::dsep_skeleton(dag) || directed != testing::collider_arcs(dag)) ++mismatched;
        }
    }
    return {mismatched == 0 && checked == 571,
            std::to_string(checked) + " DAGs on 2 to 4 nodes, " + std::to_string(mismatched) + " mismatches"};
}

Outcome lbp_trees() {
    Rng rng(8);
    double worst = 0;
    std::size_t unconverged = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        InvariantGraph g;
        g.channel_names = testing::plain_names(n);
        LbpGraph lg{n, {}};
        AnomalyEvent ev;
        ev.window = {0, 10};
        for (std::size_t v = 1; v < n; ++v) {
            if (rng.uniform01() < 0.15) continue;
            ArxInvariant e;
            e.source = rng.index(v);
            e.target = v;
            e.coeffs = {1.0, 0.0};
            e.residual_threshold = 1.0;
            LinkStatus s;
            s.edge = g.edges.size();
            s.broken = rng.uniform01() < 0.5;
            s.violation_ratio = s.broken ? 1.0 : 0.0;
            lg.edges.push_back({e.source, e.target, s.broken});
            g.edges.push_back(e);
            ev.statuses.push_back(s);
        }
        for (std::size_t v = 0; v < n; ++v) ev.anomalous_channels.push_back(v);
        LbpParams p;
        p.propagation_prob = rng.uniform(0.05, 0.95);
        p.damping = rng.uniform(0.0, 0.6);
        p.max_iters = 2000;
        p.tol = 1e-12;
        for (std::size_t v = 0; v < n; ++v) p.abnormality.push_back(rng.uniform01());
        const auto r = lbp_ig_rank(ev, g, p, n);
        unconverged += r.converged ? 0 : 1;
        const auto exact = testing::brute_force_marginals(lg, p);
        for (const auto& e : r.entries) worst = std::max(worst, std::fabs(e.score - exact[e.channel]));
    }
    return {worst < 1e-6 && unconverged == 0, "300 forests up to 12 nodes, max belief error " + fmt("%.2e", worst) +
                                                  ", unconverged " + std::to_string(unconverged)};
}

Outcome detection_soundness() {
    const IndexRange w{3500, 3600};
    std::size_t clean_events = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ScenarioSpec s;
        s.n_anomalies = 0;
        s.seed = 1000 + seed;
        const auto f = testing::fit_scenario(s);
        if (detect_anomaly(f.graph, f.standard.panel, w)) ++clean_events;
    }
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ScenarioSpec s;
        s.n_anomalies = 0;
        s.seed = seed;
        const auto f = testing::fit_scenario(s);
        Rng rng(Rng::derive(seed, 77));
        const std::size_t c = rng.index(s.channels);
        Matrix v = f.standard.panel.values();
        v.block(static_cast<Eigen::Index>(w.begin), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(w.size()), 1)
            .array() += 5.0;
        const auto ev = detect_anomaly(f.graph, f.standard.panel.with_values(v), w);
        if (ev && ev->is_anomalous(c)) ++hits;
    }
    return {clean_events <= 5 && hits >= 18, "clean windows firing " + std::to_string(clean_events) +
                                                 "/100, +5 sigma shifts caught " + std::to_string(hits) + "/20"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism(const std::string& cli) {
    if (cli.empty() || !fs::exists(cli)) return {false, "netrca binary not found"};
    const fs::path root = fs::temp_directory_path() / ("netrca_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    {
        std::ofstream cfg(root / "config.json");
        cfg << R"({"scenario": {"channels": 20, "length": 3000, "n_anomalies": 3}, "bench": {"seeds": 6}})";
    }
    auto run = [&](const std::string& args) {
        const std::string cmd = "NETRCA_LOG=quiet \"" + cli + "\" " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    std::vector<std::string> compared, differing;
    bool ran = true;
    for (const char* tag : {"a", "b"}) {
        const fs::path d = root / tag;
        const std::string base = " --config " + (root / "config.json").string() + " --seed 3";
        ran = ran && run("synth" + base + " --out-dir " + d.string());
        ran = ran && run("fit" + base + " --input " + (d / "panel.csv").string() + " --model " +
                         (d / "model.json").string());
        ran = ran && run("detect" + base + " --input " + (d / "panel.csv").string() + " --model " +
                         (d / "model.json").string() + " --out-dir " + d.string());
        const fs::path event = d / "events" / "event_000.json";
        if (fs::exists(event)) {
            for (const char* m : {"tcorca", "threshold", "ig", "lbp-ig"}) {
                ran = ran && run("rca" + base + " --method " + m + " --event " + event.string() + " --input " +
                                 (d / "panel.csv").string() + " --model " + (d / "model.json").string() +
                                 " --out-dir " + d.string());
            }
        } else {
            ran = false;
        }
        ran = ran && run("bench" + base + " --jobs 1 --out-dir " + (d / "bench1").string());
        ran = ran && run("bench" + base + " --jobs 3 --out-dir " + (d / "bench3").string());
    }
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file() || entry.path().filename() == "timing.json") continue;
        const fs::path rel = fs::relative(entry.path(), root / "a");
        compared.push_back(rel.string());
        if (slurp(entry.path()) != slurp(root / "b" / rel)) differing.push_back(rel.string());
    }
    for (const char* f : {"report.json", "report.csv"}) {
        compared.push_back(std::string("bench1 vs bench3 ") + f);
        if (slurp(root / "a" / "bench1" / f) != slurp(root / "a" / "bench3" / f)) differing.push_back(f);
    }
    fs::remove_all(root);
    std::string d = std::to_string(compared.size()) + " artifacts compared, " + std::to_string(differing.size()) +
                    " differ";
    for (const auto& f : differing) d += " " + f;
    if (!ran) d += "; a command failed";
    return {ran && differing.empty() && compared.size() > 10, d};
}

RootCauseRanking ranking_of(const std::vector<std::size_t>& channels) {
    std::vector<RankEntry> entries;
    for (std::size_t i = 0; i < channels.size(); ++i)
        entries.push_back({channels[i], static_cast<double>(channels.size() - i)});
    return make_ranking(RcaMethod::Tcorca, std::move(entries), channels.size());
}

Outcome metric_identities() {
    bool ok = true;
    const auto perfect = precision_recall_f1(ranking_of({0, 1}), {0, 1}, 2);
    ok = ok && perfect.precision == 1.0 && perfect.recall == 1.0 && perfect.f1 == 1.0;
    const auto half = precision_recall_f1(ranking_of({0, 2}), {0, 1}, 2);
    ok = ok && half.precision == 0.5 && half.recall == 0.5 && half.f1 == 0.5;
    const auto empty = precision_recall_f1(ranking_of({}), {0}, 1);
    ok = ok && empty.precision == 0.0 && empty.recall == 0.0 && empty.f1 == 0.0;

    std::mt19937_64 rng(99);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 2 + rng() % 40;
        std::vector<std::size_t> pool(d);
        std::iota(pool.begin(), pool.end(), 0);
        std::shuffle(pool.begin(), pool.end(), rng);
        const auto r = ranking_of(pool);
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::vector<std::size_t> truth(pool.begin(), pool.begin() + static_cast<long>(1 + rng() % d));
        double previous = 0;
        for (std::size_t n = 1; n <= d; ++n) {
            const double recall = precision_recall_f1(r, truth, n).recall;
            violations += recall < previous ? 1 : 0;
            previous = recall;
        }
    }
    return {ok && violations == 0, std::string("trivial cases ") + (ok ? "exact" : "wrong") +
                                       ", recall@N decreases in " + std::to_string(violations) + " of 1000 rankings"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"synthetic recall floor", recall_floor},
        {"ordering against baselines", relative_ordering},
        {"FCCG pair-fit complexity", complexity_audit},
        {"ARX recovery", arx_recovery},
        {"causal discovery oracle equivalence", causal_oracle},
        {"LBP exact on trees", lbp_trees},
        {"detection soundness", detection_soundness},
        {"CLI determinism", [&] { return determinism(cli); }},
        {"metric identities", metric_identities},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed;
}
