/*
 * Copyright 2026 The amnr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance suite: one PASS/FAIL line per criterion. Run all of them, or a
// subset by number (`amnr_acceptance 4 9`). Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "amnr/amnr.hpp"
#include "amnr/baselines.hpp"
#include "amnr/datagen.hpp"
#include "amnr/diagnostics.hpp"
#include "amnr/epidemics.hpp"
#include "amnr/gp.hpp"
#include "amnr/harness.hpp"
#include "test_util.hpp"

using namespace amnr;
using amnr::testing::random_form;
using amnr::testing::random_unit;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// The AMNR protocol shared by the regression criteria: the collapsed
// estimator, M = 1 and one bandwidth grid for AMNR and TGP alike.
void amnr_protocol(ExperimentConfig& c) {
    c.estimator = Estimator::Collapsed;
    c.M_grid = {1};
    c.bandwidth_multipliers = {8, 16, 32, 64, 128};
    c.standardize = ExperimentConfig::Standardize::Scale;
    c.Q = 2000;
}

const ResultRow& row_of(const ResultTable& t, Method m, std::size_t n = 0) {
    for (const auto& r : t.rows)
        if (r.method == m && (n == 0 || r.n == n)) return r;
    throw std::runtime_error("missing row for " + std::string(method_name(m)));
}

std::size_t wins(const std::vector<double>& a, const std::vector<double>& b, bool strict) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) w += strict ? a[i] < b[i] : a[i] <= b[i];
    return w;
}

// 1. CP exactness ------------------------------------------------------------
Verdict cp_exactness() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(1, {label("acceptance-cp")}));
    std::uniform_int_distribution<std::size_t> order(2, 3), rank(1, 4), dim(1, 20);
    std::uniform_real_distribution<double> scale(0.5, 10.0);
    double worst = 0;
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        std::size_t K = order(rng), R = rank(rng);
        Dims dims;
        for (std::size_t k = 0; k < K; ++k) dims.push_back(std::max(R, dim(rng)));
        std::vector<double> l(R);
        for (auto& v : l) v = scale(rng);
        std::sort(l.rbegin(), l.rend());
        Tensor x = reconstruct(random_form(dims, l, rng));
        Tensor y = reconstruct(cp_decompose(x, R), dims);
        double e = 0;
        for (std::size_t i = 0; i < x.size(); ++i) e += (x[i] - y[i]) * (x[i] - y[i]);
        e = std::sqrt(e) / x.frobenius_norm();
        worst = std::max(worst, e);
        bad += !(e < 1e-6);
    }
    double s = seconds_since(t0);
    return {bad == 0 && s < 10, fmt("100 tensors, worst relative error %.2e, %d above 1e-6, %.1f s (limit 10 s)", worst, bad, s)};
}

// 2. factorized vs dense inner product -------------------------------------------
Verdict inner_identity() {
    Rng rng(derive_seed(1, {label("acceptance-inner")}));
    std::normal_distribution<double> z;
    std::uniform_int_distribution<std::size_t> dim(2, 10), order(2, 3);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        Dims dims;
        for (std::size_t k = 0, K = order(rng); k < K; ++k) dims.push_back(dim(rng));
        std::vector<Eigen::MatrixXd> b;
        for (auto d : dims) {
            Eigen::MatrixXd m(static_cast<Eigen::Index>(d), 2);
            for (auto& v : m.reshaped()) v = z(rng);
            b.push_back(m);
        }
        TlrModel model;
        model.dims = dims;
        model.factors = b;
        CpForm x = random_form(dims, {std::abs(z(rng)) + 1.0, std::abs(z(rng))}, rng);
        std::sort(x.lambdas.rbegin(), x.lambdas.rend());
        double dense = inner(tlr_weight_tensor(model), reconstruct(x));
        worst = std::max(worst, std::abs(dense - factorized_inner(b, x)));
    }
    return {worst < 1e-10, fmt("100 pairs, M_B = R = 2, max |dense - factorized| = %.2e (tol 1e-10)", worst)};
}

// 3. AMNR reduces to GP regression -----------------------------------------------
Verdict gp_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(1, {label("acceptance-gp")}));
    auto sphere = [&](std::size_t n) {
        Dataset d;
        d.dims = {3};
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd u = random_unit(3, rng);
            d.inputs.emplace_back(Dims{3}, std::vector<double>(u.data(), u.data() + 3));
            d.responses.push_back(std::cos(3 * u[0]) + 0.5 * u[2]);
        }
        return d;
    };
    Dataset train = sphere(6), query = sphere(5);
    AmnrConfig cfg;
    cfg.M = 1;
    cfg.R = 1;
    cfg.Q = 10000;
    cfg.noise_variance = 0.5;
    cfg.kernel = KernelSpec::parse("matern32", 0.8);
    cfg.seed = 2026;
    WarningCapture quiet;
    AmnrModel model = fit(train, cfg);
    AmnrPrediction p = predict_with_error(model, query.inputs);

    Eigen::MatrixXd x(3, 6), q(3, 5);
    for (int j = 0; j < 6; ++j) x.col(j) = Eigen::Map<const Eigen::Vector3d>(train.inputs[j].data().data());
    for (int j = 0; j < 5; ++j) q.col(j) = Eigen::Map<const Eigen::Vector3d>(query.inputs[j].data().data());
    GpPrediction gp = gp_fit_predict(x, Eigen::Map<Eigen::VectorXd>(train.responses.data(), 6), cfg.kernel,
                                     cfg.noise_variance, q);
    double worst = 0;
    for (int i = 0; i < 5; ++i) worst = std::max(worst, std::abs(p.mean[i] - gp.mean[i]) / p.standard_error[i]);
    double s = seconds_since(t0);
    return {worst <= 3 && s < 60,
            fmt("Q = 1e4, ESS %.0f, max |AMNR - GP| = %.2f MC standard errors (limit 3), %.1f s (limit 60 s)",
                model.effective_sample_size(), worst, s)};
}

// 4. low-rank ordering -------------------------------------------------------------
Verdict lowrank_ordering() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    c.dgp.kind = DgpKind::LowRankLogistic;
    c.dgp.dims = {20, 20};
    c.dgp.rank = 4;
    c.dgp.noise_variance = 1.0;
    c.methods = {Method::Amnr, Method::Tlr, Method::Tgp};
    c.n_grid = {300};
    c.trials = 20;
    c.R_grid = {4};
    amnr_protocol(c);
    WarningCapture quiet;
    ResultTable t = run_experiment(c);
    const auto &a = row_of(t, Method::Amnr), &l = row_of(t, Method::Tlr), &g = row_of(t, Method::Tgp);
    std::size_t w = wins(a.test_mse_trials, g.test_mse_trials, false);
    double s = seconds_since(t0);
    bool ok = a.trials_ok == 20 && g.trials_ok == 20 && l.trials_ok == 20 && a.test_mse_mean < l.test_mse_mean &&
              g.test_mse_mean < l.test_mse_mean && w >= 14 && s < 900;
    return {ok, fmt("test MSE AMNR %.3f, TGP %.3f, TLR %.3f; AMNR <= TGP in %zu/20 trials (need 14); %.0f s (limit 900 s)",
                    a.test_mse_mean, g.test_mse_mean, l.test_mse_mean, w, s)};
}

// 5. convergence slopes ---------------------------------------------------------------
ExperimentConfig sobolev_config(int setting) {
    ExperimentConfig c;
    c.dgp.kind = DgpKind::SobolevProduct;
    c.dgp.dims = sobolev_setting_dims(setting);
    c.dgp.rank = 2;
    c.dgp.noise_variance = 1.0;
    c.methods = {Method::Amnr, Method::Tgp};
    c.n_grid = {50, 100, 200, 400};
    c.trials = 20;
    c.R_grid = {2};
    amnr_protocol(c);
    return c;
}

Verdict convergence_slopes() {
    auto t0 = std::chrono::steady_clock::now();
    WarningCapture quiet;
    ExperimentConfig c2 = sobolev_config(2);
    ResultTable t2 = run_experiment(c2);
    SlopeResult a2 = slope_analysis(t2, 1.0, Method::Amnr);
    ResultTable t1 = run_experiment(sobolev_config(1));
    SlopeResult a1 = slope_analysis(t1, 1.0, Method::Amnr), g1 = slope_analysis(t1, 1.0, Method::Tgp);
    double s = seconds_since(t0);
    bool ok = a2.slope >= -1.0 && a2.slope <= -0.1 && a2.n.size() == 4 && a1.slope < g1.slope && s < 1800;
    return {ok, fmt("setting (ii): AMNR slope %.3f (need [-1, -0.1], theory %.3f); setting (i): AMNR %.3f vs TGP %.3f "
                    "(need AMNR < TGP); %.0f s (limit 1800 s)",
                    a2.slope, a2.theoretical, a1.slope, g1.slope, s)};
}

// 6. SIR invariants -------------------------------------------------------------------
bool connected(const Graph& g) {
    auto nb = g.neighbors();
    std::vector<char> seen(g.vertices(), 0);
    std::vector<std::uint32_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto u : nb[v])
            if (!seen[u]) seen[u] = 1, ++count, stack.push_back(u);
    }
    return count == g.vertices();
}

Verdict sir_invariants() {
    auto t0 = std::chrono::steady_clock::now();
    SirConfig base;
    base.seed = 606;
    std::string why;

    auto graphs = random_graph_ensemble(1000, 100, 61);
    SirConfig zero = base;
    zero.infection_prob = 0.0;
    int p0_bad = 0;
    for (std::size_t i = 0; i < graphs.size(); ++i) p0_bad += sir_simulate(graphs[i], zero, i) != 10;

    SirConfig one = base;
    one.infection_prob = 1.0;
    int flood_total = 0, flood_bad = 0;
    for (std::size_t i = 0; i < graphs.size() && flood_total < 200; ++i) {
        if (!connected(graphs[i])) continue;
        ++flood_total;
        flood_bad += sir_simulate(graphs[i], one, i) != 100;
    }
    one.initial_infected = 1;
    flood_bad += sir_simulate(path_graph(100), one, 0) != 100;

    SirConfig edge = base;
    edge.initial_infected = 1;
    edge.epochs = 1;
    edge.infection_prob = 0.3;
    const int N = 100000;
    double sum = 0, sq = 0;
    for (int t = 0; t < N; ++t) {
        double y = double(sir_simulate(path_graph(2), edge, std::uint64_t(t)));
        sum += y;
        sq += y * y;
    }
    double mean = sum / N, se = std::sqrt((sq / N - mean * mean) / N);
    double z = std::abs(mean - 1.3) / se;

    auto mono = random_graph_ensemble(50, 100, 62);
    const double grid[] = {0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    int mono_bad = 0;
    for (std::size_t i = 0; i < mono.size(); ++i) {
        std::size_t prev = 0;
        for (double p : grid) {
            SirConfig c = base;
            c.infection_prob = p;
            std::size_t y = sir_simulate(mono[i], c, i);
            mono_bad += y < prev || y < 10 || y > 100;
            prev = y;
        }
    }
    double s = seconds_since(t0);
    bool ok = p0_bad == 0 && flood_total > 0 && flood_bad == 0 && z <= 3 && mono_bad == 0 && s < 60;
    return {ok, fmt("p=0 mismatches %d/1000; flooding mismatches %d/%d; 2-node mean %.4f vs 1.3 (%.2f SE, limit 3); "
                    "monotonicity violations %d on 50 graphs; %.1f s (limit 60 s)",
                    p0_bad, flood_bad, flood_total + 1, mean, z, mono_bad, s)};
}

// 7. ingestion fixture -------------------------------------------------------------------
Verdict ingestion_fixture() {
    EmailLog log = read_email_log(AMNR_TEST_DATA_DIR "/email_fixture.tsv");
    IngestResult r = ingest_email_log(log, 3, 3);
    // nodes by frequency: b (5, the self-addressed record counts twice), a (4), c (3)
    // records t=1..3: a-b, b-c, a-c | t=4..6: c-a, b-b (dropped self-loop), a-b
    Graph g0(3), g1(3);
    g0.add_edge(1, 0);
    g0.add_edge(0, 2);
    g0.add_edge(1, 2);
    g1.add_edge(1, 2);
    g1.add_edge(1, 0);
    bool fixture = log.size() == 6 && r.nodes == std::vector<std::string>{"b", "a", "c"} && r.graphs.size() == 2 &&
                   r.graphs[0] == g0 && r.graphs[1] == g1;

    // frequency ties: a, d appear 3 times, b and c twice; b wins the last slot
    std::istringstream tie_src("1\tc\td\n2\ta\tb\n3\tb\ta\n4\td\tc\n5\ta\td\n");
    EmailLog ties = parse_email_log(tie_src);
    bool stable = true;
    IngestResult first = ingest_email_log(ties, 3, 1);
    Rng rng(7);
    for (int run = 0; run < 20; ++run) {
        EmailLog shuffled = ties;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        IngestResult again = ingest_email_log(shuffled, 3, 1);
        stable = stable && again.nodes == first.nodes && again.graphs == first.graphs;
    }
    bool tie_ok = first.nodes == std::vector<std::string>{"a", "d", "b"} && first.graphs.size() == 3;
    return {fixture && stable && tie_ok,
            fmt("fixture graphs %s; tie-broken top-3 %s; 20 shuffled re-runs %s", fixture ? "match" : "DIFFER",
                tie_ok ? "as expected" : "WRONG", stable ? "identical" : "DIFFER")};
}

// 8. epidemic ordering ------------------------------------------------------------------
Verdict epidemic_ordering() {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig c;
    c.source = DataSource::RandomGraphs;
    c.graph_vertices = 100;
    c.methods = {Method::Amnr, Method::Tlr, Method::Tgp};
    c.n_grid = {60};
    c.test_fraction = 1.0 / 3.0;
    c.trials = 20;
    c.R_grid = {2};
    amnr_protocol(c);
    WarningCapture quiet;
    ResultTable t = run_experiment(c);
    const auto &a = row_of(t, Method::Amnr), &l = row_of(t, Method::Tlr), &g = row_of(t, Method::Tgp);
    std::size_t wa = wins(a.test_mse_trials, l.test_mse_trials, true);
    std::size_t wg = wins(g.test_mse_trials, l.test_mse_trials, true);
    double s = seconds_since(t0);
    return {wa >= 16 && wg >= 16 && s < 1200,
            fmt("40 train / 20 test graphs: AMNR < TLR in %zu/20, TGP < TLR in %zu/20 (need 16); mean test MSE AMNR %.3f, "
                "TGP %.3f, TLR %.3f; %.0f s (limit 1200 s)",
                wa, wg, a.test_mse_mean, g.test_mse_mean, l.test_mse_mean, s)};
}

// 9. determinism of the CLI ---------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    auto dir = std::filesystem::temp_directory_path() / "amnr_acceptance_det";
    std::filesystem::create_directories(dir);
    const std::string common = " experiment --set dgp.dims=6x5 --set dgp.rank=2 --set n_grid=24,36 --set trials=3"
                               " --set methods=AMNR,TLR,TGP,MEAN --set Q=200 --set seed=99";
    auto run = [&](const std::string& name, const std::string& extra) {
        std::string cmd = std::string(AMNR_CLI_PATH) + common + extra + " --out " + (dir / name).string() + " >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    int rc = run("a.csv", " --threads 1") | run("b.csv", " --threads 1") | run("c.csv", " --threads 4");
    setenv("AMNR_THREADS", "2", 1);
    rc |= run("d.csv", "");
    unsetenv("AMNR_THREADS");
    std::string a = slurp(dir / "a.csv");
    bool same = !a.empty() && a == slurp(dir / "b.csv") && a == slurp(dir / "c.csv") && a == slurp(dir / "d.csv");
    std::filesystem::remove_all(dir);
    return {rc == 0 && same, fmt("4 runs (1, 1, 4 and AMNR_THREADS=2 workers): CSV %s, exit status %d",
                                 same ? "byte-identical" : "DIFFERS", rc)};
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> run;
    };
    const Criterion all[] = {
        {1, "CP exactness", cp_exactness},
        {2, "factorized inner product identity", inner_identity},
        {3, "AMNR vs closed-form GP", gp_oracle},
        {4, "low-rank ordering", lowrank_ordering},
        {5, "convergence slopes", convergence_slopes},
        {6, "SIR invariants", sir_invariants},
        {7, "ingestion fixture", ingestion_fixture},
        {8, "epidemic regression ordering", epidemic_ordering},
        {9, "determinism", determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail << std::endl;
    }
    return failed;
}
