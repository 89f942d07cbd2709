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

#include "amnr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "amnr/diagnostics.hpp"
#include "amnr/error.hpp"
#include "amnr/rng.hpp"

namespace amnr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct TrialData {
    Dataset train;
    Dataset test;
    double noise_variance = 0.0;
};

struct Cell {
    Method method;
    int R;
    int M;
};

std::vector<Cell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (auto m : cfg.methods) {
        if (m == Method::Amnr) {
            for (int R : cfg.R_grid)
                for (int M : cfg.M_grid) cells.push_back({m, R, M});
        } else if (m == Method::Tlr) {
            for (int R : cfg.R_grid) cells.push_back({m, R, 0});
        } else {
            cells.push_back({m, 0, 0});
        }
    }
    return cells;
}

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("MSE needs two equal nonempty vectors");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

// Data shared by all trials of a subsampled source.
struct SharedData {
    Dataset data;
    double noise_variance = 0.0;
};

SharedData load_shared(const ExperimentConfig& cfg) {
    SharedData s;
    if (cfg.source == DataSource::File) {
        s.data = read_atrd(cfg.dataset);
        s.noise_variance = cfg.noise_variance;
    } else if (cfg.source == DataSource::EmailLog) {
        const auto ingest = ingest_email_log(read_email_log(cfg.email_log), cfg.top_n, cfg.chunk_size);
        if (ingest.graphs.empty()) throw PreconditionError("email log produced no graphs");
        SirConfig sir = cfg.sir;
        sir.seed = derive_seed(cfg.seed, {label("sir")});
        auto ed = build_epidemic_dataset(ingest.graphs, sir);
        s.data = std::move(ed.data);
        s.noise_variance = ed.noise_variance;
    }
    return s;
}

TrialData make_trial_data(const ExperimentConfig& cfg, const SharedData& shared, std::size_t n, int trial) {
    const std::uint64_t seed = derive_seed(cfg.seed, {label("data"), n, static_cast<std::uint64_t>(trial)});
    Dataset all;
    double noise = 0.0;
    switch (cfg.source) {
        case DataSource::Dgp: {
            DgpSpec spec = cfg.dgp;
            spec.seed = seed;
            all = generate(spec, n).data;
            noise = spec.noise_variance;
            break;
        }
        case DataSource::RandomGraphs: {
            const auto graphs = random_graph_ensemble(n, cfg.graph_vertices, seed, cfg.graph_min_density,
                                                      cfg.graph_max_density);
            SirConfig sir = cfg.sir;
            sir.seed = derive_seed(seed, {label("sir")});
            auto ed = build_epidemic_dataset(graphs, sir);
            all = std::move(ed.data);
            noise = ed.noise_variance;
            break;
        }
        case DataSource::EmailLog:
        case DataSource::File: {
            if (n > shared.data.size()) {
                throw PreconditionError("n = " + std::to_string(n) + " exceeds the " +
                                        std::to_string(shared.data.size()) + " available examples");
            }
            std::vector<std::size_t> idx(shared.data.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            Rng rng(seed);
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(n);
            all = shared.data.subset(idx);
            noise = shared.noise_variance;
            break;
        }
    }
    if (cfg.noise_variance > 0.0) noise = cfg.noise_variance;
    if (!(noise > 0.0)) throw ConfigError("noise variance must be positive; set noise_variance");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, {label("split"), n, static_cast<std::uint64_t>(trial)}));
    std::shuffle(order.begin(), order.end(), rng);
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg.test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 2);
    TrialData t;
    t.test = all.subset(std::span<const std::size_t>(order.data(), n_test));
    t.train = all.subset(std::span<const std::size_t>(order.data() + n_test, n - n_test));
    t.noise_variance = noise;
    return t;
}

// Affine rescaling applied to a trial's data before fitting.
struct Scaling {
    double y_shift = 0.0;
    double y_scale = 1.0;
    double x_scale = 1.0;
};

Scaling fit_scaling(const Dataset& train, bool center) {
    Scaling s;
    const auto n = static_cast<double>(train.size());
    if (center) s.y_shift = std::accumulate(train.responses.begin(), train.responses.end(), 0.0) / n;
    double var = 0.0;
    for (double y : train.responses) var += (y - s.y_shift) * (y - s.y_shift);
    var /= n;
    s.y_scale = var > 0.0 ? std::sqrt(var) : 1.0;
    double norm = 0.0;
    for (const auto& x : train.inputs) norm += x.frobenius_norm();
    norm /= n;
    s.x_scale = norm > 0.0 ? norm : 1.0;
    return s;
}

Dataset apply_scaling(const Dataset& d, const Scaling& s) {
    Dataset out;
    out.dims = d.dims;
    for (const auto& x : d.inputs) {
        std::vector<double> v(x.data().begin(), x.data().end());
        for (auto& e : v) e /= s.x_scale;
        out.inputs.emplace_back(d.dims, std::move(v));
    }
    for (double y : d.responses) out.responses.push_back((y - s.y_shift) / s.y_scale);
    return out;
}

struct Predictions {
    std::vector<double> train;
    std::vector<double> test;
    double bandwidth = 0.0;
};

std::vector<double> amnr_grid(const ExperimentConfig& cfg, const Dims& dims, const std::vector<CpForm>& forms) {
    if (!cfg.bandwidth_grid.empty()) return cfg.bandwidth_grid;
    const std::size_t mode =
        static_cast<std::size_t>(std::max_element(dims.begin(), dims.end()) - dims.begin());
    std::size_t cols = 0;
    for (const auto& f : forms) cols += f.rank();
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(dims[mode]), static_cast<Eigen::Index>(cols));
    Eigen::Index c = 0;
    for (const auto& f : forms)
        for (std::size_t r = 0; r < f.rank(); ++r) pts.col(c++) = f.factors[mode].col(static_cast<Eigen::Index>(r));
    return bandwidth_grid(pts, cfg.bandwidth_multipliers);
}

// Holdout selection: fit on two thirds of the training set, score the rest.
double holdout_bandwidth(const std::vector<double>& grid, const Dataset& train, const std::vector<CpForm>& forms,
                         const AmnrConfig& base) {
    const ContentSplit split = content_holdout_split(train);
    if (split.fit.empty() || split.holdout.empty()) return grid[grid.size() / 2];
    std::vector<CpForm> fit_forms, hold_forms;
    std::vector<double> fit_y, hold_y;
    for (auto i : split.fit) {
        fit_forms.push_back(forms[i]);
        fit_y.push_back(train.responses[i]);
    }
    for (auto i : split.holdout) {
        hold_forms.push_back(forms[i]);
        hold_y.push_back(train.responses[i]);
    }
    double best = std::numeric_limits<double>::infinity();
    double chosen = grid.front();
    for (double h : grid) {
        AmnrConfig c = base;
        c.kernel = base.kernel.with_bandwidth(h);
        const AmnrModel m = fit_decomposed(fit_forms, fit_y, train.dims, c);
        const double e = mse(predict_forms(m, hold_forms).mean, hold_y);
        if (e < best) {
            best = e;
            chosen = h;
        }
    }
    return chosen;
}

AmnrModel fit_amnr_selected(const ExperimentConfig& cfg, const Dataset& train, const std::vector<CpForm>& forms,
                            const AmnrConfig& base) {
    std::vector<double> grid = amnr_grid(cfg, train.dims, forms);
    std::sort(grid.begin(), grid.end());
    AmnrConfig c = base;
    c.kernel = base.kernel.with_bandwidth(grid.size() == 1 ? grid.front() : holdout_bandwidth(grid, train, forms, base));
    return fit_decomposed(forms, train.responses, train.dims, c);
}

Predictions run_cell(const ExperimentConfig& cfg, const Cell& cell, const Dataset& train, const Dataset& test,
                     double noise, std::uint64_t seed) {
    Predictions p;
    switch (cell.method) {
        case Method::Mean:
            p.train = mean_predictor(train.responses, train.size());
            p.test = mean_predictor(train.responses, test.size());
            break;
        case Method::Tlr: {
            TlrOptions o = cfg.tlr;
            o.rank = cell.R;
            o.seed = derive_seed(seed, {label("tlr")});
            const TlrModel m = tlr_fit(train, o);
            p.train = tlr_predict(m, train.inputs);
            p.test = tlr_predict(m, test.inputs);
            break;
        }
        case Method::Tgp: {
            TgpOptions o;
            o.kernel = cfg.kernel;
            o.noise_variance = noise;
            o.grid_multipliers = cfg.bandwidth_multipliers;
            std::vector<Tensor> query(train.inputs);
            query.insert(query.end(), test.inputs.begin(), test.inputs.end());
            const TgpResult r = tgp_fit_predict(train, query, o);
            p.train.assign(r.predictions.begin(), r.predictions.begin() + static_cast<std::ptrdiff_t>(train.size()));
            p.test.assign(r.predictions.begin() + static_cast<std::ptrdiff_t>(train.size()), r.predictions.end());
            p.bandwidth = r.bandwidth;
            break;
        }
        case Method::Amnr: {
            AmnrConfig ac;
            ac.M = cell.M;
            ac.R = cell.R;
            ac.Q = cfg.Q;
            ac.noise_variance = noise;
            ac.kernel = cfg.kernel;
            ac.seed = derive_seed(seed, {label("amnr"), static_cast<std::uint64_t>(cell.R),
                                         static_cast<std::uint64_t>(cell.M)});
            ac.sign_flip = cfg.sign_flip;
            ac.likelihood = cfg.likelihood;
            ac.estimator = cfg.estimator;
            const auto train_forms = decompose_inputs(train.inputs, ac);
            const auto test_forms = decompose_inputs(test.inputs, ac);
            const AmnrModel m = fit_amnr_selected(cfg, train, train_forms, ac);
            p.train = posterior_mean_insample(m);
            p.test = predict_forms(m, test_forms).mean;
            p.bandwidth = m.config().kernel.bandwidth;
            break;
        }
    }
    return p;
}

std::vector<TrialOutcome> run_trial(const ExperimentConfig& cfg, const std::vector<Cell>& cells,
                                    const SharedData& shared, std::size_t n, int trial) {
    std::vector<TrialOutcome> out(cells.size());
    TrialData data;
    try {
        data = make_trial_data(cfg, shared, n, trial);
    } catch (const std::exception& e) {
        for (auto& o : out) o.error = std::string("data: ") + e.what();
        return out;
    }
    Scaling scaling;
    Dataset train = data.train, test = data.test;
    double noise = data.noise_variance;
    if (cfg.standardize != ExperimentConfig::Standardize::None) {
        scaling = fit_scaling(data.train, cfg.standardize == ExperimentConfig::Standardize::Center);
        train = apply_scaling(data.train, scaling);
        test = apply_scaling(data.test, scaling);
        noise /= scaling.y_scale * scaling.y_scale;
    }
    const std::uint64_t seed = derive_seed(cfg.seed, {label("fit"), n, static_cast<std::uint64_t>(trial)});
    for (std::size_t c = 0; c < cells.size(); ++c) {
        TrialOutcome& o = out[c];
        const auto start = std::chrono::steady_clock::now();
        try {
            Predictions p = run_cell(cfg, cells[c], train, test, noise, seed);
            for (auto* v : {&p.train, &p.test})
                for (auto& e : *v) e = e * scaling.y_scale + scaling.y_shift;
            o.train_mse = mse(p.train, data.train.responses);
            o.test_mse = mse(p.test, data.test.responses);
            o.truth_mse = data.test.has_truth() ? mse(p.test, data.test.truth) : kNaN;
            o.bandwidth = p.bandwidth;
            if (!std::isfinite(o.train_mse) || !std::isfinite(o.test_mse)) {
                throw Error("non-finite MSE");
            }
            o.ok = true;
        } catch (const std::exception& e) {
            o.ok = false;
            o.error = e.what();
        }
        o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return out;
}

std::pair<double, double> mean_var(const std::vector<double>& v) {
    if (v.empty()) return {kNaN, kNaN};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return {mean, s / static_cast<double>(v.size() - 1)};
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

Method parse_method(std::string_view name) {
    if (name == "AMNR" || name == "amnr") return Method::Amnr;
    if (name == "TLR" || name == "tlr") return Method::Tlr;
    if (name == "TGP" || name == "tgp") return Method::Tgp;
    if (name == "MEAN" || name == "mean") return Method::Mean;
    throw ConfigError("unknown method: " + std::string(name));
}

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Amnr: return "AMNR";
        case Method::Tlr: return "TLR";
        case Method::Tgp: return "TGP";
        case Method::Mean: return "MEAN";
    }
    return "AMNR";
}

DataSource parse_source(std::string_view name) {
    if (name == "dgp") return DataSource::Dgp;
    if (name == "random_graphs") return DataSource::RandomGraphs;
    if (name == "email_log") return DataSource::EmailLog;
    if (name == "file") return DataSource::File;
    throw ConfigError("unknown data source: " + std::string(name));
}

std::string_view source_name(DataSource s) {
    switch (s) {
        case DataSource::Dgp: return "dgp";
        case DataSource::RandomGraphs: return "random_graphs";
        case DataSource::EmailLog: return "email_log";
        case DataSource::File: return "file";
    }
    return "dgp";
}

bool ResultRow::operator==(const ResultRow& o) const {
    if (method != o.method || n != o.n || R != o.R || M != o.M || trials_ok != o.trials_ok ||
        trials_failed != o.trials_failed || test_mse_trials.size() != o.test_mse_trials.size()) {
        return false;
    }
    const double a[] = {train_mse_mean, train_mse_var, test_mse_mean, test_mse_var, truth_mse_mean,
                        truth_mse_var, bandwidth_mean, noise_variance};
    const double b[] = {o.train_mse_mean, o.train_mse_var, o.test_mse_mean, o.test_mse_var, o.truth_mse_mean,
                        o.truth_mse_var, o.bandwidth_mean, o.noise_variance};
    for (std::size_t i = 0; i < std::size(a); ++i)
        if (!same(a[i], b[i])) return false;
    for (std::size_t i = 0; i < test_mse_trials.size(); ++i)
        if (!same(test_mse_trials[i], o.test_mse_trials[i])) return false;
    return true;
}

std::size_t ResultTable::failed_cells() const {
    std::size_t f = 0;
    for (const auto& r : rows) f += r.trials_failed;
    return f;
}

std::vector<double> mean_predictor(std::span<const double> train_y, std::size_t count) {
    if (train_y.empty()) throw PreconditionError("mean predictor needs training responses");
    const double mean = std::accumulate(train_y.begin(), train_y.end(), 0.0) / static_cast<double>(train_y.size());
    return std::vector<double>(count, mean);
}

int worker_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("AMNR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
        warn(std::string("ignoring AMNR_THREADS='") + env + "'");
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

ResultTable run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, nullptr); }

ResultTable run_experiment(const ExperimentConfig& cfg, ExperimentDetail* detail) {
    cfg.validate();
    const auto cells = enumerate_cells(cfg);
    const SharedData shared = load_shared(cfg);
    const std::size_t N = cfg.n_grid.size();
    const auto T = static_cast<std::size_t>(cfg.trials);

    std::vector<std::vector<std::vector<TrialOutcome>>> results(N, std::vector<std::vector<TrialOutcome>>(T));
    std::atomic<std::size_t> next{0};
    const std::size_t tasks = N * T;
    auto worker = [&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
            const std::size_t ni = t / T, trial = t % T;
            results[ni][trial] = run_trial(cfg, cells, shared, cfg.n_grid[ni], static_cast<int>(trial));
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count(cfg.threads)), tasks);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    ResultTable table;
    table.dims = shared.data.size() ? shared.data.dims
                 : cfg.source == DataSource::RandomGraphs ? Dims{cfg.graph_vertices, cfg.graph_vertices}
                                                          : cfg.dgp.dims;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t ni = 0; ni < N; ++ni) {
            ResultRow row;
            row.method = cells[c].method;
            row.n = cfg.n_grid[ni];
            row.R = cells[c].R;
            row.M = cells[c].M;
            std::vector<double> train, test, truth;
            double bw = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const TrialOutcome& o = results[ni][t][c];
                row.wall_seconds += o.seconds;
                if (!o.ok) {
                    ++row.trials_failed;
                    row.test_mse_trials.push_back(kNaN);
                    warn(std::string(method_name(row.method)) + " n=" + std::to_string(row.n) + " trial " +
                         std::to_string(t) + " failed: " + o.error);
                    continue;
                }
                ++row.trials_ok;
                train.push_back(o.train_mse);
                test.push_back(o.test_mse);
                if (!std::isnan(o.truth_mse)) truth.push_back(o.truth_mse);
                bw += o.bandwidth;
                row.test_mse_trials.push_back(o.test_mse);
            }
            std::tie(row.train_mse_mean, row.train_mse_var) = mean_var(train);
            std::tie(row.test_mse_mean, row.test_mse_var) = mean_var(test);
            std::tie(row.truth_mse_mean, row.truth_mse_var) = mean_var(truth);
            row.bandwidth_mean = row.trials_ok ? bw / static_cast<double>(row.trials_ok) : kNaN;
            row.noise_variance = cfg.noise_variance > 0.0          ? cfg.noise_variance
                                 : cfg.source == DataSource::Dgp   ? cfg.dgp.noise_variance
                                                                   : shared.noise_variance;
            table.rows.push_back(std::move(row));
        }
    }
    if (detail) detail->outcomes = std::move(results);
    return table;
}

double theoretical_slope(double beta, double d) { return -2.0 * beta / (2.0 * beta + d); }

std::pair<double, double> least_squares_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("line fit needs >= 2 paired points");
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw PreconditionError("line fit needs distinct x values");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

SlopeResult slope_analysis(const ResultTable& table, double noise_variance, Method method,
                           const SlopeOptions& options) {
    std::vector<std::pair<std::size_t, double>> best;  // (n, excess) per distinct n
    for (const auto& row : table.rows) {
        if (row.method != method || row.trials_ok == 0) continue;
        if (options.R && row.R != *options.R) continue;
        if (options.M && row.M != *options.M) continue;
        const double e = options.use_truth ? row.truth_mse_mean : row.test_mse_mean - noise_variance;
        auto it = std::find_if(best.begin(), best.end(), [&](const auto& p) { return p.first == row.n; });
        if (it == best.end()) {
            best.emplace_back(row.n, e);
        } else if (e < it->second) {
            it->second = e;
        }
    }
    if (best.size() < 3) throw PreconditionError("slope analysis needs rows at >= 3 distinct n");
    std::sort(best.begin(), best.end());

    SlopeResult out;
    std::vector<double> lx, ly;
    for (const auto& [n, e] : best) {
        if (!(e > 0.0) || !std::isfinite(e)) {
            warn("excess risk at n=" + std::to_string(n) + " is not positive; point excluded from the slope fit");
            continue;
        }
        out.n.push_back(static_cast<double>(n));
        out.excess.push_back(e);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(e));
    }
    if (lx.size() < 2) throw PreconditionError("fewer than two positive excess-risk points");
    std::tie(out.slope, out.intercept) = least_squares_line(lx, ly);

    double max_dim = 0.0, prod = 1.0;
    for (auto d : table.dims) {
        max_dim = std::max(max_dim, static_cast<double>(d));
        prod *= static_cast<double>(d);
    }
    if (method == Method::Amnr) {
        out.d = max_dim;
    } else if (method == Method::Tgp) {
        out.d = prod;
    } else {
        out.d = kNaN;
    }
    out.theoretical = std::isnan(out.d) ? kNaN : theoretical_slope(options.beta, out.d);
    for (std::size_t i = 0; i < out.n.size(); ++i) {
        out.aligned.push_back(out.excess[i] / out.excess.front());
        out.aligned_theory.push_back(std::isnan(out.theoretical)
                                         ? kNaN
                                         : std::pow(out.n[i] / out.n.front(), out.theoretical));
    }
    return out;
}

}  // namespace amnr
