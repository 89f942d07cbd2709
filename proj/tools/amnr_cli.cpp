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

// Command-line front end: data generation, SIR labelling, fitting, prediction
// and experiment sweeps. Exit status is 0 on success, the number of failed
// sweep rows (capped at 120) after an experiment with failures, and 125 on
// any other error.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "amnr/amnr.hpp"
#include "amnr/baselines.hpp"
#include "amnr/datagen.hpp"
#include "amnr/epidemics.hpp"
#include "amnr/error.hpp"
#include "amnr/harness.hpp"
#include "amnr/simd.hpp"

namespace {

using namespace amnr;

constexpr int kErrorExit = 125;

Dims parse_dims(const std::string& s) {
    Dims d;
    std::stringstream ss(s);
    std::string part;
    const char sep = s.find('x') != std::string::npos ? 'x' : ',';
    while (std::getline(ss, part, sep)) d.push_back(static_cast<std::size_t>(std::stoull(part)));
    return d;
}

std::vector<Graph> graphs_of(const Dataset& d) {
    std::vector<Graph> g;
    for (const auto& x : d.inputs) g.push_back(Graph::from_tensor(x));
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"amnr: tensor regression with additive-multiplicative nonparametric models"};
    app.require_subcommand(1);
    std::string simd_backend;
    app.add_option("--simd", simd_backend, "force the kernel backend (scalar|avx2)");

    // datagen
    auto* gen = app.add_subcommand("datagen", "write a synthetic dataset (ATRD v1)");
    std::string kind = "lowrank", dims_s = "20x20", gen_out;
    std::size_t gen_n = 100;
    DgpSpec spec;
    gen->add_option("--kind", kind, "lowrank | fullrank | sobolev")->capture_default_str();
    gen->add_option("--dims", dims_s, "tensor shape, e.g. 20x20")->capture_default_str();
    gen->add_option("--n", gen_n, "number of examples")->capture_default_str();
    gen->add_option("--rank", spec.rank, "rank of generated inputs")->capture_default_str();
    gen->add_option("--noise", spec.noise_variance, "noise variance")->capture_default_str();
    gen->add_option("--basis-terms", spec.basis_terms, "basis truncation (sobolev)")->capture_default_str();
    gen->add_option("--seed", spec.seed, "seed")->capture_default_str();
    gen->add_option("--out", gen_out, "output file")->required();

    // ingest
    auto* ing = app.add_subcommand("ingest", "turn an email log (TSV) into adjacency matrices");
    std::string log_path, ing_out, nodes_out;
    std::size_t top_n = 1000, chunk = 2000;
    ing->add_option("--log", log_path, "TSV: timestamp, sender, recipient")->required();
    ing->add_option("--top-n", top_n, "addresses kept, by frequency")->capture_default_str();
    ing->add_option("--chunk-size", chunk, "records per graph")->capture_default_str();
    ing->add_option("--out", ing_out, "ATRD output (responses zero until labelled by `sir`)")->required();
    ing->add_option("--nodes-out", nodes_out, "optional node list, one address per line");

    // sir
    auto* sir = app.add_subcommand("sir", "label graphs with SIR ever-infected counts");
    std::string sir_in, sir_out, transmission = "per_neighbor";
    std::size_t random_graphs = 0, vertices = 100;
    SirConfig sc;
    sir->add_option("--graphs", sir_in, "ATRD file of adjacency matrices");
    sir->add_option("--random", random_graphs, "instead, generate this many random graphs");
    sir->add_option("--vertices", vertices, "node count of random graphs")->capture_default_str();
    sir->add_option("--initial", sc.initial_infected, "initially infected nodes")->capture_default_str();
    sir->add_option("--p", sc.infection_prob, "infection probability")->capture_default_str();
    sir->add_option("--epochs", sc.epochs, "infectious period in epochs")->capture_default_str();
    sir->add_option("--trials", sc.trials_per_graph, "simulations averaged per graph")->capture_default_str();
    sir->add_option("--transmission", transmission, "per_neighbor | per_node")->capture_default_str();
    sir->add_option("--seed", sc.seed, "seed")->capture_default_str();
    sir->add_option("--out", sir_out, "labelled ATRD output")->required();

    // fit
    auto* fitc = app.add_subcommand("fit", "fit an AMNR model");
    std::string fit_data, fit_out, kernel = "matern32", likelihood = "gaussian", estimator = "importance";
    AmnrConfig ac;
    fitc->add_option("--data", fit_data, "training ATRD")->required();
    fitc->add_option("--out", fit_out, "model file")->required();
    fitc->add_option("--M", ac.M, "additive terms")->capture_default_str();
    fitc->add_option("--R", ac.R, "CP rank")->capture_default_str();
    fitc->add_option("--Q", ac.Q, "Monte Carlo draws")->capture_default_str();
    fitc->add_option("--noise", ac.noise_variance, "noise variance")->capture_default_str();
    fitc->add_option("--kernel", kernel, "matern12 | matern32 | matern52 | rbf")->capture_default_str();
    fitc->add_option("--bandwidth", ac.kernel.bandwidth, "kernel bandwidth")->capture_default_str();
    fitc->add_option("--likelihood", likelihood, "gaussian | literal")->capture_default_str();
    fitc->add_option("--estimator", estimator, "importance | collapsed")->capture_default_str();
    fitc->add_flag("--sign-flip", ac.sign_flip, "randomly flip factor signs before fitting");
    fitc->add_option("--seed", ac.seed, "seed")->capture_default_str();

    // predict
    auto* pred = app.add_subcommand("predict", "predict with a saved AMNR model");
    std::string model_path, pred_data, pred_out;
    pred->add_option("--model", model_path, "model file")->required();
    pred->add_option("--data", pred_data, "ATRD of query tensors")->required();
    pred->add_option("--out", pred_out, "CSV output (stdout when omitted)");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run a method comparison sweep");
    std::string config_path, exp_out;
    std::vector<std::string> overrides;
    int threads = 0;
    bool use_truth = false;
    exp->add_option("--config", config_path, "key=value config file");
    exp->add_option("--set", overrides, "override, key=value (repeatable)");
    exp->add_option("--out", exp_out, "CSV output; overrides `output`");
    exp->add_option("--threads", threads, "worker threads (default AMNR_THREADS or all cores)");
    exp->add_flag("--truth-excess", use_truth, "rate chart uses error against the noise-free function");

    // slopes
    auto* slo = app.add_subcommand("slopes", "fit convergence slopes from an experiment CSV");
    std::string slope_csv;
    double slope_noise = -1.0, beta = 1.0;
    bool slope_truth = false;
    slo->add_option("--csv", slope_csv, "experiment CSV")->required();
    slo->add_option("--noise", slope_noise, "noise variance (default: the CSV's)");
    slo->add_option("--beta", beta, "smoothness for the reference rate")->capture_default_str();
    slo->add_flag("--truth-excess", slope_truth, "use error against the noise-free function");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!simd_backend.empty()) {
            simd::set_backend(simd_backend == "avx2" ? simd::Backend::Avx2 : simd::Backend::Scalar);
        }
        if (gen->parsed()) {
            spec.kind = parse_dgp_kind(kind);
            spec.dims = parse_dims(dims_s);
            const auto g = generate(spec, gen_n);
            write_atrd(g.data, gen_out);
            std::cout << "wrote " << g.data.size() << " examples to " << gen_out << "\n";
        } else if (ing->parsed()) {
            const auto res = ingest_email_log(read_email_log(log_path), top_n, chunk);
            if (res.graphs.empty()) throw PreconditionError("the log yields no complete chunk");
            Dataset d;
            const auto V = res.nodes.size();
            d.dims = {V, V};
            for (const auto& g : res.graphs) {
                d.inputs.push_back(g.to_tensor());
                d.responses.push_back(0.0);
            }
            write_atrd(d, ing_out);
            if (!nodes_out.empty()) {
                std::ofstream o(nodes_out);
                if (!o) throw IoError("cannot write " + nodes_out);
                for (const auto& n : res.nodes) o << n << "\n";
            }
            std::cout << "wrote " << d.size() << " graphs on " << V << " nodes to " << ing_out << "\n";
        } else if (sir->parsed()) {
            if (transmission == "per_node") sc.transmission = Transmission::PerNode;
            else if (transmission != "per_neighbor") throw ConfigError("unknown transmission: " + transmission);
            std::vector<Graph> graphs;
            if (!sir_in.empty()) graphs = graphs_of(read_atrd(sir_in));
            else if (random_graphs > 0) graphs = random_graph_ensemble(random_graphs, vertices, sc.seed);
            else throw ConfigError("give --graphs or --random");
            const auto ed = build_epidemic_dataset(graphs, sc);
            write_atrd(ed.data, sir_out);
            std::printf("wrote %zu labelled graphs to %s; estimated label noise variance %.6g\n", ed.data.size(),
                        sir_out.c_str(), ed.noise_variance);
        } else if (fitc->parsed()) {
            ac.kernel = KernelSpec::parse(kernel, ac.kernel.bandwidth);
            if (likelihood == "literal") ac.likelihood = LikelihoodForm::Literal;
            else if (likelihood != "gaussian") throw ConfigError("unknown likelihood: " + likelihood);
            if (estimator == "collapsed") ac.estimator = Estimator::Collapsed;
            else if (estimator != "importance") throw ConfigError("unknown estimator: " + estimator);
            const AmnrModel m = fit(read_atrd(fit_data), ac);
            save_model(m, fit_out);
            std::printf("fitted on %zu examples; effective sample size %.1f of %d\n", m.train_size(),
                        m.effective_sample_size(), ac.Q);
        } else if (pred->parsed()) {
            const AmnrModel m = load_model(model_path);
            const Dataset d = read_atrd(pred_data);
            const auto p = predict_with_error(m, d.inputs);
            std::ofstream file;
            if (!pred_out.empty()) {
                file.open(pred_out);
                if (!file) throw IoError("cannot write " + pred_out);
            }
            std::ostream& o = pred_out.empty() ? std::cout : file;
            o << "index,prediction,standard_error\n";
            char buf[96];
            for (std::size_t i = 0; i < p.mean.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, p.mean[i], p.standard_error[i]);
                o << buf;
            }
        } else if (exp->parsed()) {
            ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : read_experiment_config(config_path);
            for (const auto& kv : overrides) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
                apply_config_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
            }
            if (!exp_out.empty()) cfg.output = exp_out;
            if (threads > 0) cfg.threads = threads;
            if (cfg.output.empty()) throw ConfigError("no output path (use --out or output=)");
            const ResultTable t = run_experiment(cfg);
            SlopeOptions so;
            so.use_truth = use_truth;
            const double noise = t.rows.front().noise_variance;
            emit(t, cfg.output, noise, so);
            std::size_t failed_rows = 0;
            for (const auto& r : t.rows) {
                std::printf("%-5s n=%-5zu R=%d M=%d  test MSE %.6g (var %.3g)  ok %zu/%zu\n",
                            std::string(method_name(r.method)).c_str(), r.n, r.R, r.M, r.test_mse_mean,
                            r.test_mse_var, r.trials_ok, r.trials_ok + r.trials_failed);
                if (r.trials_failed) ++failed_rows;
            }
            std::cout << "wrote " << cfg.output.string() << "\n";
            if (failed_rows) return static_cast<int>(std::min<std::size_t>(failed_rows, 120));
        } else if (slo->parsed()) {
            const ResultTable t = read_csv(slope_csv);
            const double noise = slope_noise > 0.0 ? slope_noise : t.rows.front().noise_variance;
            SlopeOptions so;
            so.beta = beta;
            so.use_truth = slope_truth;
            for (auto m : {Method::Amnr, Method::Tgp, Method::Tlr, Method::Mean}) {
                try {
                    const auto s = slope_analysis(t, noise, m, so);
                    std::printf("%-5s slope %.4f  theoretical %.4f  (d=%g, %zu points)\n",
                                std::string(method_name(m)).c_str(), s.slope, s.theoretical, s.d, s.n.size());
                } catch (const PreconditionError&) {
                }
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kErrorExit;
    }
    return 0;
}
