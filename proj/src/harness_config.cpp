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

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "amnr/error.hpp"
#include "amnr/harness.hpp"

namespace amnr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s, char sep = ',') {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad(std::string_view key, std::string_view value) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') bad(key, v);
    return d;
}

template <class T>
T to_int(std::string_view key, std::string_view v) {
    T out{};
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) bad(key, v);
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad(key, v);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (methods.empty()) throw ConfigError("method list is empty");
    if (n_grid.empty()) throw ConfigError("n grid is empty");
    for (std::size_t i = 1; i < n_grid.size(); ++i)
        if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n grid must be strictly increasing");
    if (n_grid.front() < 4) throw ConfigError("every n must be >= 4");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (R_grid.empty() || M_grid.empty()) throw ConfigError("R and M grids must be nonempty");
    for (int r : R_grid)
        if (r < 1) throw ConfigError("R grid entries must be >= 1");
    for (int m : M_grid)
        if (m < 1) throw ConfigError("M grid entries must be >= 1");
    for (double h : bandwidth_grid)
        if (!(h > 0.0)) throw ConfigError("bandwidths must be positive");
    if (bandwidth_multipliers.empty()) throw ConfigError("bandwidth multipliers must be nonempty");
    for (double s : bandwidth_multipliers)
        if (!(s > 0.0)) throw ConfigError("bandwidth multipliers must be positive");
    if (Q < 1) throw ConfigError("Q must be >= 1");
    kernel.validate();
    if (source == DataSource::Dgp) dgp.validate();
    if (source == DataSource::RandomGraphs || source == DataSource::EmailLog) sir.validate();
    if (source == DataSource::File && dataset.empty()) throw ConfigError("file source needs a dataset path");
    if (source == DataSource::EmailLog && email_log.empty()) throw ConfigError("email_log source needs a log path");
    if (source == DataSource::File && !(noise_variance > 0.0)) {
        throw ConfigError("file source needs an explicit noise_variance");
    }
}

void apply_config_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
    const std::string_view v = trim(raw);
    if (key == "source") cfg.source = parse_source(v);
    else if (key == "dgp.kind") cfg.dgp.kind = parse_dgp_kind(v);
    else if (key == "dgp.dims") {
        cfg.dgp.dims.clear();
        for (auto p : split_list(v, v.find('x') != std::string_view::npos ? 'x' : ','))
            cfg.dgp.dims.push_back(to_int<std::size_t>(key, p));
    } else if (key == "dgp.rank") cfg.dgp.rank = to_int<int>(key, v);
    else if (key == "dgp.noise_variance") cfg.dgp.noise_variance = to_double(key, v);
    else if (key == "dgp.basis_terms") cfg.dgp.basis_terms = to_int<int>(key, v);
    else if (key == "sir.initial_infected") cfg.sir.initial_infected = to_int<std::size_t>(key, v);
    else if (key == "sir.infection_prob") cfg.sir.infection_prob = to_double(key, v);
    else if (key == "sir.epochs") cfg.sir.epochs = to_int<std::size_t>(key, v);
    else if (key == "sir.trials_per_graph") cfg.sir.trials_per_graph = to_int<std::size_t>(key, v);
    else if (key == "sir.transmission") {
        if (v == "per_neighbor") cfg.sir.transmission = Transmission::PerNeighbor;
        else if (v == "per_node") cfg.sir.transmission = Transmission::PerNode;
        else bad(key, v);
    } else if (key == "graph.vertices") cfg.graph_vertices = to_int<std::size_t>(key, v);
    else if (key == "graph.min_density") cfg.graph_min_density = to_double(key, v);
    else if (key == "graph.max_density") cfg.graph_max_density = to_double(key, v);
    else if (key == "email_log") cfg.email_log = std::string(v);
    else if (key == "top_n") cfg.top_n = to_int<std::size_t>(key, v);
    else if (key == "chunk_size") cfg.chunk_size = to_int<std::size_t>(key, v);
    else if (key == "dataset") cfg.dataset = std::string(v);
    else if (key == "methods") {
        cfg.methods.clear();
        for (auto p : split_list(v)) cfg.methods.push_back(parse_method(p));
    } else if (key == "n_grid") {
        cfg.n_grid.clear();
        for (auto p : split_list(v)) cfg.n_grid.push_back(to_int<std::size_t>(key, p));
    } else if (key == "test_fraction") cfg.test_fraction = to_double(key, v);
    else if (key == "trials") cfg.trials = to_int<int>(key, v);
    else if (key == "bandwidth_grid") {
        cfg.bandwidth_grid.clear();
        for (auto p : split_list(v)) cfg.bandwidth_grid.push_back(to_double(key, p));
    } else if (key == "bandwidth_multipliers") {
        cfg.bandwidth_multipliers.clear();
        for (auto p : split_list(v)) cfg.bandwidth_multipliers.push_back(to_double(key, p));
    } else if (key == "R_grid") {
        cfg.R_grid.clear();
        for (auto p : split_list(v)) cfg.R_grid.push_back(to_int<int>(key, p));
    } else if (key == "M_grid") {
        cfg.M_grid.clear();
        for (auto p : split_list(v)) cfg.M_grid.push_back(to_int<int>(key, p));
    } else if (key == "Q") cfg.Q = to_int<int>(key, v);
    else if (key == "kernel") cfg.kernel = KernelSpec::parse(v, cfg.kernel.bandwidth);
    else if (key == "likelihood") {
        if (v == "gaussian") cfg.likelihood = LikelihoodForm::Gaussian;
        else if (v == "literal") cfg.likelihood = LikelihoodForm::Literal;
        else bad(key, v);
    } else if (key == "estimator") {
        if (v == "importance") cfg.estimator = Estimator::Importance;
        else if (v == "collapsed") cfg.estimator = Estimator::Collapsed;
        else bad(key, v);
    } else if (key == "sign_flip") cfg.sign_flip = to_bool(key, v);
    else if (key == "tlr.ridge") cfg.tlr.ridge = to_double(key, v);
    else if (key == "tlr.max_sweeps") cfg.tlr.max_sweeps = to_int<int>(key, v);
    else if (key == "noise_variance") cfg.noise_variance = to_double(key, v);
    else if (key == "standardize") {
        if (v == "none" || v == "false") cfg.standardize = ExperimentConfig::Standardize::None;
        else if (v == "scale") cfg.standardize = ExperimentConfig::Standardize::Scale;
        else if (v == "center" || v == "true") cfg.standardize = ExperimentConfig::Standardize::Center;
        else bad(key, v);
    }
    else if (key == "seed") cfg.seed = to_int<std::uint64_t>(key, v);
    else if (key == "output") cfg.output = std::string(v);
    else if (key == "threads") cfg.threads = to_int<int>(key, v);
    else throw ConfigError("unknown config key: " + std::string(key));
}

ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view l = trim(line);
        if (l.empty() || l.front() == '#') continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        apply_config_setting(cfg, trim(l.substr(0, eq)), l.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_experiment_config(in);
}

std::string format_experiment_config(const ExperimentConfig& cfg) {
    std::ostringstream s;
    s.precision(17);
    std::vector<std::string> methods;
    for (auto m : cfg.methods) methods.emplace_back(method_name(m));
    s << "source=" << source_name(cfg.source) << "\n"
      << "dgp.kind=" << dgp_kind_name(cfg.dgp.kind) << "\n"
      << "dgp.dims=" << join(cfg.dgp.dims) << "\n"
      << "dgp.rank=" << cfg.dgp.rank << "\n"
      << "dgp.noise_variance=" << cfg.dgp.noise_variance << "\n"
      << "dgp.basis_terms=" << cfg.dgp.basis_terms << "\n"
      << "sir.initial_infected=" << cfg.sir.initial_infected << "\n"
      << "sir.infection_prob=" << cfg.sir.infection_prob << "\n"
      << "sir.epochs=" << cfg.sir.epochs << "\n"
      << "sir.trials_per_graph=" << cfg.sir.trials_per_graph << "\n"
      << "sir.transmission=" << (cfg.sir.transmission == Transmission::PerNode ? "per_node" : "per_neighbor") << "\n"
      << "graph.vertices=" << cfg.graph_vertices << "\n"
      << "graph.min_density=" << cfg.graph_min_density << "\n"
      << "graph.max_density=" << cfg.graph_max_density << "\n";
    if (!cfg.email_log.empty()) s << "email_log=" << cfg.email_log.string() << "\n";
    s << "top_n=" << cfg.top_n << "\n" << "chunk_size=" << cfg.chunk_size << "\n";
    if (!cfg.dataset.empty()) s << "dataset=" << cfg.dataset.string() << "\n";
    s << "methods=" << join(methods) << "\n"
      << "n_grid=" << join(cfg.n_grid) << "\n"
      << "test_fraction=" << cfg.test_fraction << "\n"
      << "trials=" << cfg.trials << "\n";
    if (!cfg.bandwidth_grid.empty()) s << "bandwidth_grid=" << join(cfg.bandwidth_grid) << "\n";
    s << "bandwidth_multipliers=" << join(cfg.bandwidth_multipliers) << "\n";
    s << "R_grid=" << join(cfg.R_grid) << "\n"
      << "M_grid=" << join(cfg.M_grid) << "\n"
      << "Q=" << cfg.Q << "\n"
      << "kernel=" << cfg.kernel.family_name() << "\n"
      << "likelihood=" << (cfg.likelihood == LikelihoodForm::Literal ? "literal" : "gaussian") << "\n"
      << "estimator=" << (cfg.estimator == Estimator::Collapsed ? "collapsed" : "importance") << "\n"
      << "sign_flip=" << (cfg.sign_flip ? "true" : "false") << "\n"
      << "tlr.ridge=" << cfg.tlr.ridge << "\n"
      << "tlr.max_sweeps=" << cfg.tlr.max_sweeps << "\n"
      << "noise_variance=" << cfg.noise_variance << "\n"
      << "standardize="
      << (cfg.standardize == ExperimentConfig::Standardize::None    ? "none"
          : cfg.standardize == ExperimentConfig::Standardize::Scale ? "scale"
                                                                    : "center")
      << "\n"
      << "seed=" << cfg.seed << "\n";
    if (!cfg.output.empty()) s << "output=" << cfg.output.string() << "\n";
    return s.str();
}

}  // namespace amnr
