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

#include "amnr/epidemics.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "amnr/diagnostics.hpp"
#include "amnr/error.hpp"
#include "amnr/rng.hpp"

namespace amnr {

Graph::Graph(std::size_t vertices) : v_(vertices), adj_(vertices * vertices, 0) {}

Graph Graph::from_adjacency(std::size_t vertices, std::vector<std::uint8_t> adjacency) {
    if (adjacency.size() != vertices * vertices) throw ShapeError("adjacency matrix is not V x V");
    for (std::size_t a = 0; a < vertices; ++a) {
        if (adjacency[a * vertices + a] != 0) throw ShapeError("adjacency matrix has a self-loop");
        for (std::size_t b = 0; b < vertices; ++b) {
            const auto e = adjacency[a * vertices + b];
            if (e > 1) throw ShapeError("adjacency entries must be 0 or 1");
            if (e != adjacency[b * vertices + a]) throw ShapeError("adjacency matrix is not symmetric");
        }
    }
    Graph g;
    g.v_ = vertices;
    g.adj_ = std::move(adjacency);
    return g;
}

Graph Graph::from_tensor(const Tensor& x) {
    if (x.order() != 2 || x.dims()[0] != x.dims()[1]) throw ShapeError("graph tensor must be square and 2-order");
    const std::size_t v = x.dims()[0];
    std::vector<std::uint8_t> adj(v * v);
    for (std::size_t i = 0; i < v * v; ++i) {
        const double e = x.data()[i];
        if (e != 0.0 && e != 1.0) throw ShapeError("graph tensor entries must be 0 or 1");
        adj[i] = e == 1.0 ? 1 : 0;
    }
    return from_adjacency(v, std::move(adj));
}

void Graph::add_edge(std::size_t a, std::size_t b) {
    if (a >= v_ || b >= v_) throw ShapeError("edge endpoint out of range");
    if (a == b) return;
    adj_[a * v_ + b] = 1;
    adj_[b * v_ + a] = 1;
}

std::size_t Graph::edge_count() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1})) / 2;
}

std::vector<std::vector<std::uint32_t>> Graph::neighbors() const {
    std::vector<std::vector<std::uint32_t>> nb(v_);
    for (std::size_t a = 0; a < v_; ++a)
        for (std::size_t b = 0; b < v_; ++b)
            if (adj_[a * v_ + b]) nb[a].push_back(static_cast<std::uint32_t>(b));
    return nb;
}

Tensor Graph::to_tensor() const {
    std::vector<double> v(adj_.begin(), adj_.end());
    return Tensor({v_, v_}, std::move(v));
}

Graph path_graph(std::size_t vertices) {
    Graph g(vertices);
    for (std::size_t i = 1; i < vertices; ++i) g.add_edge(i - 1, i);
    return g;
}

Graph star_graph(std::size_t leaves) {
    Graph g(leaves + 1);
    for (std::size_t i = 1; i <= leaves; ++i) g.add_edge(0, i);
    return g;
}

void SirConfig::validate() const {
    if (initial_infected < 1) throw ConfigError("initial_infected must be >= 1");
    if (!(infection_prob >= 0.0 && infection_prob <= 1.0)) throw ConfigError("infection_prob must lie in [0, 1]");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (trials_per_graph < 1) throw ConfigError("trials_per_graph must be >= 1");
}

std::size_t sir_simulate_from(const Graph& g, const SirConfig& cfg, std::span<const std::uint32_t> initial,
                              std::uint64_t stream) {
    cfg.validate();
    const std::size_t V = g.vertices();
    constexpr std::int64_t kNever = -1;
    std::vector<std::int64_t> infected_at(V, kNever);
    std::vector<std::uint32_t> active;
    for (auto v : initial) {
        if (v >= V) throw ShapeError("initial node out of range");
        if (infected_at[v] != kNever) throw PreconditionError("duplicate initial node");
        infected_at[v] = 0;
        active.push_back(v);
    }
    const auto nb = g.neighbors();
    const std::uint64_t key = derive_seed(cfg.seed, {label("sir-transmit"), stream});
    const double p = cfg.infection_prob;
    const auto epochs = static_cast<std::int64_t>(cfg.epochs);
    std::size_t total = active.size();
    std::vector<std::uint32_t> fresh;
    for (std::int64_t t = 1; !active.empty(); ++t) {
        fresh.clear();
        if (cfg.transmission == Transmission::PerNeighbor) {
            for (auto u : active) {
                const auto age = static_cast<std::uint64_t>(t - infected_at[u] - 1);
                for (auto v : nb[u]) {
                    if (infected_at[v] != kNever) continue;
                    if (counter_uniform(key, u, v, age) < p) fresh.push_back(v);
                }
            }
        } else {
            for (auto u : active)
                for (auto v : nb[u])
                    if (infected_at[v] == kNever) fresh.push_back(v);
            std::sort(fresh.begin(), fresh.end());
            fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
            std::erase_if(fresh, [&](std::uint32_t v) {
                return !(counter_uniform(key, v, static_cast<std::uint64_t>(t), 0) < p);
            });
        }
        // Infected at s means infectious during epochs s+1 .. s+epochs.
        std::erase_if(active, [&](std::uint32_t u) { return t - infected_at[u] >= epochs; });
        for (auto v : fresh) {
            if (infected_at[v] != kNever) continue;  // reached twice this epoch
            infected_at[v] = t;
            active.push_back(v);
            ++total;
        }
    }
    return total;
}

std::size_t sir_simulate(const Graph& g, const SirConfig& cfg, std::uint64_t stream) {
    cfg.validate();
    const std::size_t V = g.vertices();
    if (cfg.initial_infected > V) {
        throw ConfigError("initial_infected (" + std::to_string(cfg.initial_infected) + ") exceeds node count (" +
                          std::to_string(V) + ")");
    }
    Rng rng = make_rng(cfg.seed, {label("sir-initial"), stream});
    std::vector<std::uint32_t> order(V);
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t i = 0; i < cfg.initial_infected; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, V - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    order.resize(cfg.initial_infected);
    return sir_simulate_from(g, cfg, order, stream);
}

EmailLog parse_email_log(std::istream& in) {
    EmailLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, '\t')) cols.push_back(col);
        if (cols.size() != 3 || cols[1].empty() || cols[2].empty()) {
            throw IoError("email log line " + std::to_string(lineno) + ": expected timestamp<TAB>sender<TAB>recipient");
        }
        EmailRecord r;
        try {
            std::size_t used = 0;
            r.timestamp = std::stoll(cols[0], &used);
            if (used != cols[0].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IoError("email log line " + std::to_string(lineno) + ": bad timestamp '" + cols[0] + "'");
        }
        r.sender = std::move(cols[1]);
        r.recipient = std::move(cols[2]);
        log.push_back(std::move(r));
    }
    return log;
}

EmailLog read_email_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open email log " + path.string());
    return parse_email_log(in);
}

IngestResult ingest_email_log(const EmailLog& log, std::size_t top_n, std::size_t chunk_size) {
    if (top_n < 2) throw PreconditionError("top_n must be >= 2");
    if (chunk_size < 1) throw PreconditionError("chunk_size must be >= 1");
    IngestResult out;
    if (log.empty()) return out;

    std::map<std::string, std::size_t> freq;  // ordered, so ties resolve lexicographically
    for (const auto& r : log) {
        ++freq[r.sender];
        ++freq[r.recipient];
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() < top_n) {
        warn("email log has only " + std::to_string(ranked.size()) + " distinct addresses; keeping all of them");
    } else {
        ranked.resize(top_n);
    }
    std::unordered_map<std::string, std::uint32_t> index;
    for (const auto& [addr, count] : ranked) {
        index.emplace(addr, static_cast<std::uint32_t>(out.nodes.size()));
        out.nodes.push_back(addr);
    }

    std::vector<const EmailRecord*> kept;
    for (const auto& r : log)
        if (index.count(r.sender) && index.count(r.recipient)) kept.push_back(&r);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const EmailRecord* a, const EmailRecord* b) { return a->timestamp < b->timestamp; });

    const std::size_t chunks = kept.size() / chunk_size;
    for (std::size_t c = 0; c < chunks; ++c) {
        Graph g(out.nodes.size());
        for (std::size_t j = c * chunk_size; j < (c + 1) * chunk_size; ++j) {
            g.add_edge(index.at(kept[j]->sender), index.at(kept[j]->recipient));
        }
        out.graphs.push_back(std::move(g));
    }
    return out;
}

EpidemicData build_epidemic_dataset(const std::vector<Graph>& graphs, const SirConfig& cfg) {
    if (graphs.empty()) throw PreconditionError("no graphs to label");
    cfg.validate();
    EpidemicData out;
    const std::size_t V = graphs.front().vertices();
    out.data.dims = {V, V};
    const auto T = static_cast<double>(cfg.trials_per_graph);
    double var_sum = 0.0;
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        if (graphs[i].vertices() != V) throw ShapeError("graphs must share one node count");
        SirConfig local = cfg;
        local.seed = derive_seed(cfg.seed, {label("graph"), i});
        double sum = 0.0, sq = 0.0;
        for (std::size_t t = 0; t < cfg.trials_per_graph; ++t) {
            const auto y = static_cast<double>(sir_simulate(graphs[i], local, t));
            sum += y;
            sq += y * y;
        }
        const double mean = sum / T;
        const double var = cfg.trials_per_graph > 1 ? std::max(0.0, (sq - T * mean * mean) / (T - 1.0)) : 0.0;
        out.trial_variance.push_back(var);
        var_sum += var / T;
        out.data.inputs.push_back(graphs[i].to_tensor());
        out.data.responses.push_back(mean);
    }
    out.noise_variance = var_sum / static_cast<double>(graphs.size());
    return out;
}

std::vector<Graph> random_graph_ensemble(std::size_t count, std::size_t vertices, std::uint64_t seed,
                                         double min_density, double max_density) {
    if (!(0.0 <= min_density && min_density <= max_density && max_density <= 1.0)) {
        throw ConfigError("graph densities must satisfy 0 <= min <= max <= 1");
    }
    std::vector<Graph> out;
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = make_rng(seed, {label("graph-ensemble"), i});
        std::uniform_real_distribution<double> unit;
        const double density = min_density + (max_density - min_density) * unit(rng);
        Graph g(vertices);
        for (std::size_t a = 0; a < vertices; ++a)
            for (std::size_t b = a + 1; b < vertices; ++b)
                if (unit(rng) < density) g.add_edge(a, b);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace amnr
