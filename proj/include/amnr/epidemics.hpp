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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "amnr/dataset.hpp"
#include "amnr/tensor.hpp"

namespace amnr {

/// Undirected simple graph as a dense 0/1 adjacency matrix.
class Graph {
public:
    Graph() = default;
    explicit Graph(std::size_t vertices);
    /// Throws ShapeError unless the matrix is square, symmetric, 0/1 with a
    /// zero diagonal.
    static Graph from_adjacency(std::size_t vertices, std::vector<std::uint8_t> adjacency);
    static Graph from_tensor(const Tensor& x);

    std::size_t vertices() const noexcept { return v_; }
    bool edge(std::size_t a, std::size_t b) const { return adj_[a * v_ + b] != 0; }
    /// Self-loops are ignored.
    void add_edge(std::size_t a, std::size_t b);
    std::size_t edge_count() const;
    std::vector<std::vector<std::uint32_t>> neighbors() const;
    Tensor to_tensor() const;

    bool operator==(const Graph&) const = default;

private:
    std::size_t v_ = 0;
    std::vector<std::uint8_t> adj_;
};

Graph path_graph(std::size_t vertices);
Graph star_graph(std::size_t leaves);

enum class Transmission {
    PerNeighbor,  ///< each infected neighbour transmits independently with probability p
    PerNode,      ///< a susceptible node with any infected neighbour flips once with probability p
};

struct SirConfig {
    std::size_t initial_infected = 10;
    double infection_prob = 0.01;
    std::size_t epochs = 10;  ///< infectious period of each node, in epochs
    std::size_t trials_per_graph = 10;
    std::uint64_t seed = 1;
    Transmission transmission = Transmission::PerNeighbor;

    void validate() const;
};

/// One SIR run; returns the ever-infected count. `stream` selects the
/// random stream (trial index). Under PerNeighbor, the draw for a given
/// (source, target, infection age) is shared across p, so raising p never
/// lowers the outcome for a fixed stream.
std::size_t sir_simulate(const Graph& g, const SirConfig& cfg, std::uint64_t stream = 0);

/// Same, but with the initially infected set given explicitly.
std::size_t sir_simulate_from(const Graph& g, const SirConfig& cfg, std::span<const std::uint32_t> initial,
                              std::uint64_t stream = 0);

struct EmailRecord {
    std::int64_t timestamp = 0;
    std::string sender;
    std::string recipient;
};
using EmailLog = std::vector<EmailRecord>;

/// TSV with columns timestamp, sender, recipient. Blank lines and lines
/// starting with '#' are skipped.
EmailLog parse_email_log(std::istream& in);
EmailLog read_email_log(const std::filesystem::path& path);

struct IngestResult {
    std::vector<std::string> nodes;  ///< node i's address, most frequent first
    std::vector<Graph> graphs;
};

IngestResult ingest_email_log(const EmailLog& log, std::size_t top_n, std::size_t chunk_size);

struct EpidemicData {
    Dataset data;
    /// Noise variance of the averaged label, from the within-graph trial
    /// variance divided by the trial count, averaged over graphs.
    double noise_variance = 0.0;
    std::vector<double> trial_variance;
};

EpidemicData build_epidemic_dataset(const std::vector<Graph>& graphs, const SirConfig& cfg);

/// Erdos-Renyi graphs whose edge densities are drawn uniformly from
/// [min_density, max_density], one density per graph.
std::vector<Graph> random_graph_ensemble(std::size_t count, std::size_t vertices, std::uint64_t seed,
                                         double min_density = 0.04, double max_density = 0.2);

}  // namespace amnr
