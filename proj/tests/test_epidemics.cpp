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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "amnr/diagnostics.hpp"
#include "amnr/epidemics.hpp"
#include "amnr/error.hpp"

using namespace amnr;

namespace {

Graph graph_on(std::size_t v, std::initializer_list<std::pair<std::size_t, std::size_t>> edges) {
    Graph g(v);
    for (auto [a, b] : edges) g.add_edge(a, b);
    return g;
}

SirConfig sir(std::size_t initial, double p, std::size_t epochs) {
    SirConfig c;
    c.initial_infected = initial;
    c.infection_prob = p;
    c.epochs = epochs;
    return c;
}

}  // namespace

TEST_CASE("graph invariants") {
    CHECK_THROWS_AS(Graph::from_adjacency(2, {0, 1, 0, 0}), ShapeError);
    CHECK_THROWS_AS(Graph::from_adjacency(2, {1, 0, 0, 0}), ShapeError);
    CHECK_THROWS_AS(Graph::from_adjacency(2, {0, 2, 2, 0}), ShapeError);
    Graph g = Graph::from_adjacency(3, {0, 1, 0, 1, 0, 1, 0, 1, 0});
    CHECK(g == path_graph(3));
    CHECK(g.edge_count() == 2);
    CHECK(Graph::from_tensor(g.to_tensor()) == g);
    Graph s = star_graph(4);
    CHECK(s.vertices() == 5);
    CHECK(s.neighbors()[0].size() == 4);
    Graph loop(3);
    loop.add_edge(1, 1);
    CHECK(loop.edge_count() == 0);
}

TEST_CASE("sir config validation") {
    CHECK_THROWS_AS(sir(1, 1.5, 1).validate(), ConfigError);
    CHECK_THROWS_AS(sir(1, -0.1, 1).validate(), ConfigError);
    CHECK_THROWS_AS(sir_simulate(path_graph(3), sir(4, 0.1, 1)), ConfigError);
}

TEST_CASE("p = 0 leaves only the initial infections") {
    auto graphs = random_graph_ensemble(1000, 30, 5);
    for (std::size_t i = 0; i < graphs.size(); ++i) CHECK(sir_simulate(graphs[i], sir(10, 0.0, 10), i) == 10);
}

TEST_CASE("p = 1 floods connected graphs") {
    for (std::size_t v : {2u, 7u, 25u}) {
        for (std::size_t e : {1u, 3u}) {
            CHECK(sir_simulate(path_graph(v), sir(1, 1.0, e), v) == v);
            for (auto t : {Transmission::PerNeighbor, Transmission::PerNode}) {
                SirConfig c = sir(1, 1.0, e);
                c.transmission = t;
                CHECK(sir_simulate(star_graph(v), c, 1) == v + 1);
            }
        }
    }
    std::uint32_t hub[] = {0};
    CHECK(sir_simulate_from(star_graph(9), sir(1, 1.0, 2), hub) == 10);
}

TEST_CASE("single-edge outcome matches 1 + p") {
    const int trials = 100000;
    const double p = 0.3;
    Graph g = path_graph(2);
    double sum = 0, sq = 0;
    for (int t = 0; t < trials; ++t) {
        double y = double(sir_simulate(g, sir(1, p, 1), std::uint64_t(t)));
        sum += y;
        sq += y * y;
    }
    double mean = sum / trials;
    double se = std::sqrt((sq / trials - mean * mean) / trials);
    CHECK(std::abs(mean - (1 + p)) < 3 * se);
}

TEST_CASE("outcome is monotone in p under common random numbers") {
    auto graphs = random_graph_ensemble(50, 40, 9);
    const double grid[] = {0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        std::size_t prev = 0;
        for (double p : grid) {
            SirConfig c = sir(3, p, 3);
            c.seed = 17;
            std::size_t y = sir_simulate(graphs[i], c, i);
            CHECK(y >= prev);
            CHECK(y >= 3);
            CHECK(y <= 40);
            prev = y;
        }
    }
}

TEST_CASE("sir is deterministic per stream") {
    Graph g = random_graph_ensemble(1, 50, 3)[0];
    SirConfig c = sir(5, 0.2, 4);
    CHECK(sir_simulate(g, c, 3) == sir_simulate(g, c, 3));
}

TEST_CASE("email fixture yields the hand-enumerated graphs") {
    EmailLog log = read_email_log(AMNR_TEST_DATA_DIR "/email_fixture.tsv");
    REQUIRE(log.size() == 6);
    IngestResult r = ingest_email_log(log, 3, 3);
    // frequencies: b 5 (one self-addressed record counts twice), a 4, c 3
    CHECK(r.nodes == std::vector<std::string>{"b", "a", "c"});
    REQUIRE(r.graphs.size() == 2);
    // records t=1..3: a-b, b-c, a-c; t=4..6: c-a, b-b, a-b
    CHECK(r.graphs[0] == graph_on(3, {{1, 0}, {0, 2}, {1, 2}}));
    CHECK(r.graphs[1] == graph_on(3, {{2, 1}, {1, 0}}));

    for (int run = 0; run < 3; ++run) {
        IngestResult again = ingest_email_log(log, 3, 3);
        CHECK(again.nodes == r.nodes);
        CHECK(again.graphs == r.graphs);
    }
}

TEST_CASE("ingestion edge cases") {
    std::istringstream ties("1\tc\td\n2\ta\tb\n3\tb\ta\n4\td\tc\n5\ta\td\n");
    EmailLog log = parse_email_log(ties);
    // every address appears 2 or 3 times; a and d lead, then b, c tie at 2
    IngestResult r = ingest_email_log(log, 3, 1);
    CHECK(r.nodes == std::vector<std::string>{"a", "d", "b"});
    CHECK(r.graphs.size() == 3);  // records touching c are dropped

    std::istringstream self("1\ta\ta\n2\tb\tb\n3\ta\ta\n4\tb\tb\n");
    IngestResult s = ingest_email_log(parse_email_log(self), 2, 2);
    REQUIRE(s.graphs.size() == 2);
    for (const auto& g : s.graphs) CHECK(g.edge_count() == 0);

    CHECK(ingest_email_log(log, 2, 100).graphs.empty());
    CHECK(ingest_email_log({}, 2, 1).graphs.empty());

    WarningCapture w;
    IngestResult all = ingest_email_log(log, 10, 2);
    CHECK(all.nodes.size() == 4);
    CHECK(w.contains("distinct"));

    std::istringstream bad("1\ta\n");
    CHECK_THROWS_AS(parse_email_log(bad), IoError);
}

TEST_CASE("epidemic datasets") {
    std::vector<Graph> graphs{star_graph(9), Graph(10), path_graph(10)};
    SirConfig none = sir(2, 0.0, 5);
    EpidemicData d = build_epidemic_dataset(graphs, none);
    REQUIRE(d.data.size() == 3);
    for (double y : d.data.responses) CHECK(y == 2.0);
    CHECK(d.noise_variance == 0.0);
    CHECK(d.data.inputs[0] == graphs[0].to_tensor());

    EpidemicData edgeless = build_epidemic_dataset({Graph(12), Graph(12)}, sir(4, 0.5, 5));
    for (double y : edgeless.data.responses) CHECK(y == 4.0);

    EpidemicData noisy = build_epidemic_dataset(random_graph_ensemble(5, 30, 2), sir(3, 0.2, 3));
    CHECK(noisy.noise_variance > 0);
    CHECK(noisy.trial_variance.size() == 5);
}
