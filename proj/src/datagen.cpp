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

#include "amnr/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "amnr/error.hpp"
#include "amnr/rng.hpp"

namespace amnr {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

MatrixXd random_unit_columns(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    MatrixXd m(rows, cols);
    for (Index c = 0; c < cols; ++c) {
        double norm = 0.0;
        do {
            for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
            norm = m.col(c).norm();
        } while (norm == 0.0);
        m.col(c) /= norm;
    }
    return m;
}

// Exact rank-R* input; factor signs canonicalized so that responses computed
// from the generating form are a function of the tensor's canonical form.
CpForm random_form(const DgpSpec& spec, Rng& rng, bool unit_scales) {
    CpForm f;
    const auto R = static_cast<std::size_t>(spec.rank);
    std::normal_distribution<double> normal;
    f.lambdas.resize(R);
    for (std::size_t r = 0; r < R; ++r) {
        f.lambdas[r] = unit_scales ? 1.0 : std::abs(normal(rng)) + static_cast<double>(R - r);
    }
    std::sort(f.lambdas.begin(), f.lambdas.end(), std::greater<>());
    for (auto d : spec.dims) f.factors.push_back(random_unit_columns(static_cast<Index>(d), static_cast<Index>(R), rng));
    return canonicalize(std::move(f));
}

void add_noise(Dataset& d, double noise_variance, Rng& rng) {
    std::normal_distribution<double> normal(0.0, std::sqrt(noise_variance));
    d.responses.resize(d.truth.size());
    for (std::size_t i = 0; i < d.truth.size(); ++i) {
        d.responses[i] = d.truth[i] + (noise_variance > 0.0 ? normal(rng) : 0.0);
    }
}

double project(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += 0.1 * static_cast<double>(j + 1) * x[j];
    return s;
}

GeneratedData low_rank_family(const DgpSpec& spec, std::size_t n, DgpKind expected, bool unit_scales,
                              double (*truth)(const CpForm&, int)) {
    spec.validate();
    if (spec.kind != expected) throw PreconditionError("generator called with a different dgp kind");
    Rng inputs = make_rng(spec.seed, {label("inputs")});
    Rng noise = make_rng(spec.seed, {label("noise")});
    GeneratedData g;
    g.data.dims = spec.dims;
    for (std::size_t i = 0; i < n; ++i) {
        CpForm f = random_form(spec, inputs, unit_scales);
        g.data.inputs.push_back(reconstruct(f, spec.dims));
        g.data.truth.push_back(truth(f, spec.basis_terms));
        g.generators.push_back(std::move(f));
    }
    add_noise(g.data, spec.noise_variance, noise);
    return g;
}

}  // namespace

DgpKind parse_dgp_kind(std::string_view name) {
    if (name == "lowrank" || name == "LowRankLogistic") return DgpKind::LowRankLogistic;
    if (name == "fullrank" || name == "FullRankNorm") return DgpKind::FullRankNorm;
    if (name == "sobolev" || name == "SobolevProduct") return DgpKind::SobolevProduct;
    throw ConfigError("unknown dgp kind: " + std::string(name));
}

std::string_view dgp_kind_name(DgpKind kind) {
    switch (kind) {
        case DgpKind::LowRankLogistic: return "lowrank";
        case DgpKind::FullRankNorm: return "fullrank";
        case DgpKind::SobolevProduct: return "sobolev";
    }
    return "lowrank";
}

void DgpSpec::validate() const {
    validate_dims(dims);
    if (rank < 1) throw ConfigError("dgp rank must be >= 1");
    if (!(noise_variance >= 0.0)) throw ConfigError("dgp noise variance must be >= 0");
    if (basis_terms < 1) throw ConfigError("dgp basis truncation must be >= 1");
}

std::vector<double> projection_vector(std::size_t len) {
    std::vector<double> g(len);
    for (std::size_t j = 0; j < len; ++j) g[j] = 0.1 * static_cast<double>(j + 1);
    return g;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double low_rank_truth(const CpForm& form) {
    double total = 0.0;
    for (std::size_t r = 0; r < form.rank(); ++r) {
        double prod = form.lambdas[r];
        for (std::size_t k = 0; k < form.order(); ++k) {
            const auto x = form.factor(r, k);
            prod *= logistic(project(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))));
        }
        total += prod;
    }
    return total;
}

double full_rank_truth(const Tensor& x) {
    const double z = x.frobenius_norm() / static_cast<double>(x.size());
    return std::pow(logistic(z), static_cast<double>(x.order()));
}

double sobolev_basis(int l, double z) {
    return std::numbers::sqrt2 * std::cos((static_cast<double>(l) - 0.5) * std::numbers::pi * z);
}

double sobolev_coefficient(int l) {
    const double dl = static_cast<double>(l);
    return std::pow(dl, -1.5) * std::sin(dl);
}

double sobolev_local(double z, int basis_terms) {
    double s = 0.0;
    for (int l = 1; l <= basis_terms; ++l) s += sobolev_coefficient(l) * sobolev_basis(l, z);
    return s;
}

double sobolev_truth(const CpForm& form, int basis_terms) {
    double total = 0.0;
    for (std::size_t r = 0; r < form.rank(); ++r) {
        double prod = 1.0;
        for (std::size_t k = 0; k < form.order(); ++k) {
            const auto x = form.factor(r, k);
            prod *= sobolev_local(project(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))), basis_terms);
        }
        total += prod;
    }
    return total;
}

GeneratedData gen_low_rank(const DgpSpec& spec, std::size_t n) {
    return low_rank_family(spec, n, DgpKind::LowRankLogistic, false,
                           [](const CpForm& f, int) { return low_rank_truth(f); });
}

GeneratedData gen_sobolev(const DgpSpec& spec, std::size_t n) {
    return low_rank_family(spec, n, DgpKind::SobolevProduct, true, sobolev_truth);
}

GeneratedData gen_full_rank(const DgpSpec& spec, std::size_t n) {
    spec.validate();
    if (spec.kind != DgpKind::FullRankNorm) throw PreconditionError("generator called with a different dgp kind");
    Rng inputs = make_rng(spec.seed, {label("inputs")});
    Rng noise = make_rng(spec.seed, {label("noise")});
    std::normal_distribution<double> normal;
    GeneratedData g;
    g.data.dims = spec.dims;
    const std::size_t count = element_count(spec.dims);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(count);
        for (auto& e : v) e = normal(inputs);
        Tensor x(spec.dims, std::move(v));
        g.data.truth.push_back(full_rank_truth(x));
        g.data.inputs.push_back(std::move(x));
    }
    add_noise(g.data, spec.noise_variance, noise);
    return g;
}

GeneratedData generate(const DgpSpec& spec, std::size_t n) {
    switch (spec.kind) {
        case DgpKind::LowRankLogistic: return gen_low_rank(spec, n);
        case DgpKind::FullRankNorm: return gen_full_rank(spec, n);
        case DgpKind::SobolevProduct: return gen_sobolev(spec, n);
    }
    throw ConfigError("unknown dgp kind");
}

Dims sobolev_setting_dims(int setting) {
    switch (setting) {
        case 1: return {10, 10, 10};
        case 2: return {3, 3, 3};
        case 3: return {10, 3, 3};
        default: throw ConfigError("Sobolev setting must be 1, 2 or 3");
    }
}

}  // namespace amnr
