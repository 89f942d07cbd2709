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

#include "amnr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amnr/error.hpp"
#include "amnr/simd.hpp"

namespace amnr {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

std::span<const double> column(const MatrixXd& m, Index c) {
    return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

// Largest group of points closer than `eps` to each other (single linkage).
std::vector<std::size_t> duplicate_cluster(const MatrixXd& points, double eps) {
    const Index p = points.cols();
    std::vector<std::size_t> parent(static_cast<std::size_t>(p));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) {
            if (simd::squared_distance(column(points, i), column(points, j)) <= eps * eps) {
                parent[find(static_cast<std::size_t>(i))] = find(static_cast<std::size_t>(j));
            }
        }
    }
    std::vector<std::size_t> count(static_cast<std::size_t>(p), 0);
    for (Index i = 0; i < p; ++i) ++count[find(static_cast<std::size_t>(i))];
    const auto root = static_cast<std::size_t>(std::max_element(count.begin(), count.end()) - count.begin());
    std::vector<std::size_t> members;
    for (Index i = 0; i < p; ++i) {
        if (find(static_cast<std::size_t>(i)) == root) members.push_back(static_cast<std::size_t>(i));
    }
    return members;
}

}  // namespace

void KernelSpec::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw PreconditionError("kernel bandwidth must be positive and finite");
    }
}

std::string KernelSpec::family_name() const {
    if (family == KernelFamily::Rbf) return "rbf";
    switch (nu) {
        case MaternNu::Half: return "matern12";
        case MaternNu::ThreeHalves: return "matern32";
        case MaternNu::FiveHalves: return "matern52";
    }
    return "matern32";
}

KernelSpec KernelSpec::parse(std::string_view family, double bandwidth) {
    KernelSpec s;
    s.bandwidth = bandwidth;
    if (family == "rbf") {
        s.family = KernelFamily::Rbf;
    } else if (family == "matern12") {
        s.nu = MaternNu::Half;
    } else if (family == "matern32") {
        s.nu = MaternNu::ThreeHalves;
    } else if (family == "matern52") {
        s.nu = MaternNu::FiveHalves;
    } else {
        throw ConfigError("unknown kernel family: " + std::string(family));
    }
    return s;
}

double kernel_from_squared_distance(const KernelSpec& spec, double d2) {
    const double h = spec.bandwidth;
    if (spec.family == KernelFamily::Rbf) return std::exp(-d2 / (2.0 * h * h));
    const double r = std::sqrt(d2) / h;
    switch (spec.nu) {
        case MaternNu::Half: return std::exp(-r);
        case MaternNu::ThreeHalves: {
            const double s = std::sqrt(3.0) * r;
            return (1.0 + s) * std::exp(-s);
        }
        case MaternNu::FiveHalves: {
            const double s = std::sqrt(5.0) * r;
            return (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
    }
    return 0.0;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw ShapeError("kernel_eval: vectors differ in length");
    return kernel_from_squared_distance(spec, simd::squared_distance(u, v));
}

MatrixXd kernel_matrix(const KernelSpec& spec, const MatrixXd& points) {
    spec.validate();
    const Index p = points.cols();
    MatrixXd k(p, p);
    for (Index j = 0; j < p; ++j) {
        k(j, j) = 1.0;
        const auto pj = column(points, j);
        for (Index i = j + 1; i < p; ++i) {
            const double v = kernel_from_squared_distance(spec, simd::squared_distance(column(points, i), pj));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

MatrixXd cross_kernel(const KernelSpec& spec, const MatrixXd& a, const MatrixXd& b) {
    spec.validate();
    if (a.rows() != b.rows()) throw ShapeError("cross_kernel: point dimensions differ");
    MatrixXd k(a.cols(), b.cols());
    for (Index j = 0; j < b.cols(); ++j) {
        const auto bj = column(b, j);
        for (Index i = 0; i < a.cols(); ++i) {
            k(i, j) = kernel_from_squared_distance(spec, simd::squared_distance(column(a, i), bj));
        }
    }
    return k;
}

GramMatrix factorize(MatrixXd matrix, const JitterPolicy& policy, double extra_diagonal, const MatrixXd* points) {
    if (matrix.rows() != matrix.cols()) throw ShapeError("factorize: matrix must be square");
    if (extra_diagonal < 0.0) throw PreconditionError("factorize: diagonal shift must be nonnegative");
    GramMatrix g;
    g.extra_diagonal = extra_diagonal;
    const MatrixXd base = matrix;
    for (double jitter = policy.initial; jitter <= policy.cap * (1.0 + 1e-12); jitter *= policy.factor) {
        g.matrix = base;
        g.matrix.diagonal().array() += extra_diagonal + jitter;
        g.cholesky.compute(g.matrix);
        if (g.cholesky.info() == Eigen::Success && g.cholesky.matrixLLT().diagonal().minCoeff() > 0.0) {
            g.jitter = jitter;
            return g;
        }
    }
    std::vector<std::size_t> cluster;
    std::string names;
    if (points != nullptr && points->cols() > 0) {
        cluster = duplicate_cluster(*points, 1e-6);
        for (std::size_t i = 0; i < cluster.size() && i < 16; ++i) names += (i ? "," : "") + std::to_string(cluster[i]);
        if (cluster.size() > 16) names += ",...";
    }
    throw IllConditionedError("Gram matrix not positive definite at jitter cap " + std::to_string(policy.cap) +
                                  (names.empty() ? std::string() : "; near-duplicate points {" + names + "}"),
                              std::move(cluster));
}

GramMatrix gram(const KernelSpec& spec, const MatrixXd& points, const JitterPolicy& policy, double extra_diagonal) {
    return factorize(kernel_matrix(spec, points), policy, extra_diagonal, &points);
}

double median_pairwise_distance(const MatrixXd& points) {
    const Index p = points.cols();
    if (p < 2) throw PreconditionError("median pairwise distance needs at least two points");
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
    for (Index i = 0; i < p; ++i) {
        for (Index j = i + 1; j < p; ++j) d.push_back(std::sqrt(simd::squared_distance(column(points, i), column(points, j))));
    }
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
    const double upper = d[mid];
    if (d.size() % 2 == 1) return upper;
    const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<double> bandwidth_grid(const MatrixXd& points) {
    static constexpr double kDefault[] = {0.25, 0.5, 1.0, 2.0, 4.0};
    return bandwidth_grid(points, kDefault);
}

std::vector<double> bandwidth_grid(const MatrixXd& points, std::span<const double> multipliers) {
    if (multipliers.empty()) throw PreconditionError("bandwidth_grid: no multipliers");
    const double m = median_pairwise_distance(points);
    if (!(m > 1e-12)) return {0.1, 0.5, 1.0};
    std::vector<double> grid;
    for (double s : multipliers) {
        if (!(s > 0.0)) throw PreconditionError("bandwidth_grid: multipliers must be positive");
        grid.push_back(m * s);
    }
    return grid;
}

}  // namespace amnr
