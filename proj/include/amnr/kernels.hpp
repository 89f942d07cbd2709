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

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amnr {

enum class KernelFamily { Matern, Rbf };
enum class MaternNu { Half, ThreeHalves, FiveHalves };

/// Stationary kernel with unit variance: k(u, u) = 1.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern;
    MaternNu nu = MaternNu::ThreeHalves;
    double bandwidth = 1.0;

    void validate() const;
    KernelSpec with_bandwidth(double h) const {
        KernelSpec s = *this;
        s.bandwidth = h;
        return s;
    }

    /// "matern12", "matern32", "matern52" or "rbf".
    std::string family_name() const;
    static KernelSpec parse(std::string_view family, double bandwidth = 1.0);
};

/// Kernel value as a function of the squared Euclidean distance.
double kernel_from_squared_distance(const KernelSpec& spec, double d2);

/// Throws ShapeError when u and v differ in length.
double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

struct JitterPolicy {
    double initial = 1e-10;
    double factor = 10.0;
    double cap = 1e-4;
};

/// Symmetric kernel matrix over a point set (points are columns), with the
/// diagonal shifted by `extra_diagonal + jitter` and its Cholesky factor.
struct GramMatrix {
    Eigen::MatrixXd matrix;  ///< includes the diagonal shift
    double jitter = 0.0;
    double extra_diagonal = 0.0;
    Eigen::LLT<Eigen::MatrixXd> cholesky;

    Eigen::Index size() const { return matrix.rows(); }
    Eigen::MatrixXd lower() const { return cholesky.matrixL(); }
};

/// Raw pairwise kernel values, no diagonal shift.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& points);

/// kernel(a_i, b_j) for columns a_i of `a` and b_j of `b`; result is |a| x |b|.
Eigen::MatrixXd cross_kernel(const KernelSpec& spec, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Builds the Gram matrix, escalating the jitter from policy.initial by
/// policy.factor until the Cholesky factorization succeeds. Throws
/// IllConditionedError (naming the largest near-duplicate cluster) once the
/// jitter would exceed policy.cap.
GramMatrix gram(const KernelSpec& spec, const Eigen::MatrixXd& points, const JitterPolicy& policy = {},
                double extra_diagonal = 0.0);

/// Factorizes an already assembled symmetric matrix with the same jitter policy.
GramMatrix factorize(Eigen::MatrixXd matrix, const JitterPolicy& policy = {}, double extra_diagonal = 0.0,
                     const Eigen::MatrixXd* points = nullptr);

/// Median of all pairwise Euclidean distances between columns.
double median_pairwise_distance(const Eigen::MatrixXd& points);

/// {m/4, m/2, m, 2m, 4m} with m the median pairwise distance, or the fixed
/// fallback {0.1, 0.5, 1.0} when all points coincide. Needs >= 2 points.
std::vector<double> bandwidth_grid(const Eigen::MatrixXd& points);

/// m * multipliers with m the median pairwise distance; same fallback.
std::vector<double> bandwidth_grid(const Eigen::MatrixXd& points, std::span<const double> multipliers);

}  // namespace amnr
