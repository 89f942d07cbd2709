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
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "amnr/rng.hpp"

namespace amnr {

using Dims = std::vector<std::size_t>;

std::size_t element_count(const Dims& dims);
void validate_dims(const Dims& dims);

/// Dense order-K real array, row-major (last index fastest).
class Tensor {
public:
    Tensor() = default;
    /// Zero tensor.
    explicit Tensor(Dims dims);
    /// Throws ShapeError on length mismatch and PreconditionError on non-finite entries.
    Tensor(Dims dims, std::vector<double> data);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t order() const noexcept { return dims_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> mutable_data() noexcept { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double at(std::span<const std::size_t> index) const;
    std::size_t flat_index(std::span<const std::size_t> index) const;

    double frobenius_norm() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Dims dims_;
    std::vector<double> data_;
};

/// Sum over all entries of a∘b. Throws ShapeError if dims differ.
double inner(const Tensor& a, const Tensor& b);

/// Contracts `mode` of a row-major array with `v`, removing that mode.
std::vector<double> contract_mode(std::span<const double> data, const Dims& dims, std::size_t mode,
                                  std::span<const double> v, Dims& out_dims);

/// Mode-k unfolding: I_k rows, one column per multi-index of the other modes.
Eigen::MatrixXd unfold(const Tensor& x, std::size_t mode);

/// Rank-R CP form: scales (nonincreasing, nonnegative) and one I_k x R factor
/// matrix per mode whose columns are unit vectors.
struct CpForm {
    std::vector<double> lambdas;
    std::vector<Eigen::MatrixXd> factors;

    std::size_t rank() const noexcept { return lambdas.size(); }
    std::size_t order() const noexcept { return factors.size(); }
    Dims dims() const;

    auto factor(std::size_t r, std::size_t k) const { return factors[k].col(static_cast<Eigen::Index>(r)); }

    /// Checks unit norms (1 +- tol), nonnegative and sorted scales, consistent shapes.
    void validate(double tol = 1e-10) const;
};

/// lambda * v_1 (x) ... (x) v_K. Vectors must be unit-norm within 1e-8.
Tensor rank_one(double lambda, std::span<const Eigen::VectorXd> vectors);

/// Sum over components of scaled outer products. Throws ShapeError when `dims`
/// disagrees with the factor lengths.
Tensor reconstruct(const CpForm& c, const Dims& dims);
Tensor reconstruct(const CpForm& c);

/// Deterministic sign and order canonicalization:
///  - lambda_r >= 0;
///  - for modes 1..K-1 the largest-magnitude entry of each factor is positive,
///    compensating flips absorbed into mode K;
///  - components sorted by lambda descending, ties by lexicographic order of
///    the mode-1 factor.
/// Idempotent; leaves reconstruct() unchanged.
CpForm canonicalize(CpForm c);

/// Flips an even number of factor signs per component, uniformly over the
/// even-size subsets of modes. Exact: reconstruct() is bitwise unchanged.
/// Requires K >= 2.
CpForm random_sign_flip(CpForm c, Rng& rng);

struct CpOptions {
    int max_iters = 500;
    double tol = 1e-8;
    std::uint64_t seed = 0x5eedcafeULL;  ///< for fallback random init columns and restarts
    /// Extra seeded random starts, tried while the best relative error so far
    /// is above `restart_above`.
    int restarts = 3;
    double restart_above = 1e-9;
};

struct CpAlsResult {
    CpForm form;
    bool converged = false;
    int iterations = 0;
    /// Relative Frobenius reconstruction error after each sweep.
    std::vector<double> objective_history;

    double relative_error() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
};

/// Rank-R CP decomposition by alternating least squares from a truncated
/// HOSVD start. Never throws on non-convergence; check `converged`.
CpAlsResult cp_als(const Tensor& x, std::size_t rank, const CpOptions& options = {});

inline CpForm cp_decompose(const Tensor& x, std::size_t rank, const CpOptions& options = {}) {
    return cp_als(x, rank, options).form;
}

}  // namespace amnr
