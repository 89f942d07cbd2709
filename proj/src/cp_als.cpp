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

// CP decomposition by alternating least squares.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "amnr/error.hpp"
#include "amnr/simd.hpp"
#include "amnr/tensor.hpp"

namespace amnr {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd random_unit(std::uint64_t seed, std::size_t mode, std::size_t r, Index len) {
    Rng rng = make_rng(seed, {mode, r});
    std::normal_distribution<double> normal;
    VectorXd v(len);
    do {
        for (Index i = 0; i < len; ++i) v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

// Leading left singular vectors of each unfolding; seeded random columns where
// the unfolding does not supply enough directions.
MatrixXd hosvd_init(const Tensor& x, std::size_t mode, std::size_t rank, std::uint64_t seed) {
    const MatrixXd u = unfold(x, mode);
    const MatrixXd gram = u * u.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const Index len = u.rows();
    const double top = eig.eigenvalues()[len - 1];
    MatrixXd a(len, static_cast<Index>(rank));
    for (std::size_t r = 0; r < rank; ++r) {
        const Index src = len - 1 - static_cast<Index>(r);
        if (src >= 0 && eig.eigenvalues()[src] > 1e-12 * top) {
            a.col(static_cast<Index>(r)) = eig.eigenvectors().col(src);
        } else {
            a.col(static_cast<Index>(r)) = random_unit(seed, mode, r, len);
        }
    }
    return a;
}

// X times the Khatri-Rao product of all factors but `mode`, one column per component.
MatrixXd mttkrp(const Tensor& x, const std::vector<MatrixXd>& factors, std::size_t mode) {
    const std::size_t K = factors.size();
    const Index R = factors[0].cols();
    MatrixXd out(factors[mode].rows(), R);
    for (Index r = 0; r < R; ++r) {
        std::vector<double> cur(x.data().begin(), x.data().end());
        Dims dims = x.dims();
        Dims next_dims;
        for (std::size_t j = K; j-- > 0;) {
            if (j == mode) continue;
            const auto& f = factors[j];
            cur = contract_mode(cur, dims, j, std::span<const double>(f.data() + r * f.rows(), f.rows()), next_dims);
            dims = next_dims;
        }
        out.col(r) = Eigen::Map<const VectorXd>(cur.data(), static_cast<Index>(cur.size()));
    }
    return out;
}

double residual_norm(const Tensor& x, const CpForm& c) {
    const Tensor approx = reconstruct(c, x.dims());
    return std::sqrt(simd::squared_distance(x.data(), approx.data()));
}

// Unit-normalizes each column of a, storing the norms in scale. Zero or
// non-finite columns become e_1 with scale 0.
void normalize_columns(MatrixXd& a, VectorXd& scale) {
    for (Index r = 0; r < a.cols(); ++r) {
        const double norm = a.col(r).norm();
        if (norm > 0.0 && std::isfinite(norm)) {
            a.col(r) /= norm;
            scale[r] = norm;
        } else {
            a.col(r).setZero();
            a(0, r) = 1.0;
            scale[r] = 0.0;
        }
    }
}

// Algebraic start for order-3 tensors (simultaneous diagonalization of two
// random mode-s slice mixtures). Exact for exact-rank tensors whose factor
// matrices on modes p and q have full column rank; returns false when it does
// not apply.
bool gevd_init(const Tensor& x, std::size_t rank, std::uint64_t seed, std::vector<MatrixXd>& out) {
    const Dims& dims = x.dims();
    if (dims.size() != 3 || rank < 2) return false;
    std::array<std::size_t, 3> modes{0, 1, 2};
    std::stable_sort(modes.begin(), modes.end(), [&](std::size_t a, std::size_t b) { return dims[a] > dims[b]; });
    const std::size_t p = modes[0], q = modes[1], s = modes[2];
    if (dims[q] < rank) return false;
    const Index R = static_cast<Index>(rank);

    // slices M_w = sum_j w_j X(:, :, j) along mode s, as I_p x I_q matrices
    auto mix = [&](const VectorXd& w) {
        MatrixXd m = MatrixXd::Zero(static_cast<Index>(dims[p]), static_cast<Index>(dims[q]));
        std::array<std::size_t, 3> idx{};
        for (std::size_t flat = 0; flat < x.size(); ++flat) {
            std::size_t rem = flat;
            for (std::size_t k = 3; k-- > 0;) {
                idx[k] = rem % dims[k];
                rem /= dims[k];
            }
            m(static_cast<Index>(idx[p]), static_cast<Index>(idx[q])) += w[static_cast<Index>(idx[s])] * x[flat];
        }
        return m;
    };
    const VectorXd w1 = random_unit(derive_seed(seed, {label("cp-gevd")}), 0, 0, static_cast<Index>(dims[s]));
    const VectorXd w2 = random_unit(derive_seed(seed, {label("cp-gevd")}), 1, 0, static_cast<Index>(dims[s]));
    const MatrixXd m1 = mix(w1), m2 = mix(w2);

    Eigen::JacobiSVD<MatrixXd> svd(m1 + m2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues()[R - 1] <= 1e-12 * svd.singularValues()[0]) return false;
    const MatrixXd u = svd.matrixU().leftCols(R), v = svd.matrixV().leftCols(R);
    const MatrixXd t1 = u.transpose() * m1 * v, t2 = u.transpose() * m2 * v;
    Eigen::FullPivLU<MatrixXd> lu2(t2);
    if (!lu2.isInvertible()) return false;
    Eigen::EigenSolver<MatrixXd> eig(t1 * lu2.inverse());
    if (eig.info() != Eigen::Success) return false;
    const MatrixXd at = eig.eigenvectors().real();
    Eigen::FullPivLU<MatrixXd> lua(at);
    if (!lua.isInvertible()) return false;
    MatrixXd a = u * at;
    MatrixXd b = v * (lua.inverse() * t1).transpose();
    VectorXd scale(R);
    normalize_columns(a, scale);
    normalize_columns(b, scale);

    out.assign(3, MatrixXd());
    out[p] = a;
    out[q] = b;
    // mode s by least squares given the other two
    out[s] = MatrixXd::Zero(static_cast<Index>(dims[s]), R);
    out[s].row(0).setOnes();
    const MatrixXd gram = (a.transpose() * a).cwiseProduct(b.transpose() * b);
    MatrixXd c = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(gram).solve(mttkrp(x, out, s).transpose()).transpose();
    normalize_columns(c, scale);
    out[s] = c;
    return c.allFinite() && a.allFinite() && b.allFinite();
}

// Alternating least squares sweeps from the given start, in place.
void als_run(const Tensor& x, std::vector<MatrixXd>& factors, VectorXd& lambdas, const CpOptions& options,
             CpAlsResult& result) {
    const std::size_t K = factors.size();
    const double xnorm = x.frobenius_norm();
    const Index R = lambdas.size();
    auto form_of = [&](const std::vector<MatrixXd>& f, const VectorXd& l) {
        CpForm c;
        c.lambdas.assign(l.data(), l.data() + R);
        c.factors = f;
        return c;
    };
    double previous = 0.0, step = 1.0;
    std::vector<MatrixXd> last_factors;
    VectorXd last_lambdas;
    for (int it = 1; it <= options.max_iters; ++it) {
        for (std::size_t k = 0; k < K; ++k) {
            MatrixXd v = MatrixXd::Ones(R, R);
            for (std::size_t j = 0; j < K; ++j) {
                if (j != k) v = v.cwiseProduct(factors[j].transpose() * factors[j]);
            }
            const MatrixXd m = mttkrp(x, factors, k);
            Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(v);
            MatrixXd a = cod.solve(m.transpose()).transpose();
            normalize_columns(a, lambdas);
            factors[k] = std::move(a);
        }
        double rel = residual_norm(x, form_of(factors, lambdas)) / xnorm;

        // Extrapolate along the last sweep's direction and keep the result only
        // if it fits better; the step grows while that keeps working and falls
        // back to 1 when it does not. Pulls ALS out of swamps where collinear
        // factors make plain sweeps crawl.
        if (it >= 3 && rel > 1e-14) {
            std::vector<MatrixXd> trial(K);
            VectorXd trial_lambdas = lambdas + step * (lambdas - last_lambdas);
            for (std::size_t k = 0; k < K; ++k) {
                trial[k] = factors[k] + step * (factors[k] - last_factors[k]);
                VectorXd scale(R);
                normalize_columns(trial[k], scale);
                trial_lambdas = trial_lambdas.cwiseProduct(scale);
            }
            for (Index r = 0; r < R; ++r) {
                if (trial_lambdas[r] < 0) {
                    trial_lambdas[r] = -trial_lambdas[r];
                    trial[K - 1].col(r) *= -1.0;
                }
            }
            const double trial_rel = residual_norm(x, form_of(trial, trial_lambdas)) / xnorm;
            if (std::isfinite(trial_rel) && trial_rel < rel) {
                factors = std::move(trial);
                lambdas = trial_lambdas;
                rel = trial_rel;
                step = std::min(step * 1.5, 1e3);
            } else {
                step = 1.0;
            }
        }
        last_factors = factors;
        last_lambdas = lambdas;

        result.objective_history.push_back(rel);
        result.iterations = it;
        if (rel < 1e-14 || (it > 1 && previous - rel <= options.tol * previous)) {
            result.converged = true;
            break;
        }
        previous = rel;
    }
}

}  // namespace

CpAlsResult cp_als(const Tensor& x, std::size_t rank, const CpOptions& options) {
    const Dims& dims = x.dims();
    const std::size_t K = dims.size();
    validate_dims(dims);
    if (rank < 1) throw PreconditionError("cp_als: rank must be >= 1");
    const std::size_t total = element_count(dims);
    for (std::size_t k = 0; k < K; ++k) {
        if (rank > total / dims[k]) {
            throw PreconditionError("cp_als: rank " + std::to_string(rank) +
                                    " exceeds the product of the other dimensions of mode " + std::to_string(k));
        }
    }

    CpAlsResult result;
    const double xnorm = x.frobenius_norm();
    if (xnorm == 0.0) {
        result.form.lambdas.assign(rank, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            MatrixXd f = MatrixXd::Zero(static_cast<Index>(dims[k]), static_cast<Index>(rank));
            f.row(0).setOnes();
            result.form.factors.push_back(std::move(f));
        }
        result.converged = true;
        result.objective_history.push_back(0.0);
        return result;
    }

    // Start from the HOSVD; when that does not fit exactly (a swamp or
    // a local minimum, or simply a tensor of higher rank) an algebraic start
    // and a few seeded random starts are tried as well and the best fit is kept.
    std::vector<MatrixXd> factors(K);
    for (std::size_t k = 0; k < K; ++k) factors[k] = hosvd_init(x, k, rank, options.seed);
    VectorXd lambdas = VectorXd::Ones(static_cast<Index>(rank));
    als_run(x, factors, lambdas, options, result);
    std::vector<MatrixXd> g;
    if (result.relative_error() > options.restart_above && gevd_init(x, rank, options.seed, g)) {
        VectorXd l = VectorXd::Ones(static_cast<Index>(rank));
        CpAlsResult attempt;
        als_run(x, g, l, options, attempt);
        if (attempt.relative_error() < result.relative_error()) {
            result = std::move(attempt);
            factors = std::move(g);
            lambdas = std::move(l);
        }
    }
    for (int start = 1; start <= options.restarts && result.relative_error() > options.restart_above; ++start) {
        std::vector<MatrixXd> f(K);
        for (std::size_t k = 0; k < K; ++k) {
            f[k].resize(static_cast<Index>(dims[k]), static_cast<Index>(rank));
            for (std::size_t r = 0; r < rank; ++r)
                f[k].col(static_cast<Index>(r)) =
                    random_unit(derive_seed(options.seed, {label("cp-restart"), static_cast<std::uint64_t>(start)}), k, r,
                                static_cast<Index>(dims[k]));
        }
        VectorXd l = VectorXd::Ones(static_cast<Index>(rank));
        CpAlsResult attempt;
        als_run(x, f, l, options, attempt);
        if (attempt.relative_error() < result.relative_error()) {
            result = std::move(attempt);
            factors = std::move(f);
            lambdas = std::move(l);
        }
    }
    const Index R = static_cast<Index>(rank);
    result.form.lambdas.assign(lambdas.data(), lambdas.data() + R);
    result.form.factors = std::move(factors);
    result.form = canonicalize(std::move(result.form));
    return result;
}

}  // namespace amnr
