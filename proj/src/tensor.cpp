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

#include "amnr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "amnr/error.hpp"
#include "amnr/simd.hpp"

namespace amnr {
namespace {

std::string dims_string(const Dims& d) {
    std::string s;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(d[i]);
    }
    return s;
}

std::span<const double> col_span(const Eigen::MatrixXd& m, Eigen::Index c) {
    return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

std::span<double> col_span(Eigen::MatrixXd& m, Eigen::Index c) {
    return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

// Row-major flattening of lambda * v_1 (x) ... (x) v_K.
void outer_product(double lambda, std::span<const std::span<const double>> vectors, std::vector<double>& out,
                   std::vector<double>& scratch) {
    out.assign(1, lambda);
    for (const auto& v : vectors) {
        scratch.resize(out.size() * v.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            simd::scale_copy(std::span<double>(scratch).subspan(i * v.size(), v.size()), out[i], v);
        }
        out.swap(scratch);
    }
}

}  // namespace

std::size_t element_count(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void validate_dims(const Dims& dims) {
    if (dims.empty()) throw ShapeError("tensor order must be at least 1");
    for (auto d : dims) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + dims_string(dims));
    }
}

Tensor::Tensor(Dims dims) : dims_(std::move(dims)) {
    validate_dims(dims_);
    data_.assign(element_count(dims_), 0.0);
}

Tensor::Tensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data)) {
    validate_dims(dims_);
    if (data_.size() != element_count(dims_)) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match dims " +
                         dims_string(dims_));
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw PreconditionError("tensor entries must be finite");
    }
}

std::size_t Tensor::flat_index(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw ShapeError("index order does not match tensor order");
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        if (index[k] >= dims_[k]) throw ShapeError("tensor index out of range");
        flat = flat * dims_[k] + index[k];
    }
    return flat;
}

double Tensor::at(std::span<const std::size_t> index) const { return data_[flat_index(index)]; }

double Tensor::frobenius_norm() const { return std::sqrt(simd::dot(data_, data_)); }

double inner(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) {
        throw ShapeError("inner: dims " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
    }
    return simd::dot(a.data(), b.data());
}

std::vector<double> contract_mode(std::span<const double> data, const Dims& dims, std::size_t mode,
                                  std::span<const double> v, Dims& out_dims) {
    if (mode >= dims.size() || v.size() != dims[mode] || data.size() != element_count(dims)) {
        throw ShapeError("contract_mode: vector or mode does not match tensor shape " + dims_string(dims));
    }
    std::size_t outer = 1, inner_size = 1;
    for (std::size_t j = 0; j < mode; ++j) outer *= dims[j];
    for (std::size_t j = mode + 1; j < dims.size(); ++j) inner_size *= dims[j];
    const std::size_t len = dims[mode];

    std::vector<double> out(outer * inner_size, 0.0);
    if (inner_size == 1) {
        for (std::size_t o = 0; o < outer; ++o) out[o] = simd::dot(data.subspan(o * len, len), v);
    } else {
        std::span<double> dst(out);
        for (std::size_t o = 0; o < outer; ++o) {
            auto row = dst.subspan(o * inner_size, inner_size);
            for (std::size_t j = 0; j < len; ++j) {
                simd::axpy(row, v[j], data.subspan((o * len + j) * inner_size, inner_size));
            }
        }
    }
    out_dims.clear();
    for (std::size_t j = 0; j < dims.size(); ++j) {
        if (j != mode) out_dims.push_back(dims[j]);
    }
    return out;
}

Eigen::MatrixXd unfold(const Tensor& x, std::size_t mode) {
    const Dims& d = x.dims();
    if (mode >= d.size()) throw ShapeError("unfold: mode out of range");
    std::size_t outer = 1, inner_size = 1;
    for (std::size_t j = 0; j < mode; ++j) outer *= d[j];
    for (std::size_t j = mode + 1; j < d.size(); ++j) inner_size *= d[j];
    const std::size_t len = d[mode];
    Eigen::MatrixXd u(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(outer * inner_size));
    const auto data = x.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < len; ++j) {
            for (std::size_t b = 0; b < inner_size; ++b) {
                u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(o * inner_size + b)) =
                    data[(o * len + j) * inner_size + b];
            }
        }
    }
    return u;
}

Dims CpForm::dims() const {
    Dims d;
    d.reserve(factors.size());
    for (const auto& f : factors) d.push_back(static_cast<std::size_t>(f.rows()));
    return d;
}

void CpForm::validate(double tol) const {
    if (lambdas.empty()) throw ShapeError("CP form must have rank >= 1");
    if (factors.empty()) throw ShapeError("CP form must have order >= 1");
    for (const auto& f : factors) {
        if (f.cols() != static_cast<Eigen::Index>(rank()) || f.rows() < 1) {
            throw ShapeError("CP factor matrix shape does not match rank");
        }
        for (Eigen::Index r = 0; r < f.cols(); ++r) {
            if (std::abs(f.col(r).norm() - 1.0) > tol) throw NormalizationError("CP factor is not unit-norm");
        }
    }
    for (std::size_t r = 0; r < rank(); ++r) {
        if (!(lambdas[r] >= 0.0)) throw PreconditionError("CP scales must be nonnegative");
        if (r > 0 && lambdas[r] > lambdas[r - 1]) throw PreconditionError("CP scales must be nonincreasing");
    }
}

Tensor rank_one(double lambda, std::span<const Eigen::VectorXd> vectors) {
    if (vectors.empty()) throw ShapeError("rank_one needs at least one vector");
    if (!(lambda >= 0.0)) throw PreconditionError("rank_one scale must be nonnegative");
    Dims dims;
    std::vector<std::span<const double>> spans;
    for (const auto& v : vectors) {
        if (v.size() == 0) throw ShapeError("rank_one vectors must be nonempty");
        if (std::abs(v.norm() - 1.0) > 1e-8) throw NormalizationError("rank_one vectors must be unit-norm");
        dims.push_back(static_cast<std::size_t>(v.size()));
        spans.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
    }
    std::vector<double> out, scratch;
    outer_product(lambda, spans, out, scratch);
    return Tensor(std::move(dims), std::move(out));
}

Tensor reconstruct(const CpForm& c, const Dims& dims) {
    if (c.factors.size() != dims.size()) throw ShapeError("reconstruct: order mismatch");
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (static_cast<std::size_t>(c.factors[k].rows()) != dims[k] ||
            c.factors[k].cols() != static_cast<Eigen::Index>(c.rank())) {
            throw ShapeError("reconstruct: factor lengths do not match dims " + dims_string(dims));
        }
    }
    Tensor out(dims);
    std::vector<double> buf, scratch;
    std::vector<std::span<const double>> spans(dims.size());
    for (std::size_t r = 0; r < c.rank(); ++r) {
        for (std::size_t k = 0; k < dims.size(); ++k) spans[k] = col_span(c.factors[k], static_cast<Eigen::Index>(r));
        outer_product(c.lambdas[r], spans, buf, scratch);
        simd::axpy(out.mutable_data(), 1.0, buf);
    }
    return out;
}

Tensor reconstruct(const CpForm& c) { return reconstruct(c, c.dims()); }

CpForm canonicalize(CpForm c) {
    const std::size_t K = c.order();
    const std::size_t R = c.rank();
    if (K == 0) return c;
    for (std::size_t r = 0; r < R; ++r) {
        const auto rr = static_cast<Eigen::Index>(r);
        if (c.lambdas[r] < 0.0) {
            c.lambdas[r] = -c.lambdas[r];
            c.factors[K - 1].col(rr) *= -1.0;
        }
        for (std::size_t k = 0; k + 1 < K; ++k) {
            auto col = col_span(c.factors[k], rr);
            std::size_t best = 0;
            for (std::size_t j = 1; j < col.size(); ++j) {
                if (std::abs(col[j]) > std::abs(col[best])) best = j;
            }
            if (col[best] < 0.0) {
                c.factors[k].col(rr) *= -1.0;
                c.factors[K - 1].col(rr) *= -1.0;
            }
        }
    }

    std::vector<std::size_t> order(R);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (c.lambdas[a] != c.lambdas[b]) return c.lambdas[a] > c.lambdas[b];
        const auto fa = col_span(c.factors[0], static_cast<Eigen::Index>(a));
        const auto fb = col_span(c.factors[0], static_cast<Eigen::Index>(b));
        return std::lexicographical_compare(fa.begin(), fa.end(), fb.begin(), fb.end());
    });
    CpForm sorted;
    sorted.lambdas.resize(R);
    sorted.factors.resize(K);
    for (std::size_t k = 0; k < K; ++k) sorted.factors[k].resize(c.factors[k].rows(), static_cast<Eigen::Index>(R));
    for (std::size_t r = 0; r < R; ++r) {
        sorted.lambdas[r] = c.lambdas[order[r]];
        for (std::size_t k = 0; k < K; ++k) {
            sorted.factors[k].col(static_cast<Eigen::Index>(r)) = c.factors[k].col(static_cast<Eigen::Index>(order[r]));
        }
    }
    return sorted;
}

CpForm random_sign_flip(CpForm c, Rng& rng) {
    const std::size_t K = c.order();
    if (K < 2) throw PreconditionError("random_sign_flip requires order >= 2");
    std::bernoulli_distribution coin(0.5);
    for (std::size_t r = 0; r < c.rank(); ++r) {
        bool parity = false;
        for (std::size_t k = 0; k + 1 < K; ++k) {
            if (coin(rng)) {
                c.factors[k].col(static_cast<Eigen::Index>(r)) *= -1.0;
                parity = !parity;
            }
        }
        if (parity) c.factors[K - 1].col(static_cast<Eigen::Index>(r)) *= -1.0;
    }
    return c;
}

}  // namespace amnr
