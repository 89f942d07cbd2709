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

// Reference kernels. Plain loops, left-to-right accumulation.

#include "simd_internal.hpp"

namespace amnr::simd::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void multiply(double* dst, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] *= src[i];
}

void axpy(double* dst, double alpha, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += alpha * src[i];
}

void scale_copy(double* dst, double alpha, const double* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = alpha * src[i];
}

void accumulate_squared_residual(double* acc, double target, const double* pred, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r = target - pred[i];
        acc[i] += r * r;
    }
}

double weighted_squared_deviation(const double* w, const double* v, double center, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = w[i] * (v[i] - center);
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable kScalarTable{dot, squared_distance, multiply, axpy, scale_copy,
                               accumulate_squared_residual, weighted_squared_deviation};

}  // namespace amnr::simd::detail
