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

// Data-parallel kernels behind the hot loops (Gram construction, per-sample
// products and residuals over the Q prior draws, tensor contractions).
//
// Every kernel has a scalar reference implementation and, on x86-64 builds,
// an AVX2/FMA variant. The variant is chosen once at startup from CPUID and
// can be overridden with AMNR_SIMD=scalar|avx2 or set_backend(). The two
// paths agree to a few ulps; tests/test_simd.cpp checks them against each
// other.

#include <cstddef>
#include <span>
#include <string_view>

namespace amnr::simd {

enum class Backend { Scalar, Avx2 };

Backend active_backend() noexcept;
std::string_view backend_name(Backend b) noexcept;
bool backend_supported(Backend b) noexcept;

/// Throws PreconditionError when `b` is not supported on this CPU/build.
void set_backend(Backend b);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// dst[i] *= src[i]
void multiply(std::span<double> dst, std::span<const double> src);
/// dst[i] += alpha * src[i]
void axpy(std::span<double> dst, double alpha, std::span<const double> src);
/// dst[i] = alpha * src[i]
void scale_copy(std::span<double> dst, double alpha, std::span<const double> src);
/// acc[i] += (target - pred[i])^2
void accumulate_squared_residual(std::span<double> acc, double target, std::span<const double> pred);
/// sum_i w[i]^2 (v[i] - center)^2
double weighted_squared_deviation(std::span<const double> w, std::span<const double> v, double center);

// Raw kernel tables, exposed for equivalence tests and benchmarks.
struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*squared_distance)(const double*, const double*, std::size_t);
    void (*multiply)(double*, const double*, std::size_t);
    void (*axpy)(double*, double, const double*, std::size_t);
    void (*scale_copy)(double*, double, const double*, std::size_t);
    void (*accumulate_squared_residual)(double*, double, const double*, std::size_t);
    double (*weighted_squared_deviation)(const double*, const double*, double, std::size_t);
};

const KernelTable& scalar_kernels() noexcept;
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_kernels() noexcept;

}  // namespace amnr::simd
