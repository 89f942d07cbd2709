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

#include <atomic>
#include <cstdlib>
#include <string>

#include "amnr/error.hpp"
#include "simd_internal.hpp"

namespace amnr::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(AMNR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend b) noexcept {
#if defined(AMNR_HAVE_AVX2)
    if (b == Backend::Avx2) return &detail::kAvx2Table;
#endif
    return b == Backend::Scalar ? &detail::kScalarTable : nullptr;
}

Backend initial_backend() noexcept {
    if (const char* env = std::getenv("AMNR_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && cpu_has_avx2()) return Backend::Avx2;
    }
    return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> t{table_for(initial_backend())};
    return t;
}

const KernelTable& k() noexcept { return *active_table().load(std::memory_order_relaxed); }

void require_same(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw ShapeError(std::string("simd::") + op + ": length mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
    }
}

}  // namespace

Backend active_backend() noexcept {
    return &k() == &detail::kScalarTable ? Backend::Scalar : Backend::Avx2;
}

std::string_view backend_name(Backend b) noexcept { return b == Backend::Scalar ? "scalar" : "avx2"; }

bool backend_supported(Backend b) noexcept {
    if (b == Backend::Scalar) return true;
    return table_for(b) != nullptr && cpu_has_avx2();
}

void set_backend(Backend b) {
    if (!backend_supported(b)) {
        throw PreconditionError("simd backend not supported here: " + std::string(backend_name(b)));
    }
    active_table().store(table_for(b));
}

const KernelTable& scalar_kernels() noexcept { return detail::kScalarTable; }

const KernelTable* avx2_kernels() noexcept {
    return backend_supported(Backend::Avx2) ? table_for(Backend::Avx2) : nullptr;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same(a.size(), b.size(), "dot");
    return k().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_same(a.size(), b.size(), "squared_distance");
    return k().squared_distance(a.data(), b.data(), a.size());
}

void multiply(std::span<double> dst, std::span<const double> src) {
    require_same(dst.size(), src.size(), "multiply");
    k().multiply(dst.data(), src.data(), dst.size());
}

void axpy(std::span<double> dst, double alpha, std::span<const double> src) {
    require_same(dst.size(), src.size(), "axpy");
    k().axpy(dst.data(), alpha, src.data(), dst.size());
}

void scale_copy(std::span<double> dst, double alpha, std::span<const double> src) {
    require_same(dst.size(), src.size(), "scale_copy");
    k().scale_copy(dst.data(), alpha, src.data(), dst.size());
}

void accumulate_squared_residual(std::span<double> acc, double target, std::span<const double> pred) {
    require_same(acc.size(), pred.size(), "accumulate_squared_residual");
    k().accumulate_squared_residual(acc.data(), target, pred.data(), acc.size());
}

double weighted_squared_deviation(std::span<const double> w, std::span<const double> v, double center) {
    require_same(w.size(), v.size(), "weighted_squared_deviation");
    return k().weighted_squared_deviation(w.data(), v.data(), center, w.size());
}

}  // namespace amnr::simd
