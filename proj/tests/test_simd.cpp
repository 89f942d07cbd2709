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
#include <random>
#include <vector>

#include "amnr/error.hpp"
#include "amnr/simd.hpp"

using namespace amnr;

namespace {

std::vector<double> noise(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-13 * (1 + scale); }

}  // namespace

TEST_CASE("scalar kernels against direct loops") {
    const auto& s = simd::scalar_kernels();
    std::mt19937_64 rng(1);
    auto a = noise(37, rng), b = noise(37, rng);
    double d = 0, d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        d2 += (a[i] - b[i]) * (a[i] - b[i]);
    }
    CHECK(close(s.dot(a.data(), b.data(), a.size()), d, 40));
    CHECK(close(s.squared_distance(a.data(), b.data(), a.size()), d2, 40));
}

TEST_CASE("avx2 and scalar kernels agree") {
    const auto* v = simd::avx2_kernels();
    if (v == nullptr || !simd::backend_supported(simd::Backend::Avx2)) {
        MESSAGE("no AVX2 variant on this build/CPU");
        return;
    }
    const auto& s = simd::scalar_kernels();
    std::mt19937_64 rng(2);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 100u, 1023u}) {
        auto a = noise(n, rng), b = noise(n, rng), w = noise(n, rng);
        double scale = static_cast<double>(n) * 10;
        CHECK(close(s.dot(a.data(), b.data(), n), v->dot(a.data(), b.data(), n), scale));
        CHECK(close(s.squared_distance(a.data(), b.data(), n), v->squared_distance(a.data(), b.data(), n), scale));
        CHECK(close(s.weighted_squared_deviation(w.data(), a.data(), 0.3, n),
                    v->weighted_squared_deviation(w.data(), a.data(), 0.3, n), scale));

        auto x1 = a, x2 = a;
        s.multiply(x1.data(), b.data(), n);
        v->multiply(x2.data(), b.data(), n);
        CHECK(x1 == x2);

        x1 = a, x2 = a;
        s.axpy(x1.data(), 0.7, b.data(), n);
        v->axpy(x2.data(), 0.7, b.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(x1[i], x2[i], 1));

        s.scale_copy(x1.data(), -1.5, b.data(), n);
        v->scale_copy(x2.data(), -1.5, b.data(), n);
        CHECK(x1 == x2);

        x1 = w, x2 = w;
        s.accumulate_squared_residual(x1.data(), 0.25, a.data(), n);
        v->accumulate_squared_residual(x2.data(), 0.25, a.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(x1[i], x2[i], 10));
    }
}

TEST_CASE("backend switching") {
    auto before = simd::active_backend();
    simd::set_backend(simd::Backend::Scalar);
    CHECK(simd::active_backend() == simd::Backend::Scalar);
    CHECK(simd::backend_name(simd::Backend::Scalar) == "scalar");
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(simd::dot(a, b) == 32.0);
    if (!simd::backend_supported(simd::Backend::Avx2)) CHECK_THROWS_AS(simd::set_backend(simd::Backend::Avx2), PreconditionError);
    simd::set_backend(before);
}
