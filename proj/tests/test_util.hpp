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

// Small helpers shared by the unit suites.

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "amnr/rng.hpp"
#include "amnr/tensor.hpp"

namespace amnr::testing {

inline Eigen::VectorXd random_unit(std::size_t n, Rng& rng) {
    std::normal_distribution<double> z;
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = z(rng);
    return v / v.norm();
}

// Exact-rank CP form with the given scales (sorted descending by the caller).
inline CpForm random_form(const Dims& dims, std::vector<double> lambdas, Rng& rng) {
    CpForm c;
    c.lambdas = std::move(lambdas);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(dims[k]), static_cast<Eigen::Index>(c.lambdas.size()));
        for (Eigen::Index r = 0; r < f.cols(); ++r) f.col(r) = random_unit(dims[k], rng);
        c.factors.push_back(f);
    }
    return c;
}

inline Tensor random_tensor(const Dims& dims, Rng& rng) {
    std::normal_distribution<double> z;
    std::vector<double> data(element_count(dims));
    for (auto& x : data) x = z(rng);
    return Tensor(dims, std::move(data));
}

}  // namespace amnr::testing
