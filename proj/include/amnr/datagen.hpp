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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "amnr/dataset.hpp"
#include "amnr/tensor.hpp"

namespace amnr {

enum class DgpKind { LowRankLogistic, FullRankNorm, SobolevProduct };

DgpKind parse_dgp_kind(std::string_view name);
std::string_view dgp_kind_name(DgpKind kind);

struct DgpSpec {
    DgpKind kind = DgpKind::LowRankLogistic;
    Dims dims{20, 20};
    int rank = 4;               ///< R* of the generated inputs (low-rank and Sobolev kinds)
    double noise_variance = 1.0;
    int basis_terms = 1000;     ///< L, Sobolev kind only
    std::uint64_t seed = 1;

    /// noise_variance == 0 is accepted and yields noiseless responses.
    void validate() const;
};

/// Generated data plus the CP forms the inputs were built from (empty for the
/// full-rank kind).
struct GeneratedData {
    Dataset data;
    std::vector<CpForm> generators;
};

/// Projection vector with entries 0.1 * j, j = 1..len.
std::vector<double> projection_vector(std::size_t len);

double logistic(double z);

/// sum_r lambda_r prod_k logistic(gamma^T x_r^(k)).
double low_rank_truth(const CpForm& form);
/// prod_k logistic(||X||_F / prod_k I_k).
double full_rank_truth(const Tensor& x);
/// sqrt(2) cos((l - 1/2) pi z), l >= 1.
double sobolev_basis(int l, double z);
/// l^{-3/2} sin(l).
double sobolev_coefficient(int l);
/// f(z) = sum_{l <= L} mu_l phi_l(z).
double sobolev_local(double z, int basis_terms);
/// sum_r prod_k f(gamma^T x_r^(k)); the scales lambda_r do not enter.
double sobolev_truth(const CpForm& form, int basis_terms);

GeneratedData gen_low_rank(const DgpSpec& spec, std::size_t n);
GeneratedData gen_full_rank(const DgpSpec& spec, std::size_t n);
GeneratedData gen_sobolev(const DgpSpec& spec, std::size_t n);
GeneratedData generate(const DgpSpec& spec, std::size_t n);

/// Table-2 convergence-rate settings: 1 -> 10x10x10, 2 -> 3x3x3, 3 -> 10x3x3.
Dims sobolev_setting_dims(int setting);

}  // namespace amnr
