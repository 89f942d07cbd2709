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
#include <cstdint>
#include <span>
#include <vector>

#include "amnr/dataset.hpp"
#include "amnr/kernels.hpp"
#include "amnr/tensor.hpp"

namespace amnr {

// ---------------------------------------------------------------------------
// Tensor linear regression: y = b0 + <B, X>, B = sum_m b_m^(1) (x) ... (x) b_m^(K).

struct TlrOptions {
    int rank = 2;  ///< M_B
    double ridge = 1e-6;
    int max_sweeps = 200;
    double tol = 1e-8;
    bool intercept = true;
    std::uint64_t seed = 7;
};

struct TlrModel {
    Dims dims;
    std::vector<Eigen::MatrixXd> factors;  ///< per mode, I_k x M_B; column m is b_m^(k)
    double intercept = 0.0;
    double ridge = 0.0;                    ///< value actually used
    /// Penalized objective SSE + ridge * sum ||b||^2 after each block update.
    std::vector<double> objective_history;
    int sweeps = 0;

    std::size_t rank() const { return factors.empty() ? 0 : static_cast<std::size_t>(factors[0].cols()); }
};

/// Dense weight tensor B.
Tensor tlr_weight_tensor(const TlrModel& model);

/// sum_m sum_r lambda_r prod_k <b_m^(k), x_r^(k)>, i.e. <B, X> without forming B or X.
double factorized_inner(std::span<const Eigen::MatrixXd> b_factors, const CpForm& x);

/// Alternating ridge regression over modes. With ridge = 0 and singular
/// normal equations the ridge is raised to 1e-8 (with a warning).
TlrModel tlr_fit(const Dataset& data, const TlrOptions& options = {});

/// intercept + <B, X> with the dense inner product.
std::vector<double> tlr_predict(const TlrModel& model, std::span<const Tensor> inputs);
/// intercept + factorized inner product over each input's rank-`input_rank` CP form.
std::vector<double> tlr_predict(const TlrModel& model, std::span<const Tensor> inputs, std::size_t input_rank,
                                const CpOptions& cp = {});
std::vector<double> tlr_predict_forms(const TlrModel& model, std::span<const CpForm> forms);

// ---------------------------------------------------------------------------
// Tensor GP regression on flattened inputs.

Eigen::VectorXd flatten(const Tensor& x);
Tensor unflatten(const Eigen::VectorXd& v, const Dims& dims);
/// Columns are flattened tensors.
Eigen::MatrixXd flatten_all(std::span<const Tensor> inputs);

struct TgpOptions {
    KernelSpec kernel;          ///< family; bandwidth is used only without grid search
    double noise_variance = 1.0;
    bool grid_search = true;    ///< pick the bandwidth on a content-keyed holdout third
    /// grid = median pairwise distance of the flattened inputs times these
    std::vector<double> grid_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
    bool center = true;         ///< subtract the training mean of Y
};

struct TgpResult {
    std::vector<double> predictions;
    double bandwidth = 0.0;
};

TgpResult tgp_fit_predict(const Dataset& train, std::span<const Tensor> query, const TgpOptions& options = {});

}  // namespace amnr
