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

#include "amnr/kernels.hpp"
#include "amnr/rng.hpp"

namespace amnr {

/// Draws from N(0, G) for a factorized Gram matrix G via its Cholesky factor.
class MvnSampler {
public:
    MvnSampler(const GramMatrix& gram, std::uint64_t seed);

    Eigen::Index dimension() const { return lower_.rows(); }
    const Eigen::MatrixXd& lower() const { return lower_; }

    /// Q x p matrix; row q is L z_q with z_q standard normal. Successive calls
    /// continue the same stream.
    Eigen::MatrixXd sample(Eigen::Index count);

private:
    Eigen::MatrixXd lower_;
    Rng rng_;
};

/// Fills a Q x p matrix with standard normals, row by row.
Eigen::MatrixXd standard_normal_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng);

struct GpPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Exact GP regression with a unit-variance kernel and Gaussian noise.
class GpRegressor {
public:
    /// Points are columns. noise_variance may be 0; the jitter policy then
    /// keeps the system factorizable.
    GpRegressor(Eigen::MatrixXd points, Eigen::VectorXd targets, KernelSpec spec, double noise_variance,
                const JitterPolicy& policy = {});

    GpPrediction predict(const Eigen::MatrixXd& query) const;
    Eigen::VectorXd predict_mean(const Eigen::MatrixXd& query) const;

    const GramMatrix& system() const { return system_; }
    const KernelSpec& kernel() const { return spec_; }
    double noise_variance() const { return noise_variance_; }

private:
    Eigen::MatrixXd points_;
    KernelSpec spec_;
    double noise_variance_;
    GramMatrix system_;  ///< K + (noise + jitter) I
    Eigen::VectorXd alpha_;
};

GpPrediction gp_fit_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXd& train_y, const KernelSpec& spec,
                            double noise_variance, const Eigen::MatrixXd& query_x);

}  // namespace amnr
