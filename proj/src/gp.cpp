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

#include "amnr/gp.hpp"

#include "amnr/error.hpp"

namespace amnr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MvnSampler::MvnSampler(const GramMatrix& gram, std::uint64_t seed) : lower_(gram.lower()), rng_(seed) {}

MatrixXd standard_normal_rows(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> normal;
    MatrixXd z(rows, cols);
    for (Index q = 0; q < rows; ++q) {
        for (Index j = 0; j < cols; ++j) z(q, j) = normal(rng);
    }
    return z;
}

MatrixXd MvnSampler::sample(Index count) {
    if (count < 1) throw PreconditionError("MvnSampler::sample: count must be >= 1");
    MatrixXd zt = standard_normal_rows(count, dimension(), rng_).transpose();
    zt = lower_.triangularView<Eigen::Lower>() * zt;
    return zt.transpose();
}

GpRegressor::GpRegressor(MatrixXd points, VectorXd targets, KernelSpec spec, double noise_variance,
                         const JitterPolicy& policy)
    : points_(std::move(points)), spec_(spec), noise_variance_(noise_variance) {
    if (points_.cols() != targets.size()) throw ShapeError("GpRegressor: points and targets differ in count");
    if (points_.cols() < 1) throw PreconditionError("GpRegressor: need at least one training point");
    if (!(noise_variance >= 0.0)) throw PreconditionError("GpRegressor: noise variance must be >= 0");
    spec_.validate();
    system_ = gram(spec_, points_, policy, noise_variance_);
    alpha_ = system_.cholesky.solve(targets);
}

VectorXd GpRegressor::predict_mean(const MatrixXd& query) const {
    return cross_kernel(spec_, query, points_) * alpha_;
}

GpPrediction GpRegressor::predict(const MatrixXd& query) const {
    const MatrixXd ks = cross_kernel(spec_, points_, query);  // n x m
    GpPrediction out;
    out.mean = ks.transpose() * alpha_;
    const MatrixXd v = system_.cholesky.matrixL().solve(ks);
    out.variance = (1.0 - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
    return out;
}

GpPrediction gp_fit_predict(const MatrixXd& train_x, const VectorXd& train_y, const KernelSpec& spec,
                            double noise_variance, const MatrixXd& query_x) {
    return GpRegressor(train_x, train_y, spec, noise_variance).predict(query_x);
}

}  // namespace amnr
