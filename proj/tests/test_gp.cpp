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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "amnr/gp.hpp"
#include "test_util.hpp"

using namespace amnr;

TEST_CASE("identity gram samples: mean and covariance") {
    const Eigen::Index p = 4, Q = 100000;
    GramMatrix g = factorize(Eigen::MatrixXd::Identity(p, p));
    MvnSampler s(g, 42);
    Eigen::MatrixXd x = s.sample(Q);
    REQUIRE(x.rows() == Q);
    REQUIRE(x.cols() == p);
    Eigen::RowVectorXd mean = x.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) CHECK(std::abs(mean[j]) < 4.0 / std::sqrt(double(Q)));
    Eigen::MatrixXd cov = (x.rowwise() - mean).transpose() * (x.rowwise() - mean) / double(Q - 1);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            if (i != j) CHECK(std::abs(cov(i, j)) < 0.02);
}

TEST_CASE("p=1 samples pass a Kolmogorov-Smirnov check") {
    const Eigen::Index Q = 100000;
    MvnSampler s(factorize(Eigen::MatrixXd::Ones(1, 1)), 7);
    Eigen::MatrixXd x = s.sample(Q);
    std::vector<double> v(x.data(), x.data() + Q);
    std::sort(v.begin(), v.end());
    double ks = 0;
    for (Eigen::Index i = 0; i < Q; ++i) {
        double cdf = 0.5 * std::erfc(-v[i] / std::numbers::sqrt2);
        ks = std::max({ks, std::abs(cdf - double(i) / Q), std::abs(cdf - double(i + 1) / Q)});
    }
    CHECK(ks < 0.01);
}

TEST_CASE("sampler reproduces L L^T and is seed deterministic") {
    Rng rng(3);
    Eigen::MatrixXd pts(3, 6);
    for (int j = 0; j < 6; ++j) pts.col(j) = amnr::testing::random_unit(3, rng);
    GramMatrix g = gram(KernelSpec{}, pts);
    MvnSampler a(g, 5), b(g, 5);
    CHECK((a.lower() * a.lower().transpose() - g.matrix).cwiseAbs().maxCoeff() < 1e-8);
    Eigen::MatrixXd first = a.sample(10);
    CHECK(first == b.sample(10));
    CHECK(a.sample(10) != first);  // the stream continues
}

TEST_CASE("gp regression examples") {
    Eigen::MatrixXd x(1, 5);
    x << 0.0, 0.7, 1.4, 2.1, 2.8;
    Eigen::VectorXd y = x.row(0).array().sin().transpose();
    KernelSpec s = KernelSpec::parse("rbf", 0.8);
    Eigen::MatrixXd q(1, 4);
    q << 0.3, 1.0, 2.5, 0.7;

    GpPrediction zero = gp_fit_predict(x, Eigen::VectorXd::Zero(5), s, 0.1, q);
    CHECK(zero.mean.cwiseAbs().maxCoeff() == 0.0);

    GpRegressor interp(x, y, s, 0.0);
    Eigen::VectorXd at_train = interp.predict_mean(x);
    CHECK((at_train - y).cwiseAbs().maxCoeff() < 1e-8);

    // dense-inverse oracle
    const double noise = 0.05;
    GpPrediction p = gp_fit_predict(x, y, s, noise, q);
    Eigen::MatrixXd k = kernel_matrix(s, x) + noise * Eigen::MatrixXd::Identity(5, 5);
    Eigen::MatrixXd kinv = k.inverse();
    Eigen::MatrixXd ks = cross_kernel(s, x, q);
    Eigen::VectorXd mean = ks.transpose() * kinv * y;
    Eigen::VectorXd var = (Eigen::VectorXd::Ones(4) - (ks.transpose() * kinv * ks).diagonal());
    CHECK((p.mean - mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((p.variance - var).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gp posterior is permutation invariant with bounded variance") {
    Rng rng(12);
    Eigen::MatrixXd x(3, 12);
    for (int j = 0; j < 12; ++j) x.col(j) = amnr::testing::random_unit(3, rng);
    Eigen::VectorXd y = Eigen::VectorXd::Random(12);
    Eigen::MatrixXd q(3, 8);
    for (int j = 0; j < 8; ++j) q.col(j) = amnr::testing::random_unit(3, rng);
    KernelSpec s = KernelSpec::parse("matern32", 0.6);

    GpPrediction a = gp_fit_predict(x, y, s, 0.2, q);
    std::vector<int> order(12);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd xp(3, 12);
    Eigen::VectorXd yp(12);
    for (int j = 0; j < 12; ++j) {
        xp.col(j) = x.col(order[j]);
        yp[j] = y[order[j]];
    }
    GpPrediction b = gp_fit_predict(xp, yp, s, 0.2, q);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
    for (Eigen::Index i = 0; i < 8; ++i) {
        CHECK(a.variance[i] >= 0);
        CHECK(a.variance[i] <= 1.0 + 1e-10);
    }

    // linear in the targets
    GpPrediction c = gp_fit_predict(x, 2.0 * y, s, 0.2, q);
    CHECK((c.mean - 2.0 * a.mean).cwiseAbs().maxCoeff() < 1e-12);
}
