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

#include "amnr/error.hpp"
#include "amnr/kernels.hpp"
#include "test_util.hpp"

using namespace amnr;
using amnr::testing::random_unit;

namespace {

KernelSpec spec(KernelFamily f, double h, MaternNu nu = MaternNu::ThreeHalves) {
    KernelSpec s;
    s.family = f;
    s.nu = nu;
    s.bandwidth = h;
    return s;
}

Eigen::MatrixXd random_units(std::size_t dim, std::size_t count, Rng& rng) {
    Eigen::MatrixXd p(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
    for (Eigen::Index j = 0; j < p.cols(); ++j) p.col(j) = random_unit(dim, rng);
    return p;
}

}  // namespace

TEST_CASE("kernel_eval examples") {
    std::vector<double> u{0.6, 0.8}, v{0.6, 0.8}, w{0.0, 0.0};
    for (auto f : {KernelFamily::Matern, KernelFamily::Rbf}) CHECK(kernel_eval(spec(f, 0.7), u, v) == 1.0);
    // |u - w| = 1
    CHECK(kernel_eval(spec(KernelFamily::Rbf, 1.0), u, w) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(kernel_eval(spec(KernelFamily::Rbf, 1.0), u, w) == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(kernel_eval(spec(KernelFamily::Matern, 1.0, MaternNu::Half), u, w) == doctest::Approx(0.36788).epsilon(1e-5));

    double r = 0.9, h = 0.6, a3 = std::sqrt(3.0) * r / h, a5 = std::sqrt(5.0) * r / h;
    CHECK(kernel_from_squared_distance(spec(KernelFamily::Matern, h), r * r) ==
          doctest::Approx((1 + a3) * std::exp(-a3)).epsilon(1e-14));
    CHECK(kernel_from_squared_distance(spec(KernelFamily::Matern, h, MaternNu::FiveHalves), r * r) ==
          doctest::Approx((1 + a5 + a5 * a5 / 3) * std::exp(-a5)).epsilon(1e-14));

    std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(kernel_eval(spec(KernelFamily::Rbf, 1.0), u, three), ShapeError);
}

TEST_CASE("kernel spec validation and parsing") {
    CHECK_THROWS(spec(KernelFamily::Rbf, 0.0).validate());
    CHECK_THROWS(spec(KernelFamily::Rbf, -1.0).validate());
    CHECK(KernelSpec::parse("rbf", 2.0).family == KernelFamily::Rbf);
    CHECK(KernelSpec::parse("matern52").nu == MaternNu::FiveHalves);
    CHECK(KernelSpec::parse("matern12").family_name() == "matern12");
    CHECK_THROWS(KernelSpec::parse("cosine"));
}

TEST_CASE("kernel symmetry and range") {
    Rng rng(4);
    for (auto nu : {MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves}) {
        auto s = spec(KernelFamily::Matern, 0.4, nu);
        for (int t = 0; t < 50; ++t) {
            Eigen::VectorXd a = random_unit(4, rng), b = random_unit(4, rng);
            double ab = kernel_eval(s, {a.data(), 4}, {b.data(), 4});
            double ba = kernel_eval(s, {b.data(), 4}, {a.data(), 4});
            CHECK(ab == ba);
            CHECK(ab > 0);
            CHECK(ab <= 1);
        }
    }
}

TEST_CASE("gram examples") {
    Rng rng(7);
    auto s = spec(KernelFamily::Matern, 0.5);

    Eigen::MatrixXd one = random_units(3, 1, rng);
    GramMatrix g1 = gram(s, one);
    CHECK(g1.size() == 1);
    CHECK(g1.matrix(0, 0) == 1.0 + g1.jitter);

    Eigen::MatrixXd dup(3, 2);
    dup.col(0) = random_unit(3, rng);
    dup.col(1) = dup.col(0);
    GramMatrix g2 = gram(s, dup);
    CHECK(Eigen::LLT<Eigen::MatrixXd>(kernel_matrix(s, dup)).info() != Eigen::Success);
    CHECK(g2.jitter >= 1e-10);
    CHECK(g2.jitter <= 1e-4);
    CHECK(g2.cholesky.info() == Eigen::Success);

    Eigen::MatrixXd pts = random_units(4, 5, rng);
    GramMatrix g5 = gram(s, pts);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) {
            double oracle = kernel_eval(s, {pts.col(i).data(), 4}, {pts.col(j).data(), 4});
            if (i == j) oracle += g5.jitter;
            CHECK(std::abs(g5.matrix(i, j) - oracle) < 1e-14);
        }
    Eigen::MatrixXd l = g5.lower();
    CHECK((l * l.transpose() - g5.matrix).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gram matrices are PSD and diagonal is one plus jitter") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        Eigen::MatrixXd pts = random_units(3, 30, rng);
        auto s = spec(t % 2 ? KernelFamily::Rbf : KernelFamily::Matern, 0.3 + 0.2 * t);
        Eigen::MatrixXd raw = kernel_matrix(s, pts);
        CHECK((raw - raw.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(raw);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        GramMatrix g = gram(s, pts);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(g.matrix);
        CHECK(eg.eigenvalues().minCoeff() > 0);
        for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(g.matrix(i, i) == 1.0 + g.jitter);
    }
}

TEST_CASE("jitter cap raises IllConditionedError with the cluster") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 2, 0, 2, 1, 0, 0, 0, 1;
    Eigen::MatrixXd pts(2, 3);
    pts << 1, 1, 0, 0, 0, 1;
    try {
        factorize(m, {}, 0.0, &pts);
        FAIL("expected IllConditionedError");
    } catch (const IllConditionedError& e) {
        CHECK(e.cluster() == std::vector<std::size_t>{0, 1});
    }
}

TEST_CASE("RBF gram of equally spaced collinear points is Toeplitz") {
    Eigen::MatrixXd pts(2, 5);
    for (int i = 0; i < 5; ++i) pts.col(i) << 0.1 * i, 0.2 * i;
    Eigen::MatrixXd k = kernel_matrix(spec(KernelFamily::Rbf, 0.3), pts);
    for (int i = 1; i < 5; ++i)
        for (int j = 1; j < 5; ++j) CHECK(k(i, j) == doctest::Approx(k(i - 1, j - 1)).epsilon(1e-14));
}

TEST_CASE("bandwidth grid examples") {
    Eigen::MatrixXd two(2, 2);
    two << 0, 1, 0, 0;
    CHECK(bandwidth_grid(two) == std::vector<double>{0.25, 0.5, 1, 2, 4});
    CHECK(bandwidth_grid(Eigen::MatrixXd::Ones(3, 4)) == std::vector<double>{0.1, 0.5, 1.0});

    Rng rng(9);
    Eigen::MatrixXd pts = random_units(3, 9, rng);
    auto g = bandwidth_grid(pts), gc = bandwidth_grid(pts * 3.0);
    REQUIRE(g.size() == gc.size());
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(gc[i] == doctest::Approx(3.0 * g[i]).epsilon(1e-13));
    CHECK(g[2] == doctest::Approx(median_pairwise_distance(pts)));

    double mult[] = {2.0, 8.0};
    auto gm = bandwidth_grid(pts, mult);
    CHECK(gm[1] == doctest::Approx(8.0 * g[2]));
    CHECK_THROWS(bandwidth_grid(Eigen::MatrixXd::Ones(3, 1)));
}
