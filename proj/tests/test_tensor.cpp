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
#include "amnr/tensor.hpp"
#include "test_util.hpp"

using namespace amnr;
using amnr::testing::random_form;
using amnr::testing::random_tensor;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.dims() == b.dims());
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double relative_error(const Tensor& x, const CpForm& c) {
    Tensor r = reconstruct(c, x.dims());
    double num = 0;
    for (std::size_t i = 0; i < x.size(); ++i) num += (x[i] - r[i]) * (x[i] - r[i]);
    return std::sqrt(num) / x.frobenius_norm();
}

}  // namespace

TEST_CASE("tensor construction checks shape and finiteness") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor({2, 1}, {1, NAN}), PreconditionError);
    CHECK_THROWS(Tensor(Dims{}));
    CHECK_THROWS(Tensor(Dims{2, 0}));
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    std::size_t idx[] = {1, 2};
    CHECK(t.at(idx) == 5);
    CHECK(t.flat_index(idx) == 5);
}

TEST_CASE("rank_one examples") {
    Eigen::VectorXd e[] = {vec({1, 0}), vec({0, 1})};
    Tensor t = rank_one(1.0, e);
    CHECK(t == Tensor({2, 2}, {0, 1, 0, 0}));

    Tensor z = rank_one(0.0, e);
    for (double v : z.data()) CHECK(v == 0.0);

    double s = 1 / std::sqrt(2.0);
    Eigen::VectorXd h[] = {vec({s, s}), vec({s, s})};
    Tensor ones = rank_one(2.0, h);
    for (double v : ones.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    Eigen::VectorXd bad[] = {vec({1, 1}), vec({1, 0})};
    CHECK_THROWS_AS(rank_one(1.0, bad), NormalizationError);
}

TEST_CASE("inner product examples") {
    Tensor eye({2, 2}, {1, 0, 0, 1});
    CHECK(inner(eye, eye) == 2.0);
    Tensor a({2, 2}, {1, 0, 0, 0}), b({2, 2}, {0, 3, 4, 0});
    CHECK(inner(a, b) == 0.0);
    CHECK_THROWS_AS(inner(a, Tensor({4}, {1, 2, 3, 4})), ShapeError);

    Rng rng(3);
    Tensor x = random_tensor({3, 3}, rng), y = random_tensor({3, 3}, rng);
    double oracle = 0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            std::size_t ij[] = {i, j};
            oracle += x.at(ij) * y.at(ij);
        }
    CHECK(std::abs(inner(x, y) - oracle) < 1e-12);
    CHECK(inner(x, y) == inner(y, x));
    CHECK(inner(x, x) == doctest::Approx(x.frobenius_norm() * x.frobenius_norm()).epsilon(1e-14));
}

TEST_CASE("unfold matches index arithmetic") {
    Rng rng(5);
    Tensor x = random_tensor({2, 3, 4}, rng);
    Eigen::MatrixXd u1 = unfold(x, 1);
    REQUIRE(u1.rows() == 3);
    REQUIRE(u1.cols() == 8);
    // every entry of the tensor appears exactly once in row j of mode 1
    for (std::size_t j = 0; j < 3; ++j) {
        double row_sum = 0, oracle = 0;
        for (Eigen::Index c = 0; c < u1.cols(); ++c) row_sum += u1(static_cast<Eigen::Index>(j), c);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t l = 0; l < 4; ++l) {
                std::size_t idx[] = {i, j, l};
                oracle += x.at(idx);
            }
        CHECK(row_sum == doctest::Approx(oracle).epsilon(1e-13));
    }
}

TEST_CASE("cp_als on diag(3,1)") {
    Tensor d({2, 2}, {3, 0, 0, 1});
    CpAlsResult res = cp_als(d, 2);
    CHECK(res.converged);
    const CpForm& c = res.form;
    REQUIRE(c.rank() == 2);
    CHECK(c.lambdas[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(c.lambdas[1] == doctest::Approx(1.0).epsilon(1e-10));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(std::abs(c.factors[k](0, 0) - 1.0) < 1e-10);
        CHECK(std::abs(c.factors[k](1, 0)) < 1e-10);
        CHECK(std::abs(c.factors[k](1, 1) - 1.0) < 1e-10);
        CHECK(std::abs(c.factors[k](0, 1)) < 1e-10);
    }
    CHECK(max_abs_diff(reconstruct(c, d.dims()), d) < 1e-10);
}

TEST_CASE("cp_als recovers a 3x3x3 rank-2 tensor") {
    Rng rng(11);
    CpForm truth = random_form({3, 3, 3}, {5, 2}, rng);
    Tensor x = reconstruct(truth);
    CpAlsResult res = cp_als(x, 2);
    CHECK(relative_error(x, res.form) < 1e-6);
    res.form.validate();
}

TEST_CASE("cp_als on the zero tensor") {
    CpForm c = cp_decompose(Tensor({3, 2}), 1);
    REQUIRE(c.rank() == 1);
    CHECK(c.lambdas[0] == 0.0);
    c.validate();
}

TEST_CASE("cp_als objective is nonincreasing") {
    Rng rng(17);
    for (int t = 0; t < 10; ++t) {
        Tensor x = random_tensor({4, 5, 3}, rng);
        CpAlsResult res = cp_als(x, 3, {.max_iters = 80, .tol = 0});
        const auto& h = res.objective_history;
        REQUIRE(h.size() >= 2);
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] * (1 + 1e-12) + 1e-15);
    }
}

TEST_CASE("cp_als round trip on exact low-rank tensors") {
    Rng rng(23);
    std::uniform_int_distribution<std::size_t> dim(1, 12), order(2, 3), rank(1, 4);
    std::uniform_real_distribution<double> lam(0.5, 5.0);
    for (int t = 0; t < 300; ++t) {
        std::size_t K = order(rng), R = rank(rng);
        Dims dims;
        for (std::size_t k = 0; k < K; ++k) dims.push_back(std::max<std::size_t>(dim(rng), R));
        std::vector<double> l(R);
        for (auto& v : l) v = lam(rng);
        std::sort(l.rbegin(), l.rend());
        Tensor x = reconstruct(random_form(dims, l, rng));
        CHECK(relative_error(x, cp_decompose(x, R)) < 1e-6);
    }
}

TEST_CASE("cp_als escapes a swamp of nearly collinear factors") {
    Rng rng(41);
    CpForm c = random_form({4, 4, 4}, {3.0, 2.0, 1.0}, rng);
    // pull components 1 and 2 towards component 0 on every mode
    for (auto& f : c.factors) {
        for (Eigen::Index r = 1; r < 3; ++r) {
            f.col(r) = f.col(0) + 0.15 * f.col(r);
            f.col(r).normalize();
        }
    }
    Tensor x = reconstruct(c);
    CHECK(relative_error(x, cp_decompose(x, 3)) < 1e-6);
}

TEST_CASE("reconstruct examples") {
    Rng rng(29);
    CpForm one = random_form({3, 4}, {2.5}, rng);
    Eigen::VectorXd vs[] = {one.factors[0].col(0), one.factors[1].col(0)};
    CHECK(reconstruct(one) == rank_one(2.5, vs));

    CpForm two;
    two.lambdas = {2, 1};
    two.factors = {Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK(reconstruct(two) == Tensor({2, 2}, {2, 0, 0, 1}));
    CHECK_THROWS_AS(reconstruct(two, Dims{3, 2}), ShapeError);
}

TEST_CASE("canonicalize is idempotent and preserves the tensor") {
    Rng rng(31);
    for (int t = 0; t < 20; ++t) {
        CpForm c = random_form({3, 4, 2}, {1.0, 3.0, 2.0}, rng);
        c.factors[0].col(1) *= -1;
        CpForm a = canonicalize(c);
        CpForm b = canonicalize(a);
        CHECK(a.lambdas == b.lambdas);
        for (std::size_t k = 0; k < 3; ++k) CHECK(a.factors[k] == b.factors[k]);
        CHECK(max_abs_diff(reconstruct(a), reconstruct(c)) < 1e-13);
        a.validate();
        // sign rule on modes 1..K-1
        for (std::size_t r = 0; r < a.rank(); ++r)
            for (std::size_t k = 0; k + 1 < 3; ++k) {
                Eigen::Index imax;
                a.factor(r, k).cwiseAbs().maxCoeff(&imax);
                CHECK(a.factor(r, k)[imax] > 0);
            }
    }
}

TEST_CASE("random_sign_flip is exact") {
    Rng rng(37);
    CpForm c = random_form({4, 3, 5}, {2.0, 1.0}, rng);
    Tensor base = reconstruct(c);
    double drift = 0;
    bool some_flip = false;
    for (int t = 0; t < 1000; ++t) {
        CpForm f = random_sign_flip(c, rng);
        drift = std::max(drift, max_abs_diff(reconstruct(f), base));
        for (std::size_t k = 0; k < 3; ++k) some_flip |= f.factors[k] != c.factors[k];
    }
    CHECK(drift == 0.0);
    CHECK(some_flip);

    Rng r2(1);
    CpForm m = random_form({2, 2}, {1.0}, r2);
    CHECK_THROWS(random_sign_flip(random_form({3}, {1.0}, r2), r2));
    // K=2 flips are either none or both
    for (int t = 0; t < 50; ++t) {
        CpForm f = random_sign_flip(m, r2);
        bool f0 = f.factors[0] != m.factors[0], f1 = f.factors[1] != m.factors[1];
        CHECK(f0 == f1);
    }
}
