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

#include "amnr/baselines.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "amnr/diagnostics.hpp"
#include "amnr/error.hpp"
#include "amnr/gp.hpp"
#include "amnr/rng.hpp"

namespace amnr {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// X contracted with b_m^(j) for every mode j != k.
VectorXd partial_contraction(const Tensor& x, const std::vector<MatrixXd>& factors, std::size_t m, std::size_t k) {
    std::vector<double> cur(x.data().begin(), x.data().end());
    Dims dims = x.dims();
    Dims next;
    for (std::size_t j = dims.size(); j-- > 0;) {
        if (j == k) continue;
        const auto& f = factors[j];
        cur = contract_mode(cur, dims, j, std::span<const double>(f.data() + static_cast<Index>(m) * f.rows(), f.rows()), next);
        dims = next;
    }
    return Eigen::Map<const VectorXd>(cur.data(), static_cast<Index>(cur.size()));
}

double penalty(const std::vector<MatrixXd>& factors) {
    double s = 0.0;
    for (const auto& f : factors) s += f.squaredNorm();
    return s;
}

}  // namespace

Tensor tlr_weight_tensor(const TlrModel& model) {
    CpForm b;
    b.factors = model.factors;
    b.lambdas.assign(model.rank(), 1.0);
    // Factors are not unit-norm; reconstruct() does not require it.
    return reconstruct(b, model.dims);
}

double factorized_inner(std::span<const MatrixXd> b_factors, const CpForm& x) {
    if (b_factors.size() != x.order()) throw ShapeError("factorized_inner: order mismatch");
    for (std::size_t k = 0; k < x.order(); ++k) {
        if (b_factors[k].rows() != x.factors[k].rows()) throw ShapeError("factorized_inner: dimension mismatch");
    }
    const Index MB = b_factors[0].cols();
    // prod over k of the (M_B x R) matrices of inner products, entrywise.
    MatrixXd prods = MatrixXd::Ones(MB, static_cast<Index>(x.rank()));
    for (std::size_t k = 0; k < x.order(); ++k) prods = prods.cwiseProduct(b_factors[k].transpose() * x.factors[k]);
    double total = 0.0;
    for (Index m = 0; m < MB; ++m) {
        for (std::size_t r = 0; r < x.rank(); ++r) total += x.lambdas[r] * prods(m, static_cast<Index>(r));
    }
    return total;
}

TlrModel tlr_fit(const Dataset& data, const TlrOptions& options) {
    data.validate();
    if (options.rank < 1) throw ConfigError("TLR: rank must be >= 1");
    if (!(options.ridge >= 0.0)) throw ConfigError("TLR: ridge must be >= 0");
    const std::size_t n = data.size();
    if (n < 1) throw PreconditionError("TLR: empty dataset");
    const std::size_t K = data.dims.size();
    const auto MB = static_cast<Index>(options.rank);

    TlrModel model;
    model.dims = data.dims;
    model.ridge = options.ridge;
    Rng rng = make_rng(options.seed, {label("tlr-init")});
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < K; ++k) {
        MatrixXd f(static_cast<Index>(data.dims[k]), MB);
        for (Index i = 0; i < f.size(); ++i) f.data()[i] = normal(rng) / std::sqrt(static_cast<double>(data.dims[k]));
        model.factors.push_back(std::move(f));
    }
    const VectorXd y = Eigen::Map<const VectorXd>(data.responses.data(), static_cast<Index>(n));
    bool escalated = false;

    double previous = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
        double objective = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const Index Ik = static_cast<Index>(data.dims[k]);
            MatrixXd phi(static_cast<Index>(n), MB * Ik);
            for (std::size_t i = 0; i < n; ++i) {
                for (Index m = 0; m < MB; ++m) {
                    phi.row(static_cast<Index>(i)).segment(m * Ik, Ik) =
                        partial_contraction(data.inputs[i], model.factors, static_cast<std::size_t>(m), k).transpose();
                }
            }
            VectorXd phi_mean = VectorXd::Zero(phi.cols());
            double y_mean = 0.0;
            if (options.intercept) {
                phi_mean = phi.colwise().mean().transpose();
                y_mean = y.mean();
            }
            const MatrixXd pc = phi.rowwise() - phi_mean.transpose();
            const VectorXd yc = y.array() - y_mean;
            MatrixXd normal_eq = pc.transpose() * pc;
            const VectorXd rhs = pc.transpose() * yc;

            auto solve = [&](double ridge) {
                MatrixXd a = normal_eq;
                a.diagonal().array() += ridge;
                Eigen::LLT<MatrixXd> llt(a);
                const bool ok = llt.info() == Eigen::Success && llt.rcond() > 1e-14;
                return std::pair{ok, VectorXd(ok ? VectorXd(llt.solve(rhs)) : VectorXd())};
            };
            auto [ok, theta] = solve(model.ridge);
            if (!ok && model.ridge == 0.0) {
                model.ridge = 1e-8;
                if (!escalated) warn("TLR: singular normal equations with ridge=0; using ridge=1e-8");
                escalated = true;
                std::tie(ok, theta) = solve(model.ridge);
            }
            if (!ok) {
                Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(normal_eq + model.ridge * MatrixXd::Identity(normal_eq.rows(), normal_eq.cols()));
                theta = cod.solve(rhs);
            }
            for (Index m = 0; m < MB; ++m) model.factors[k].col(m) = theta.segment(m * Ik, Ik);
            model.intercept = options.intercept ? y_mean - phi_mean.dot(theta) : 0.0;
            const VectorXd resid = yc - pc * theta;
            objective = resid.squaredNorm() + model.ridge * penalty(model.factors);
            model.objective_history.push_back(objective);
        }
        model.sweeps = sweep;
        if (objective == 0.0) break;
        if (std::isfinite(previous) && std::abs(previous - objective) <= options.tol * std::max(previous, 1e-300)) break;
        previous = objective;
    }
    return model;
}

std::vector<double> tlr_predict(const TlrModel& model, std::span<const Tensor> inputs) {
    const Tensor b = tlr_weight_tensor(model);
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) {
        if (x.dims() != model.dims) throw ShapeError("TLR predict: input dims do not match the model");
        out.push_back(model.intercept + inner(b, x));
    }
    return out;
}

std::vector<double> tlr_predict_forms(const TlrModel& model, std::span<const CpForm> forms) {
    std::vector<double> out;
    out.reserve(forms.size());
    for (const auto& f : forms) {
        if (f.dims() != model.dims) throw ShapeError("TLR predict: input dims do not match the model");
        out.push_back(model.intercept + factorized_inner(model.factors, f));
    }
    return out;
}

std::vector<double> tlr_predict(const TlrModel& model, std::span<const Tensor> inputs, std::size_t input_rank,
                                const CpOptions& cp) {
    std::vector<CpForm> forms;
    forms.reserve(inputs.size());
    for (const auto& x : inputs) {
        if (x.dims() != model.dims) throw ShapeError("TLR predict: input dims do not match the model");
        forms.push_back(cp_decompose(x, input_rank, cp));
    }
    return tlr_predict_forms(model, forms);
}

VectorXd flatten(const Tensor& x) {
    return Eigen::Map<const VectorXd>(x.data().data(), static_cast<Index>(x.size()));
}

Tensor unflatten(const VectorXd& v, const Dims& dims) {
    if (static_cast<std::size_t>(v.size()) != element_count(dims)) throw ShapeError("unflatten: length mismatch");
    return Tensor(dims, std::vector<double>(v.data(), v.data() + v.size()));
}

MatrixXd flatten_all(std::span<const Tensor> inputs) {
    if (inputs.empty()) return MatrixXd();
    MatrixXd out(static_cast<Index>(inputs[0].size()), static_cast<Index>(inputs.size()));
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].dims() != inputs[0].dims()) throw ShapeError("flatten_all: tensors do not share dims");
        out.col(static_cast<Index>(i)) = flatten(inputs[i]);
    }
    return out;
}

namespace {

std::vector<double> gp_predict_centered(const MatrixXd& x, const VectorXd& y, const KernelSpec& spec, double noise,
                                        bool center, const MatrixXd& query) {
    const double offset = center ? y.mean() : 0.0;
    const VectorXd yc = y.array() - offset;
    const VectorXd mean = GpRegressor(x, yc, spec, noise).predict_mean(query);
    std::vector<double> out(static_cast<std::size_t>(mean.size()));
    for (Index i = 0; i < mean.size(); ++i) out[static_cast<std::size_t>(i)] = mean[i] + offset;
    return out;
}

}  // namespace

TgpResult tgp_fit_predict(const Dataset& train, std::span<const Tensor> query, const TgpOptions& options) {
    train.validate();
    if (train.size() < 1) throw PreconditionError("TGP: empty training set");
    for (const auto& q : query) {
        if (q.dims() != train.dims) throw ShapeError("TGP: query dims do not match training dims");
    }
    const MatrixXd x = flatten_all(train.inputs);
    const VectorXd y = Eigen::Map<const VectorXd>(train.responses.data(), static_cast<Index>(train.size()));
    TgpResult result;
    KernelSpec spec = options.kernel;

    if (options.grid_search && train.size() >= 2) {
        const auto grid = bandwidth_grid(x, options.grid_multipliers);
        const ContentSplit split = content_holdout_split(train);
        if (split.fit.empty() || split.holdout.empty()) {
            spec.bandwidth = grid[grid.size() / 2];
        } else {
            MatrixXd xf(x.rows(), static_cast<Index>(split.fit.size()));
            VectorXd yf(static_cast<Index>(split.fit.size()));
            for (std::size_t j = 0; j < split.fit.size(); ++j) {
                xf.col(static_cast<Index>(j)) = x.col(static_cast<Index>(split.fit[j]));
                yf[static_cast<Index>(j)] = y[static_cast<Index>(split.fit[j])];
            }
            MatrixXd xh(x.rows(), static_cast<Index>(split.holdout.size()));
            for (std::size_t j = 0; j < split.holdout.size(); ++j) xh.col(static_cast<Index>(j)) = x.col(static_cast<Index>(split.holdout[j]));
            double best = std::numeric_limits<double>::infinity();
            for (double h : grid) {
                const auto pred = gp_predict_centered(xf, yf, spec.with_bandwidth(h), options.noise_variance, options.center, xh);
                double mse = 0.0;
                for (std::size_t j = 0; j < pred.size(); ++j) {
                    const double r = pred[j] - y[static_cast<Index>(split.holdout[j])];
                    mse += r * r;
                }
                mse /= static_cast<double>(pred.size());
                if (mse < best) {
                    best = mse;
                    spec.bandwidth = h;
                }
            }
        }
    }
    result.bandwidth = spec.bandwidth;
    result.predictions = query.empty() ? std::vector<double>{}
                                       : gp_predict_centered(x, y, spec, options.noise_variance, options.center, flatten_all(query));
    return result;
}

}  // namespace amnr
