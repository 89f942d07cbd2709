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

#include "amnr/amnr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "amnr/diagnostics.hpp"
#include "amnr/error.hpp"
#include "amnr/gp.hpp"
#include "amnr/simd.hpp"

namespace amnr {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

constexpr Index kPredictBatch = 64;

std::span<const double> col(const MatrixXd& m, Index c) {
    return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

std::span<double> col(MatrixXd& m, Index c) { return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())}; }

void check_forms(std::span<const CpForm> forms, const Dims& dims, std::size_t rank) {
    for (const auto& f : forms) {
        if (f.rank() != rank) throw ShapeError("AMNR: CP form rank does not match R");
        if (f.dims() != dims) throw ShapeError("AMNR: CP form dims do not match the model");
    }
}

// Accumulates G_q = sum_m sum_r lambda_r prod_k F_mk(q, column(r)) into `out`
// for one input, vectorized over q.
template <typename ColumnOf>
void accumulate_predictions(std::size_t M, std::size_t K, std::span<const double> lambdas, ColumnOf column_of,
                            std::span<double> out, std::vector<double>& scratch) {
    std::fill(out.begin(), out.end(), 0.0);
    scratch.resize(out.size());
    std::span<double> tmp(scratch);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t r = 0; r < lambdas.size(); ++r) {
            if (lambdas[r] == 0.0) continue;
            const auto first = column_of(m, 0, r);
            std::copy(first.begin(), first.end(), tmp.begin());
            for (std::size_t k = 1; k < K; ++k) simd::multiply(tmp, column_of(m, k, r));
            simd::axpy(out, lambdas[r], tmp);
        }
    }
}

}  // namespace

void AmnrConfig::validate() const {
    if (M < 1 || R < 1 || Q < 1) throw ConfigError("AMNR: M, R and Q must be >= 1");
    if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
        throw ConfigError("AMNR: noise variance must be positive and finite");
    }
    kernel.validate();
    if (estimator == Estimator::Collapsed && prediction == PredictionMode::ConditionalDraw) {
        throw ConfigError("AMNR: the collapsed estimator supports conditional-mean prediction only");
    }
}

WeightSummary normalize_weights(std::span<const double> fit_statistics, double noise_variance, LikelihoodForm form) {
    if (fit_statistics.empty()) throw PreconditionError("normalize_weights: no samples");
    if (!(noise_variance > 0.0)) throw PreconditionError("normalize_weights: noise variance must be positive");
    const double best = *std::min_element(fit_statistics.begin(), fit_statistics.end());
    const double scale = form == LikelihoodForm::Gaussian ? 1.0 / (2.0 * noise_variance) : 1.0 / std::sqrt(noise_variance);
    WeightSummary out;
    out.weights.resize(fit_statistics.size());
    double total = 0.0;
    for (std::size_t q = 0; q < fit_statistics.size(); ++q) {
        out.weights[q] = std::exp(-(fit_statistics[q] - best) * scale);
        total += out.weights[q];
    }
    double sq = 0.0;
    for (auto& w : out.weights) {
        w /= total;
        sq += w * w;
    }
    out.effective_sample_size = 1.0 / sq;
    return out;
}

double amnr_eval(const LocalValues& local, std::span<const double> lambdas) {
    if (lambdas.size() != local.R || local.values.size() != local.M * local.R * local.K) {
        throw ShapeError("amnr_eval: local values do not match (M, R, K) or lambdas");
    }
    double total = 0.0;
    for (std::size_t m = 0; m < local.M; ++m) {
        for (std::size_t r = 0; r < local.R; ++r) {
            double prod = lambdas[r];
            for (std::size_t k = 0; k < local.K; ++k) prod *= local(m, r, k);
            total += prod;
        }
    }
    return total;
}

LocalValues AmnrModel::training_local_values(std::size_t q, std::size_t i) const {
    const auto R = static_cast<std::size_t>(config_.R);
    const auto M = static_cast<std::size_t>(config_.M);
    LocalValues v(M, R, order());
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t k = 0; k < order(); ++k) {
                v(m, r, k) = local_samples(m, k)(static_cast<Index>(q), static_cast<Index>(i * R + r));
            }
        }
    }
    return v;
}

void AmnrModel::build_priors() {
    const std::size_t K = order();
    const auto R = static_cast<Index>(config_.R);
    const auto n = static_cast<Index>(forms_.size());
    points_.assign(K, MatrixXd());
    grams_.clear();
    for (std::size_t k = 0; k < K; ++k) {
        MatrixXd& pts = points_[k];
        pts.resize(static_cast<Index>(dims_[k]), n * R);
        for (Index i = 0; i < n; ++i) pts.middleCols(i * R, R) = forms_[static_cast<std::size_t>(i)].factors[k];
        grams_.push_back(gram(config_.kernel, pts, config_.jitter));
    }
}

double AmnrModel::log_marginal_likelihood() const {
    const double n = static_cast<double>(forms_.size());
    const double sigma2 = config_.noise_variance;
    double scale = 0.5, offset = -0.5 * n * std::log(2.0 * std::numbers::pi);
    if (config_.estimator == Estimator::Importance) {
        scale = config_.likelihood == LikelihoodForm::Gaussian ? 0.5 / sigma2 : 1.0 / std::sqrt(sigma2);
        offset -= 0.5 * n * std::log(sigma2);
    }
    const double best = *std::min_element(fit_statistics_.begin(), fit_statistics_.end());
    double total = 0.0;
    for (double v : fit_statistics_) total += std::exp(-(v - best) * scale);
    return offset - best * scale + std::log(total / static_cast<double>(fit_statistics_.size()));
}

std::size_t AmnrModel::collapsed_mode() const {
    return static_cast<std::size_t>(std::max_element(dims_.begin(), dims_.end()) - dims_.begin());
}

void AmnrModel::compute_fits() {
    const auto Q = static_cast<Index>(config_.Q);
    const auto R = static_cast<std::size_t>(config_.R);
    const std::size_t K = order();
    const std::size_t n = forms_.size();
    fitted_.resize(Q, static_cast<Index>(n));
    std::vector<double> scratch;
    for (std::size_t i = 0; i < n; ++i) {
        accumulate_predictions(
            static_cast<std::size_t>(config_.M), K, forms_[i].lambdas,
            [&](std::size_t m, std::size_t k, std::size_t r) {
                return col(samples_[m * K + k], static_cast<Index>(i * R + r));
            },
            col(fitted_, static_cast<Index>(i)), scratch);
    }
}

void AmnrModel::score_samples() {
    compute_fits();
    fit_statistics_.assign(static_cast<std::size_t>(config_.Q), 0.0);
    for (Index i = 0; i < fitted_.cols(); ++i) {
        simd::accumulate_squared_residual(fit_statistics_, responses_[static_cast<std::size_t>(i)], col(fitted_, i));
    }
    auto summary = normalize_weights(fit_statistics_, config_.noise_variance, config_.likelihood);
    weights_ = std::move(summary.weights);
    ess_ = summary.effective_sample_size;
}

// Given draw q of every mode but c, Y = sum_m A_m f_m^(c) + u with
// A_m[i, iR + r] = lambda_{r,i} prod_{k != c} f_m^(k)(x_{r,i}^(k)), so
// Y ~ N(0, C), C = sigma^2 I + sum_m A_m K_c A_m^T, and
// E[f_m^(c) | Y, q] = K_c A_m^T C^{-1} Y at the training factors.
void AmnrModel::collapse_mode() {
    const std::size_t K = order();
    const std::size_t c = collapsed_mode();
    const auto M = static_cast<std::size_t>(config_.M);
    const auto R = static_cast<Index>(config_.R);
    const auto n = static_cast<Index>(forms_.size());
    const auto Q = static_cast<Index>(config_.Q);
    const MatrixXd& kc = grams_[c].matrix;
    const Eigen::Map<const Eigen::VectorXd> y(responses_.data(), n);

    for (std::size_t m = 0; m < M; ++m) samples_[m * K + c].setZero(Q, n * R);
    fit_statistics_.assign(static_cast<std::size_t>(Q), 0.0);
    MatrixXd cov(n, n);
    std::vector<MatrixXd> bt(M, MatrixXd(n * R, n));  // K_c A_m^T
    std::vector<MatrixXd> coef(M, MatrixXd(R, n));    // column i holds a_m[i, :]
    Eigen::LLT<MatrixXd> llt;
    for (Index q = 0; q < Q; ++q) {
        cov.setZero();
        cov.diagonal().setConstant(config_.noise_variance);
        for (std::size_t m = 0; m < M; ++m) {
            MatrixXd& am = coef[m];
            for (Index i = 0; i < n; ++i) {
                const auto& lam = forms_[static_cast<std::size_t>(i)].lambdas;
                for (Index r = 0; r < R; ++r) {
                    double v = lam[static_cast<std::size_t>(r)];
                    for (std::size_t k = 0; k < K; ++k)
                        if (k != c) v *= samples_[m * K + k](q, i * R + r);
                    am(r, i) = v;
                }
            }
            MatrixXd& b = bt[m];
            for (Index i = 0; i < n; ++i) b.col(i).noalias() = kc.middleCols(i * R, R) * am.col(i);
            // cov(j, i) += sum_s a_m[j, s] * b(jR + s, i)
            for (Index i = 0; i < n; ++i) {
                const double* bc = b.col(i).data();
                double* out = cov.col(i).data();
                for (Index j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (Index r = 0; r < R; ++r) acc += am(r, j) * bc[j * R + r];
                    out[j] += acc;
                }
            }
        }
        llt.compute(cov);
        if (llt.info() != Eigen::Success) throw IllConditionedError("AMNR: marginal covariance is not positive definite", {});
        const Eigen::VectorXd alpha = llt.solve(y);
        double logdet = 0.0;
        for (Index i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
        fit_statistics_[static_cast<std::size_t>(q)] = y.dot(alpha) + 2.0 * logdet;
        for (std::size_t m = 0; m < M; ++m) samples_[m * K + c].row(q).noalias() = (bt[m] * alpha).transpose();
    }
    const double best = *std::min_element(fit_statistics_.begin(), fit_statistics_.end());
    weights_.assign(static_cast<std::size_t>(Q), 0.0);
    double total = 0.0, sq = 0.0;
    for (Index q = 0; q < Q; ++q) {
        const auto u = static_cast<std::size_t>(q);
        weights_[u] = std::exp(-0.5 * (fit_statistics_[u] - best));
        total += weights_[u];
    }
    for (auto& w : weights_) {
        w /= total;
        sq += w * w;
    }
    ess_ = 1.0 / sq;
    compute_fits();
}

std::vector<CpForm> decompose_inputs(std::span<const Tensor> inputs, const AmnrConfig& config) {
    std::vector<CpForm> forms;
    forms.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        CpForm f = cp_decompose(inputs[i], static_cast<std::size_t>(config.R), config.cp);
        if (config.sign_flip && f.order() >= 2) {
            Rng rng = make_rng(config.seed, {label("sign-flip"), i});
            f = random_sign_flip(std::move(f), rng);
        }
        forms.push_back(std::move(f));
    }
    return forms;
}

AmnrModel fit_decomposed(std::vector<CpForm> forms, std::vector<double> responses, Dims dims,
                         const AmnrConfig& config) {
    config.validate();
    validate_dims(dims);
    if (forms.size() != responses.size()) throw ShapeError("AMNR fit: forms and responses differ in count");
    if (forms.size() < 2) throw PreconditionError("AMNR fit: need at least two training examples");
    check_forms(forms, dims, static_cast<std::size_t>(config.R));

    AmnrModel model;
    model.config_ = config;
    model.dims_ = std::move(dims);
    model.forms_ = std::move(forms);
    model.responses_ = std::move(responses);
    model.build_priors();

    const std::size_t K = model.order();
    const bool collapsed = config.estimator == Estimator::Collapsed;
    for (int m = 0; m < config.M; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
            if (collapsed && k == model.collapsed_mode()) {
                model.samples_.emplace_back();  // filled by collapse_mode()
                continue;
            }
            MvnSampler sampler(model.grams_[k], derive_seed(config.seed, {label("prior"), static_cast<std::uint64_t>(m), k}));
            model.samples_.push_back(sampler.sample(config.Q));
        }
    }
    if (collapsed) {
        model.collapse_mode();
    } else {
        model.score_samples();
    }
    if (model.ess_ < config.Q / 100.0) {
        warn("AMNR: effective sample size " + std::to_string(model.ess_) + " is below Q/100 (Q=" +
             std::to_string(config.Q) + ")");
    }
    return model;
}

AmnrModel fit(const Dataset& data, const AmnrConfig& config) {
    data.validate();
    config.validate();
    return fit_decomposed(decompose_inputs(data.inputs, config), data.responses, data.dims, config);
}

struct AmnrPredictor {
    static AmnrPrediction run(const AmnrModel& model, std::span<const CpForm> forms) {
        const auto& cfg = model.config_;
        const std::size_t K = model.order();
        const auto M = static_cast<std::size_t>(cfg.M);
        const auto R = static_cast<Index>(cfg.R);
        const auto Q = static_cast<Index>(cfg.Q);
        check_forms(forms, model.dims_, static_cast<std::size_t>(cfg.R));

        AmnrPrediction out;
        out.mean.resize(forms.size());
        out.standard_error.resize(forms.size());
        std::vector<double> g(static_cast<std::size_t>(Q)), scratch;
        std::vector<MatrixXd> values(M * K);

        for (std::size_t start = 0; start < forms.size(); start += kPredictBatch) {
            const auto b = static_cast<Index>(std::min<std::size_t>(kPredictBatch, forms.size() - start));
            for (std::size_t k = 0; k < K; ++k) {
                MatrixXd test(static_cast<Index>(model.dims_[k]), b * R);
                for (Index j = 0; j < b; ++j) test.middleCols(j * R, R) = forms[start + static_cast<std::size_t>(j)].factors[k];
                const MatrixXd kx = cross_kernel(cfg.kernel, model.points_[k], test);
                const MatrixXd coef = model.grams_[k].cholesky.solve(kx);
                for (std::size_t m = 0; m < M; ++m) values[m * K + k].noalias() = model.samples_[m * K + k] * coef;

                if (cfg.prediction == PredictionMode::ConditionalDraw) {
                    for (Index j = 0; j < b; ++j) {
                        const MatrixXd local = test.middleCols(j * R, R);
                        MatrixXd cov = kernel_matrix(cfg.kernel, local) -
                                       kx.middleCols(j * R, R).transpose() * coef.middleCols(j * R, R);
                        cov = 0.5 * (cov + cov.transpose());
                        const GramMatrix cond = factorize(cov, cfg.jitter, 0.0, &local);
                        const MatrixXd lower = cond.lower();
                        for (std::size_t m = 0; m < M; ++m) {
                            Rng rng = make_rng(cfg.seed, {label("predict-draw"), start + static_cast<std::size_t>(j), m, k});
                            const MatrixXd z = standard_normal_rows(Q, R, rng);
                            values[m * K + k].middleCols(j * R, R) += z * lower.transpose();
                        }
                    }
                }
            }
            for (Index j = 0; j < b; ++j) {
                const std::size_t idx = start + static_cast<std::size_t>(j);
                accumulate_predictions(
                    M, K, forms[idx].lambdas,
                    [&](std::size_t m, std::size_t k, std::size_t r) {
                        return col(values[m * K + k], j * R + static_cast<Index>(r));
                    },
                    g, scratch);
                const double mean = simd::dot(model.weights_, g);
                out.mean[idx] = mean;
                out.standard_error[idx] = std::sqrt(simd::weighted_squared_deviation(model.weights_, g, mean));
            }
        }
        return out;
    }
};

AmnrPrediction predict_forms(const AmnrModel& model, std::span<const CpForm> forms) {
    return AmnrPredictor::run(model, forms);
}

AmnrPrediction predict_with_error(const AmnrModel& model, std::span<const Tensor> inputs) {
    for (const auto& x : inputs) {
        if (x.dims() != model.dims()) throw ShapeError("AMNR predict: input dims do not match the model");
    }
    std::vector<CpForm> forms;
    forms.reserve(inputs.size());
    for (const auto& x : inputs) forms.push_back(cp_decompose(x, static_cast<std::size_t>(model.config().R), model.config().cp));
    return predict_forms(model, forms);
}

std::vector<double> predict(const AmnrModel& model, std::span<const Tensor> inputs) {
    return predict_with_error(model, inputs).mean;
}

std::vector<double> posterior_mean_insample(const AmnrModel& model) {
    std::vector<double> out(model.train_size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = simd::dot(model.weights(), col(model.sample_fits(), static_cast<Index>(i)));
    }
    return out;
}

double recommended_M_exponent(double beta, double max_dim, double gamma) {
    if (!(beta > 0.0) || !(max_dim > 0.0) || !(gamma > 0.0)) {
        throw PreconditionError("recommend_M: arguments must be positive");
    }
    return (beta / (2.0 * beta + max_dim)) / (1.0 + gamma);
}

int recommend_M(double n, double beta, double max_dim, double gamma) {
    if (!(n > 0.0)) throw PreconditionError("recommend_M: n must be positive");
    const double zeta = recommended_M_exponent(beta, max_dim, gamma);
    return std::max(1, static_cast<int>(std::lround(std::pow(n, zeta))));
}

}  // namespace amnr
