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

// Additive-multiplicative nonparametric regression:
//
//   G(X) = sum_m sum_r lambda_r prod_k f_m^(k)(x_r^(k))
//
// over the rank-R CP form of X, with independent GP priors on the local
// functions f_m^(k). The posterior mean is estimated by self-normalized
// importance sampling over Q joint prior draws at the training factors.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "amnr/dataset.hpp"
#include "amnr/kernels.hpp"
#include "amnr/tensor.hpp"

namespace amnr {

/// How the per-sample training fit S_q enters the log weight.
enum class LikelihoodForm {
    Gaussian,      ///< -S_q / (2 sigma^2)
    Literal,       ///< -S_q / sigma (compatibility mode)
};

/// How local-function values at new factor vectors are obtained per sample.
enum class PredictionMode {
    ConditionalMean,  ///< E[f(x') | f(training factors)] under the prior
    ConditionalDraw,  ///< one draw from that conditional distribution
};

/// How the posterior mean integral is estimated.
enum class Estimator {
    /// Q joint prior draws of every local function, weighted by the
    /// likelihood of the training fit.
    Importance,
    /// The local functions of one mode (the largest) are integrated out in
    /// closed form: given the other modes the model is linear in them, so
    /// each draw q carries the Gaussian marginal likelihood and the exact
    /// conditional posterior mean of that mode. Same target, far lower
    /// Monte Carlo variance. Requires ConditionalMean prediction.
    Collapsed,
};

struct AmnrConfig {
    int M = 1;
    int R = 2;
    int Q = 2000;
    double noise_variance = 1.0;
    KernelSpec kernel;
    std::uint64_t seed = 1;
    bool sign_flip = false;
    LikelihoodForm likelihood = LikelihoodForm::Gaussian;
    PredictionMode prediction = PredictionMode::ConditionalMean;
    Estimator estimator = Estimator::Importance;
    JitterPolicy jitter;
    CpOptions cp;

    void validate() const;
};

/// Normalized importance weights from per-sample training fits.
struct WeightSummary {
    std::vector<double> weights;
    double effective_sample_size = 0.0;
};

/// w_q proportional to exp(-S_q / (2 sigma^2)) (or exp(-S_q / sigma)),
/// normalized after subtracting min S. Never underflows to all-zero.
WeightSummary normalize_weights(std::span<const double> fit_statistics, double noise_variance,
                                LikelihoodForm form = LikelihoodForm::Gaussian);

/// Table of local-function values v[m][r][k] for one input.
struct LocalValues {
    std::size_t M = 0, R = 0, K = 0;
    std::vector<double> values;  ///< index (m * R + r) * K + k

    LocalValues() = default;
    LocalValues(std::size_t m, std::size_t r, std::size_t k) : M(m), R(r), K(k), values(m * r * k, 0.0) {}
    double& operator()(std::size_t m, std::size_t r, std::size_t k) { return values[(m * R + r) * K + k]; }
    double operator()(std::size_t m, std::size_t r, std::size_t k) const { return values[(m * R + r) * K + k]; }
};

/// sum_m sum_r lambda_r prod_k v[m][r][k]. Throws ShapeError if lambdas.size() != R.
double amnr_eval(const LocalValues& local, std::span<const double> lambdas);

/// Fitted estimator. Immutable after fit; safe to share across threads.
class AmnrModel {
public:
    const AmnrConfig& config() const { return config_; }
    const Dims& dims() const { return dims_; }
    std::size_t train_size() const { return forms_.size(); }
    std::size_t order() const { return dims_.size(); }

    const std::vector<CpForm>& training_forms() const { return forms_; }
    const std::vector<double>& responses() const { return responses_; }

    /// Mode-k training factor vectors as columns; column i * R + r is x_{r,i}^(k).
    const Eigen::MatrixXd& training_points(std::size_t k) const { return points_[k]; }

    /// Q x (nR) prior draws of f_m^(k) at the mode-k training factors. Under
    /// the collapsed estimator the collapsed mode holds, per draw, the
    /// posterior mean of f_m^(k) at those factors instead.
    const Eigen::MatrixXd& local_samples(std::size_t m, std::size_t k) const {
        return samples_[m * order() + k];
    }

    /// Q x n matrix of G_q(X_i).
    const Eigen::MatrixXd& sample_fits() const { return fitted_; }
    /// Importance: S_q = sum_i (Y_i - G_q(X_i))^2. Collapsed: -2 log of the
    /// marginal likelihood of draw q, up to a constant.
    const std::vector<double>& fit_statistics() const { return fit_statistics_; }
    /// Monte Carlo estimate of log p(Y | hyperparameters): the log of the
    /// mean of the per-draw likelihoods, with normalizing constants, so
    /// values are comparable across bandwidths and between estimators.
    /// Under the literal likelihood the Gaussian constant is used as is.
    double log_marginal_likelihood() const;
    /// Mode integrated out by the collapsed estimator (the first largest I_k).
    std::size_t collapsed_mode() const;
    const std::vector<double>& weights() const { return weights_; }
    double effective_sample_size() const { return ess_; }

    /// Local values of sample q at training input i, for oracles and debugging.
    LocalValues training_local_values(std::size_t q, std::size_t i) const;

    friend AmnrModel fit_decomposed(std::vector<CpForm> forms, std::vector<double> responses, Dims dims,
                                    const AmnrConfig& config);
    friend AmnrModel load_model(std::istream& in);
    friend void save_model(const AmnrModel& model, std::ostream& out);
    friend struct AmnrPredictor;

private:
    void build_priors();
    void score_samples();
    void compute_fits();
    void collapse_mode();

    AmnrConfig config_;
    Dims dims_;
    std::vector<CpForm> forms_;
    std::vector<double> responses_;
    std::vector<Eigen::MatrixXd> points_;  ///< per mode
    std::vector<GramMatrix> grams_;        ///< per mode, shared by all m
    std::vector<Eigen::MatrixXd> samples_; ///< index m * K + k
    Eigen::MatrixXd fitted_;
    std::vector<double> fit_statistics_;
    std::vector<double> weights_;
    double ess_ = 0.0;
};

/// Steps 1-3: CP-decompose every input at rank R, draw the joint priors and
/// weight the draws. Warns when the effective sample size falls below Q/100.
AmnrModel fit(const Dataset& data, const AmnrConfig& config);

/// Same as fit() for inputs that are already decomposed (grid search reuses
/// one decomposition across bandwidths). Forms must have rank R.
AmnrModel fit_decomposed(std::vector<CpForm> forms, std::vector<double> responses, Dims dims,
                         const AmnrConfig& config);

/// Applies the configured rank-R decomposition (and optional sign flips) the
/// way fit() does.
std::vector<CpForm> decompose_inputs(std::span<const Tensor> inputs, const AmnrConfig& config);

struct AmnrPrediction {
    std::vector<double> mean;
    /// Monte Carlo standard error of each mean from the weighted draws:
    /// sqrt(sum_q w_q^2 (v_q - mean)^2).
    std::vector<double> standard_error;
};

/// Step 4 for tensors: decompose at rank R, then average the per-sample
/// predictions with the fitted weights.
std::vector<double> predict(const AmnrModel& model, std::span<const Tensor> inputs);
AmnrPrediction predict_with_error(const AmnrModel& model, std::span<const Tensor> inputs);
/// Step 4 for inputs already in CP form (rank R, model dims).
AmnrPrediction predict_forms(const AmnrModel& model, std::span<const CpForm> forms);

/// sum_q w_q G_q(X_i) at every training input.
std::vector<double> posterior_mean_insample(const AmnrModel& model);

/// Exponent zeta = (beta / (2 beta + max_dim)) / (1 + gamma).
double recommended_M_exponent(double beta, double max_dim, double gamma);
/// max(1, round(n^zeta)).
int recommend_M(double n, double beta, double max_dim, double gamma);

void save_model(const AmnrModel& model, std::ostream& out);
void save_model(const AmnrModel& model, const std::filesystem::path& path);
AmnrModel load_model(std::istream& in);
AmnrModel load_model(const std::filesystem::path& path);

}  // namespace amnr
