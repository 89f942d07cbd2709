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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "amnr/amnr.hpp"
#include "amnr/baselines.hpp"
#include "amnr/datagen.hpp"
#include "amnr/epidemics.hpp"

namespace amnr {

enum class Method { Amnr, Tlr, Tgp, Mean };

Method parse_method(std::string_view name);
std::string_view method_name(Method m);

enum class DataSource {
    Dgp,            ///< synthetic generator, fresh data per trial
    RandomGraphs,   ///< Erdos-Renyi ensemble labelled by SIR, fresh per trial
    EmailLog,       ///< ingested log labelled by SIR once, subsampled per trial
    File,           ///< ATRD dataset, subsampled per trial
};

DataSource parse_source(std::string_view name);
std::string_view source_name(DataSource s);

struct ExperimentConfig {
    DataSource source = DataSource::Dgp;
    DgpSpec dgp;

    SirConfig sir;
    std::size_t graph_vertices = 100;
    double graph_min_density = 0.04;
    double graph_max_density = 0.2;
    std::filesystem::path email_log;
    std::size_t top_n = 1000;
    std::size_t chunk_size = 2000;
    std::filesystem::path dataset;

    std::vector<Method> methods{Method::Amnr, Method::Tlr, Method::Tgp};
    /// Total sample counts; each is split into train and test parts.
    std::vector<std::size_t> n_grid{100, 200, 300};
    double test_fraction = 0.5;
    int trials = 20;

    /// Empty: derived from the median pairwise distance. One entry: fixed.
    /// Several: chosen per trial on a holdout third of the training data.
    std::vector<double> bandwidth_grid;
    /// Used when bandwidth_grid is empty (AMNR) and always for TGP: the grid
    /// is the median pairwise distance of the inputs times these factors.
    std::vector<double> bandwidth_multipliers{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<int> R_grid{2};
    std::vector<int> M_grid{1};
    int Q = 2000;
    KernelSpec kernel;
    LikelihoodForm likelihood = LikelihoodForm::Gaussian;
    Estimator estimator = Estimator::Importance;
    bool sign_flip = false;
    TlrOptions tlr;

    /// Noise variance handed to AMNR and TGP. <= 0 means: the generator's
    /// true value, the SIR trial estimate, or an error for file sources.
    double noise_variance = 0.0;
    /// Rescaling applied to each trial's training data before fitting (and
    /// undone on the predictions, so MSEs stay in the original units).
    /// Scale divides Y by its root mean square and X by its mean Frobenius
    /// norm; Center also subtracts the mean of Y and divides by its standard
    /// deviation instead.
    enum class Standardize { None, Scale, Center };
    Standardize standardize = Standardize::None;

    std::uint64_t seed = 1;
    std::filesystem::path output;
    /// 0: AMNR_THREADS, else hardware concurrency.
    int threads = 0;

    void validate() const;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);
/// Applies one key=value setting (config files and CLI overrides share this).
void apply_config_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);
std::string format_experiment_config(const ExperimentConfig& cfg);

struct TrialOutcome {
    bool ok = false;
    std::string error;
    double bandwidth = 0.0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    /// mean (prediction - f*)^2 on the test part; NaN without ground truth.
    double truth_mse = 0.0;
    double seconds = 0.0;
};

struct ResultRow {
    Method method = Method::Amnr;
    std::size_t n = 0;
    int R = 0;  ///< 0 where not applicable
    int M = 0;
    std::size_t trials_ok = 0;
    std::size_t trials_failed = 0;
    double train_mse_mean = 0.0, train_mse_var = 0.0;
    double test_mse_mean = 0.0, test_mse_var = 0.0;
    double truth_mse_mean = 0.0, truth_mse_var = 0.0;
    double bandwidth_mean = 0.0;
    double noise_variance = 0.0;
    /// per-trial test MSE, trial order; NaN marks a failed trial
    std::vector<double> test_mse_trials;
    /// Not part of the CSV; emitted separately so the CSV is reproducible.
    double wall_seconds = 0.0;

    bool operator==(const ResultRow& o) const;
};

struct ResultTable {
    Dims dims;
    std::vector<ResultRow> rows;
    std::size_t failed_cells() const;

    bool operator==(const ResultTable& o) const { return dims == o.dims && rows == o.rows; }
};

/// Predictor used by the constant-mean method; exposed so tests can check the
/// analytic MSE.
std::vector<double> mean_predictor(std::span<const double> train_y, std::size_t count);

ResultTable run_experiment(const ExperimentConfig& cfg);

/// Per-trial cell outcomes in the order run_experiment aggregates them:
/// outcome[n_index][trial][cell] where cells enumerate (method, R, M).
struct ExperimentDetail {
    std::vector<std::vector<std::vector<TrialOutcome>>> outcomes;
};
ResultTable run_experiment(const ExperimentConfig& cfg, ExperimentDetail* detail);

int worker_count(int requested);

struct SlopeOptions {
    double beta = 1.0;
    /// Fit log(truth_mse) instead of log(test_mse - sigma^2). Both estimate
    /// the excess risk; the first has much lower variance when f* is known.
    bool use_truth = false;
    std::optional<int> R;
    std::optional<int> M;
};

struct SlopeResult {
    double slope = 0.0;
    double intercept = 0.0;
    double theoretical = 0.0;  ///< -2 beta / (2 beta + d); NaN for parametric methods
    double d = 0.0;
    std::vector<double> n;
    std::vector<double> excess;
    /// excess / excess at the smallest n, and the theoretical curve through 1
    std::vector<double> aligned;
    std::vector<double> aligned_theory;
};

/// Excess risk vs n on log-log axes for one method. Needs rows at >= 3
/// distinct n; points with nonpositive excess are dropped with a warning.
/// With several hyperparameter rows per n the smallest mean is used unless
/// R/M pin one.
SlopeResult slope_analysis(const ResultTable& table, double noise_variance, Method method,
                           const SlopeOptions& options = {});
double theoretical_slope(double beta, double d);
/// Ordinary least-squares slope and intercept of y on x.
std::pair<double, double> least_squares_line(std::span<const double> x, std::span<const double> y);

void write_csv(const ResultTable& table, std::ostream& out);
void write_csv(const ResultTable& table, const std::filesystem::path& path);
ResultTable parse_csv(std::istream& in);
ResultTable read_csv(const std::filesystem::path& path);
void write_timing_csv(const ResultTable& table, std::ostream& out);
void write_svg_mse(const ResultTable& table, std::ostream& out);
void write_svg_convergence(const ResultTable& table, double noise_variance, std::ostream& out,
                           const SlopeOptions& options = {});

/// Writes <stem>.csv, <stem>.timing.csv, <stem>.mse.svg and, with >= 3 n
/// values, <stem>.rate.svg. Throws IoError on unwritable paths.
void emit(const ResultTable& table, const std::filesystem::path& csv_path, double noise_variance,
          const SlopeOptions& options = {});

}  // namespace amnr
