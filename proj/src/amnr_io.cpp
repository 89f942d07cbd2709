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

// Model files: "AMNR-MODEL v1" key=value header, "---", then float64 blobs
// (little-endian) in this order: responses[n], lambdas[n*R], per-mode training
// factors (I_k x nR, column-major), fit statistics[Q], weights[Q], prior draws
// (M*K blocks of Q x nR, column-major, index m*K+k), sample fits (Q x n).
// Doubles in the header are written as hex floats so they round-trip exactly.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "amnr/amnr.hpp"
#include "amnr/error.hpp"

namespace amnr {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

std::string hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

void put(std::ostream& out, std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void put(std::ostream& out, const MatrixXd& m) { put(out, std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))); }

void get(std::istream& in, std::span<double> v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (in.gcount() != static_cast<std::streamsize>(v.size_bytes())) throw IoError("model file truncated");
}

void get(std::istream& in, MatrixXd& m) { get(in, std::span<double>(m.data(), static_cast<std::size_t>(m.size()))); }

struct Header {
    std::map<std::string, std::string> kv;

    const std::string& at(const std::string& key) const {
        auto it = kv.find(key);
        if (it == kv.end()) throw IoError("model file: missing key " + key);
        return it->second;
    }
    double real(const std::string& key) const {
        const std::string& s = at(key);
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw IoError("model file: bad number for " + key);
        return v;
    }
    long long integer(const std::string& key) const {
        try {
            return std::stoll(at(key));
        } catch (const std::exception&) {
            throw IoError("model file: bad integer for " + key);
        }
    }
    std::uint64_t unsigned_integer(const std::string& key) const {
        try {
            return std::stoull(at(key));
        } catch (const std::exception&) {
            throw IoError("model file: bad integer for " + key);
        }
    }
};

}  // namespace

void save_model(const AmnrModel& model, std::ostream& out) {
    const auto& c = model.config_;
    out << "AMNR-MODEL v1\n";
    out << "M=" << c.M << "\nR=" << c.R << "\nQ=" << c.Q << "\nn=" << model.train_size() << "\nK=" << model.order() << '\n';
    out << "dims=";
    for (std::size_t k = 0; k < model.dims_.size(); ++k) out << (k ? "," : "") << model.dims_[k];
    out << "\nnoise_variance=" << hex(c.noise_variance) << '\n';
    out << "kernel=" << c.kernel.family_name() << "\nbandwidth=" << hex(c.kernel.bandwidth) << '\n';
    out << "seed=" << c.seed << "\nsign_flip=" << (c.sign_flip ? 1 : 0) << '\n';
    out << "likelihood=" << (c.likelihood == LikelihoodForm::Gaussian ? "gaussian" : "literal") << '\n';
    out << "prediction=" << (c.prediction == PredictionMode::ConditionalMean ? "mean" : "draw") << '\n';
    out << "estimator=" << (c.estimator == Estimator::Collapsed ? "collapsed" : "importance") << '\n';
    out << "jitter_initial=" << hex(c.jitter.initial) << "\njitter_factor=" << hex(c.jitter.factor)
        << "\njitter_cap=" << hex(c.jitter.cap) << '\n';
    out << "cp_max_iters=" << c.cp.max_iters << "\ncp_tol=" << hex(c.cp.tol) << "\ncp_seed=" << c.cp.seed << '\n';
    out << "cp_restarts=" << c.cp.restarts << "\ncp_restart_above=" << hex(c.cp.restart_above) << '\n';
    out << "ess=" << hex(model.ess_) << '\n';
    out << "---\n";

    put(out, model.responses_);
    for (const auto& f : model.forms_) put(out, f.lambdas);
    for (const auto& p : model.points_) put(out, p);
    put(out, model.fit_statistics_);
    put(out, model.weights_);
    for (const auto& s : model.samples_) put(out, s);
    put(out, model.fitted_);
    if (!out) throw IoError("model write failed");
}

void save_model(const AmnrModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    save_model(model, out);
}

AmnrModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "AMNR-MODEL v1") throw IoError("not an AMNR-MODEL v1 file");
    Header h;
    bool terminated = false;
    while (std::getline(in, line)) {
        if (line == "---") {
            terminated = true;
            break;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("model file: malformed header line: " + line);
        h.kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (!terminated) throw IoError("model file: missing '---'");

    AmnrModel model;
    AmnrConfig& c = model.config_;
    c.M = static_cast<int>(h.integer("M"));
    c.R = static_cast<int>(h.integer("R"));
    c.Q = static_cast<int>(h.integer("Q"));
    c.noise_variance = h.real("noise_variance");
    c.kernel = KernelSpec::parse(h.at("kernel"), h.real("bandwidth"));
    c.seed = h.unsigned_integer("seed");
    c.sign_flip = h.integer("sign_flip") != 0;
    c.likelihood = h.at("likelihood") == "literal" ? LikelihoodForm::Literal : LikelihoodForm::Gaussian;
    c.prediction = h.at("prediction") == "draw" ? PredictionMode::ConditionalDraw : PredictionMode::ConditionalMean;
    c.estimator = h.at("estimator") == "collapsed" ? Estimator::Collapsed : Estimator::Importance;
    c.jitter = JitterPolicy{h.real("jitter_initial"), h.real("jitter_factor"), h.real("jitter_cap")};
    c.cp.max_iters = static_cast<int>(h.integer("cp_max_iters"));
    c.cp.tol = h.real("cp_tol");
    c.cp.seed = h.unsigned_integer("cp_seed");
    c.cp.restarts = static_cast<int>(h.integer("cp_restarts"));
    c.cp.restart_above = h.real("cp_restart_above");
    try {
        c.validate();
    } catch (const Error& e) {
        throw IoError(std::string("model file: ") + e.what());
    }

    const auto n = static_cast<std::size_t>(h.integer("n"));
    const auto K = static_cast<std::size_t>(h.integer("K"));
    std::stringstream ds(h.at("dims"));
    std::string tok;
    while (std::getline(ds, tok, ',')) model.dims_.push_back(static_cast<std::size_t>(std::stoull(tok)));
    if (model.dims_.size() != K) throw IoError("model file: dims do not match K");
    validate_dims(model.dims_);
    model.ess_ = h.real("ess");

    const auto R = static_cast<Index>(c.R);
    const auto Q = static_cast<Index>(c.Q);
    const auto p = static_cast<Index>(n) * R;
    model.responses_.resize(n);
    get(in, model.responses_);
    model.forms_.resize(n);
    for (auto& f : model.forms_) {
        f.lambdas.resize(static_cast<std::size_t>(R));
        get(in, f.lambdas);
    }
    std::vector<MatrixXd> points(K);
    for (std::size_t k = 0; k < K; ++k) {
        points[k].resize(static_cast<Index>(model.dims_[k]), p);
        get(in, points[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            model.forms_[i].factors.push_back(points[k].middleCols(static_cast<Index>(i) * R, R));
        }
    }
    model.fit_statistics_.resize(static_cast<std::size_t>(Q));
    get(in, model.fit_statistics_);
    model.weights_.resize(static_cast<std::size_t>(Q));
    get(in, model.weights_);
    model.samples_.assign(static_cast<std::size_t>(c.M) * K, MatrixXd(Q, p));
    for (auto& s : model.samples_) get(in, s);
    model.fitted_.resize(Q, static_cast<Index>(n));
    get(in, model.fitted_);

    model.build_priors();
    return model;
}

AmnrModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return load_model(in);
}

}  // namespace amnr
