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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "amnr/diagnostics.hpp"
#include "amnr/error.hpp"
#include "amnr/harness.hpp"

namespace amnr {

namespace {

constexpr const char* kHeader =
    "dims,method,n,R,M,trials_ok,trials_failed,train_mse_mean,train_mse_var,test_mse_mean,test_mse_var,"
    "truth_mse_mean,truth_mse_var,bandwidth_mean,noise_variance,test_mse_trials";

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_num(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw IoError("bad number in CSV: '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

void require_rows(const ResultTable& t) {
    if (t.rows.empty()) throw PreconditionError("result table is empty");
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

struct Series {
    std::string name;
    std::vector<double> x, y;
    bool dashed = false;
    std::string color;
};

// Minimal line chart; log_axes maps both axes through log10.
void write_chart(std::ostream& out, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                 const std::vector<Series>& series, bool log_axes) {
    const double W = 640, H = 420, L = 70, Rm = 150, T = 40, B = 50;
    auto tx = [&](double v) { return log_axes ? std::log10(v) : v; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(tx(s.x[i])) || !std::isfinite(tx(s.y[i]))) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, tx(s.y[i]));
            y1 = std::max(y1, tx(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - Rm); };
    auto py = [&](double v) { return H - B - (tx(v) - y0) / (y1 - y0) * (H - T - B); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - Rm << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        const double vx = log_axes ? std::pow(10.0, fx) : fx, vy = log_axes ? std::pow(10.0, fy) : fy;
        char lx[32], ly[32];
        std::snprintf(lx, sizeof lx, "%.3g", vx);
        std::snprintf(ly, sizeof ly, "%.3g", vy);
        out << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << lx << "</text>\n";
        out << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << ly << "</text>\n";
    }
    out << "<text x=\"" << (L + W - Rm) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& se = series[s];
        out << "<polyline fill=\"none\" stroke=\"" << se.color << "\" stroke-width=\"2\""
            << (se.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < se.x.size(); ++i) {
            if (!std::isfinite(tx(se.x[i])) || !std::isfinite(tx(se.y[i]))) continue;
            out << px(se.x[i]) << "," << py(se.y[i]) << " ";
        }
        out << "\"/>\n";
        const double ly = T + 16 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << W - Rm + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - Rm + 34 << "\" y2=\"" << ly
            << "\" stroke=\"" << se.color << "\" stroke-width=\"2\"" << (se.dashed ? " stroke-dasharray=\"6 4\"" : "")
            << "/>\n";
        out << "<text x=\"" << W - Rm + 40 << "\" y=\"" << ly + 4 << "\">" << se.name << "</text>\n";
    }
    out << "</svg>\n";
}

std::string row_label(const ResultRow& r) {
    std::string s(method_name(r.method));
    if (r.method == Method::Amnr) s += " R=" + std::to_string(r.R) + " M=" + std::to_string(r.M);
    return s;
}

}  // namespace

void write_csv(const ResultTable& table, std::ostream& out) {
    require_rows(table);
    std::string dims;
    for (std::size_t k = 0; k < table.dims.size(); ++k) dims += (k ? "x" : "") + std::to_string(table.dims[k]);
    out << kHeader << "\n";
    for (const auto& r : table.rows) {
        out << dims << ',' << method_name(r.method) << ',' << r.n << ',' << r.R << ',' << r.M << ',' << r.trials_ok
            << ',' << r.trials_failed << ',' << num(r.train_mse_mean) << ',' << num(r.train_mse_var) << ','
            << num(r.test_mse_mean) << ',' << num(r.test_mse_var) << ',' << num(r.truth_mse_mean) << ','
            << num(r.truth_mse_var) << ',' << num(r.bandwidth_mean) << ',' << num(r.noise_variance) << ',';
        for (std::size_t i = 0; i < r.test_mse_trials.size(); ++i) out << (i ? ";" : "") << num(r.test_mse_trials[i]);
        out << "\n";
    }
}

void write_csv(const ResultTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(table, out);
    if (!out) throw IoError("write failed: " + path.string());
}

ResultTable parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw IoError("CSV header mismatch");
    ResultTable t;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 16) throw IoError("CSV row has " + std::to_string(f.size()) + " fields, expected 16");
        Dims dims;
        for (const auto& d : split(f[0], 'x')) dims.push_back(static_cast<std::size_t>(std::stoull(d)));
        if (first) {
            t.dims = dims;
            first = false;
        } else if (dims != t.dims) {
            throw IoError("CSV rows disagree on dims");
        }
        ResultRow r;
        try {
            r.method = parse_method(f[1]);
            r.n = std::stoull(f[2]);
            r.R = std::stoi(f[3]);
            r.M = std::stoi(f[4]);
            r.trials_ok = std::stoull(f[5]);
            r.trials_failed = std::stoull(f[6]);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw IoError("bad integer field in CSV row: " + line);
        }
        r.train_mse_mean = parse_num(f[7]);
        r.train_mse_var = parse_num(f[8]);
        r.test_mse_mean = parse_num(f[9]);
        r.test_mse_var = parse_num(f[10]);
        r.truth_mse_mean = parse_num(f[11]);
        r.truth_mse_var = parse_num(f[12]);
        r.bandwidth_mean = parse_num(f[13]);
        r.noise_variance = parse_num(f[14]);
        if (!f[15].empty())
            for (const auto& v : split(f[15], ';')) r.test_mse_trials.push_back(parse_num(v));
        t.rows.push_back(std::move(r));
    }
    return t;
}

ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_csv(in);
}

void write_timing_csv(const ResultTable& table, std::ostream& out) {
    require_rows(table);
    out << "method,n,R,M,wall_seconds\n";
    for (const auto& r : table.rows) {
        out << method_name(r.method) << ',' << r.n << ',' << r.R << ',' << r.M << ',' << num(r.wall_seconds) << "\n";
    }
}

void write_svg_mse(const ResultTable& table, std::ostream& out) {
    require_rows(table);
    std::map<std::string, std::size_t> idx;
    std::vector<Series> series;
    for (const auto& r : table.rows) {
        const auto name = row_label(r);
        if (!idx.count(name)) {
            idx[name] = series.size();
            series.push_back({name, {}, {}, false, kPalette[series.size() % std::size(kPalette)]});
        }
        auto& s = series[idx[name]];
        s.x.push_back(static_cast<double>(r.n));
        s.y.push_back(r.test_mse_mean);
    }
    write_chart(out, "Test MSE vs n", "n", "test MSE", series, false);
}

void write_svg_convergence(const ResultTable& table, double noise_variance, std::ostream& out,
                           const SlopeOptions& options) {
    require_rows(table);
    std::vector<Method> methods;
    for (const auto& r : table.rows)
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    std::vector<Series> series;
    for (auto m : methods) {
        SlopeResult s;
        try {
            s = slope_analysis(table, noise_variance, m, options);
        } catch (const PreconditionError&) {
            continue;
        }
        const std::string color = kPalette[series.size() % std::size(kPalette)];
        char name[64];
        std::snprintf(name, sizeof name, "%s (%.3f)", std::string(method_name(m)).c_str(), s.slope);
        series.push_back({name, s.n, s.excess, false, color});
        if (!std::isnan(s.theoretical)) {
            std::vector<double> ref;
            for (double n : s.n) ref.push_back(s.excess.front() * std::pow(n / s.n.front(), s.theoretical));
            std::snprintf(name, sizeof name, "rate %.3f", s.theoretical);
            series.push_back({name, s.n, ref, true, color});
        }
    }
    write_chart(out, "Excess risk vs n (log-log)", "n", "excess risk", series, true);
}

void emit(const ResultTable& table, const std::filesystem::path& csv_path, double noise_variance,
          const SlopeOptions& options) {
    require_rows(table);
    write_csv(table, csv_path);
    auto sibling = [&](const std::string& suffix) {
        auto p = csv_path;
        p.replace_extension(suffix);
        return p;
    };
    auto open = [](const std::filesystem::path& p) {
        std::ofstream o(p, std::ios::binary);
        if (!o) throw IoError("cannot write " + p.string());
        return o;
    };
    {
        auto o = open(sibling(".timing.csv"));
        write_timing_csv(table, o);
    }
    {
        auto o = open(sibling(".mse.svg"));
        write_svg_mse(table, o);
    }
    std::vector<std::size_t> ns;
    for (const auto& r : table.rows)
        if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    if (ns.size() >= 3) {
        auto o = open(sibling(".rate.svg"));
        write_svg_convergence(table, noise_variance, o, options);
    }
}

}  // namespace amnr
