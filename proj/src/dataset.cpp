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

#include "amnr/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>

#include "amnr/error.hpp"

namespace amnr {
namespace {

static_assert(std::endian::native == std::endian::little, "ATRD I/O assumes a little-endian host");

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const auto x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
        throw IoError("ATRD manifest: bad integer for '" + key + "': " + v);
    }
}

void write_doubles(std::ostream& out, std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void read_doubles(std::istream& in, std::span<double> v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (in.gcount() != static_cast<std::streamsize>(v.size_bytes())) throw IoError("ATRD blob truncated");
}

}  // namespace

void Dataset::validate() const {
    validate_dims(dims);
    if (inputs.size() != responses.size()) throw ShapeError("dataset: inputs and responses differ in length");
    if (!truth.empty() && truth.size() != inputs.size()) throw ShapeError("dataset: truth length mismatch");
    for (const auto& x : inputs) {
        if (x.dims() != dims) throw ShapeError("dataset: tensors do not share dims");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.dims = dims;
    for (auto i : indices) {
        if (i >= size()) throw ShapeError("dataset subset index out of range");
        out.inputs.push_back(inputs[i]);
        out.responses.push_back(responses[i]);
        if (has_truth()) out.truth.push_back(truth[i]);
    }
    return out;
}

void write_atrd(const Dataset& d, std::ostream& out) {
    d.validate();
    const std::size_t per = element_count(d.dims);
    out << "ATRD v1\n";
    out << "n=" << d.size() << '\n';
    out << "K=" << d.dims.size() << '\n';
    out << "dims=";
    for (std::size_t k = 0; k < d.dims.size(); ++k) out << (k ? "," : "") << d.dims[k];
    out << '\n';
    out << "dtype=float64\nendianness=little\n";
    out << "blob_bytes=" << 8 * d.size() * (per + 1) << '\n';
    out << "---\n";
    for (const auto& x : d.inputs) write_doubles(out, x.data());
    write_doubles(out, d.responses);
    if (!out) throw IoError("ATRD write failed");
}

void write_atrd(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    write_atrd(d, out);
}

Dataset read_atrd(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "ATRD v1") throw IoError("not an ATRD v1 file");
    std::map<std::string, std::string> kv;
    bool terminated = false;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line == "---") {
            terminated = true;
            break;
        }
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw IoError("ATRD manifest: malformed line: " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    if (!terminated) throw IoError("ATRD manifest: missing '---' terminator");
    for (const char* key : {"n", "K", "dims", "dtype", "endianness"}) {
        if (!kv.count(key)) throw IoError(std::string("ATRD manifest: missing key ") + key);
    }
    if (kv["dtype"] != "float64") throw IoError("ATRD: unsupported dtype " + kv["dtype"]);
    if (kv["endianness"] != "little") throw IoError("ATRD: unsupported endianness " + kv["endianness"]);

    Dataset d;
    const std::size_t n = parse_size("n", kv["n"]);
    const std::size_t K = parse_size("K", kv["K"]);
    std::stringstream ds(kv["dims"]);
    std::string tok;
    while (std::getline(ds, tok, ',')) d.dims.push_back(parse_size("dims", trim(tok)));
    if (d.dims.size() != K) throw IoError("ATRD manifest: dims do not match K");
    try {
        validate_dims(d.dims);
    } catch (const ShapeError& e) {
        throw IoError(std::string("ATRD manifest: ") + e.what());
    }
    const std::size_t per = element_count(d.dims);
    if (kv.count("blob_bytes") && parse_size("blob_bytes", kv["blob_bytes"]) != 8 * n * (per + 1)) {
        throw IoError("ATRD manifest: blob_bytes inconsistent with n and dims");
    }
    d.inputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> buf(per);
        read_doubles(in, buf);
        d.inputs.emplace_back(d.dims, std::move(buf));
    }
    d.responses.resize(n);
    read_doubles(in, d.responses);
    return d;
}

Dataset read_atrd(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    return read_atrd(in);
}

std::uint64_t example_hash(const Tensor& x, double y) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof v);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    };
    for (double v : x.data()) feed(v);
    feed(y);
    return h;
}

ContentSplit content_holdout_split(const Dataset& d, std::size_t every) {
    if (every < 2) throw PreconditionError("content_holdout_split: every must be >= 2");
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    keyed.reserve(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) keyed.emplace_back(example_hash(d.inputs[i], d.responses[i]), i);
    std::sort(keyed.begin(), keyed.end());
    ContentSplit s;
    for (std::size_t j = 0; j < keyed.size(); ++j) {
        (j % every == every - 1 ? s.holdout : s.fit).push_back(keyed[j].second);
    }
    std::sort(s.fit.begin(), s.fit.end());
    std::sort(s.holdout.begin(), s.holdout.end());
    return s;
}

}  // namespace amnr
