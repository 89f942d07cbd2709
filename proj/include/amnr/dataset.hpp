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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "amnr/tensor.hpp"

namespace amnr {

/// n tensor covariates sharing one shape, with scalar responses.
struct Dataset {
    Dims dims;
    std::vector<Tensor> inputs;
    std::vector<double> responses;
    /// Noise-free regression function at each input, when the generator knows
    /// it. In-memory only; never serialized.
    std::vector<double> truth;

    std::size_t size() const noexcept { return inputs.size(); }
    bool has_truth() const noexcept { return !truth.empty(); }

    /// Throws ShapeError on inconsistent shapes or lengths.
    void validate() const;

    Dataset subset(std::span<const std::size_t> indices) const;
};

// ATRD v1: a text manifest followed by one little-endian float64 blob holding
// n row-major tensors and then n responses.
//
//   ATRD v1
//   n=<count>
//   K=<order>
//   dims=<I_1>,<I_2>,...
//   dtype=float64
//   endianness=little
//   blob_bytes=<8 * n * (prod(dims) + 1)>
//   ---
//   <blob>
void write_atrd(const Dataset& d, std::ostream& out);
void write_atrd(const Dataset& d, const std::filesystem::path& path);
Dataset read_atrd(std::istream& in);
Dataset read_atrd(const std::filesystem::path& path);

/// Deterministic holdout split keyed on example content (not position), so
/// permuting a dataset permutes but does not change the two halves. Roughly
/// one example in `every` lands in the holdout part.
struct ContentSplit {
    std::vector<std::size_t> fit;
    std::vector<std::size_t> holdout;
};
ContentSplit content_holdout_split(const Dataset& d, std::size_t every = 3);

/// FNV-1a hash of an example's bytes (tensor entries then response).
std::uint64_t example_hash(const Tensor& x, double y);

}  // namespace amnr
