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
#include <stdexcept>
#include <string>
#include <vector>

namespace amnr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions, lengths or index ranges.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A vector that must be unit-norm is not.
class NormalizationError : public Error {
public:
    using Error::Error;
};

/// An argument violates an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values (CLI flags, config files, SIR settings).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization failed even at the maximum jitter.
/// `cluster` lists the indices of the largest group of (near-)duplicate points.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, std::vector<std::size_t> cluster)
        : Error(what), cluster_(std::move(cluster)) {}

    const std::vector<std::size_t>& cluster() const noexcept { return cluster_; }

private:
    std::vector<std::size_t> cluster_;
};

}  // namespace amnr
