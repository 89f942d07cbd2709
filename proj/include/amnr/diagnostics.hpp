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

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace amnr {

using WarningSink = std::function<void(std::string_view)>;

/// Report a non-fatal condition. Goes to stderr unless a sink is installed.
void warn(std::string_view message);

/// Replaces the process-wide warning sink; returns the previous sink.
/// An empty sink restores the stderr default.
WarningSink set_warning_sink(WarningSink sink);

/// Collects warnings for the lifetime of the object (tests, quiet CLI runs).
class WarningCapture {
public:
    WarningCapture();
    ~WarningCapture();
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    const std::vector<std::string>& messages() const { return messages_; }
    bool contains(std::string_view needle) const;

private:
    std::vector<std::string> messages_;
    WarningSink previous_;
};

}  // namespace amnr
