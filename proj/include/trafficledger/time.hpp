// Copyright 2026 The trafficledger Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace trafficledger {

/// UTC instant at millisecond precision. All stored timestamps use this type.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

/// Formats as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string format_timestamp(Timestamp ts);

/// Parses RFC 3339 / ISO 8601 date-times as produced by HAR writers:
/// fractional seconds of any length (truncated to ms) and either `Z` or a
/// `+HH:MM` / `-HH:MM` offset. Throws std::invalid_argument on bad input.
Timestamp parse_timestamp(std::string_view text);

/// Maps a monotonic clock onto UTC once, at construction. Later readings are
/// the anchor plus monotonic elapsed time, so wall-clock steps never move them.
class SessionClock {
public:
    SessionClock();

    Timestamp now() const;
    Timestamp to_utc(std::chrono::steady_clock::time_point tp) const;
    std::chrono::steady_clock::time_point anchor_steady() const { return steady_anchor_; }

private:
    std::chrono::steady_clock::time_point steady_anchor_;
    Timestamp utc_anchor_;
};

} // namespace trafficledger
