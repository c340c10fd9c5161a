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

#include "trafficledger/flow.hpp"
#include "trafficledger/overhead.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace tltest {

using trafficledger::Category;
using trafficledger::HttpFlow;
using trafficledger::JourneyRun;
using trafficledger::Millis;
using trafficledger::RunRecord;
using trafficledger::Timestamp;

/// Removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

Timestamp ts(std::int64_t ms_since_epoch);

/// Flow with explicit sizes; the caller picks URL and content type.
HttpFlow make_flow(const std::string& run_id, std::size_t index, const std::string& url, const std::string& method,
                   std::optional<std::string> content_type, std::uint64_t req_header, std::uint64_t req_body,
                   std::uint64_t resp_header, std::uint64_t resp_body, Timestamp start, Millis took);

/// A flow shaped so that both shipped rulesets put it in `c`:
/// CoreNavigation text/html, UserContent image/jpeg, SurveillanceTracking a
/// POST to the user_flow endpoint, Other an octet-stream from an unknown host.
HttpFlow flow_for_category(Category c, const std::string& run_id, std::size_t index, std::uint64_t bytes,
                           Timestamp start, Millis took);

/// One run of `duration` whose flows carry exactly `bytes[i]` in category i
/// (CoreNavigation, UserContent, SurveillanceTracking, Other). Each nonzero
/// amount is split over `split` flows.
RunRecord synthetic_record(const std::string& platform, const std::string& journey,
                           const std::array<std::uint64_t, 4>& bytes, Millis duration, Timestamp start,
                           int split = 1);

/// Breakdown-level run for analytics tests, without flows.
trafficledger::analytics::ClassifiedRun classified_run(const std::string& platform, const std::string& journey,
                                                       const std::array<std::uint64_t, 4>& bytes, Millis duration,
                                                       std::uint64_t actions = 1);

/// Random HAR 1.2 document with `entries` entries. Some sizes are -1 to
/// exercise fallbacks; entries are emitted out of time order.
std::string random_har(std::size_t entries, std::uint64_t seed);

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);

} // namespace tltest
