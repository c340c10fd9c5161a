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

#include "trafficledger/time.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trafficledger {

/// Decimal gigabyte. Every downstream rate and energy coefficient uses it.
inline constexpr double kBytesPerGB = 1e9;

enum class Category { Unclassified, CoreNavigation, UserContent, SurveillanceTracking, Other };

/// The four categories a classified flow can land in, in reporting order.
inline constexpr Category kAssignableCategories[] = {Category::CoreNavigation, Category::UserContent,
                                                     Category::SurveillanceTracking, Category::Other};

std::string_view to_string(Category c);
/// Accepts the names produced by to_string. Throws std::invalid_argument.
Category category_from_string(std::string_view name);
/// Index into a four-slot array; Unclassified has no slot and throws.
std::size_t category_index(Category c);

struct Url {
    std::string scheme;
    std::string host;
    std::optional<std::uint16_t> port;
    std::string path = "/";
    std::string query; // without the leading '?'

    /// Absolute (`http://host/x?y`) or authority-less input. Host is lowercased.
    /// Throws std::invalid_argument when no host can be found.
    static Url parse(std::string_view text);

    std::string to_string() const;
    /// Lowercased suffix after the final dot of the last path segment, or empty.
    std::string extension() const;

    bool operator==(const Url&) const = default;
};

struct Cookie {
    std::string name;
    std::uint64_t value_bytes = 0;
    std::optional<std::string> value; // only when the capture keeps cookie values
    std::optional<std::string> domain;
    bool secure = false;
    bool http_only = false;
    std::optional<std::string> same_site;

    bool operator==(const Cookie&) const = default;
};

struct HttpFlow {
    std::string flow_id;
    std::string run_id;
    Url url;
    std::string method = "GET";
    int status = 0;
    std::uint64_t request_header_bytes = 0;
    std::uint64_t request_body_bytes = 0;
    std::uint64_t response_header_bytes = 0;
    std::uint64_t response_body_bytes = 0;
    bool size_is_estimated = false;
    std::optional<std::string> content_type;
    std::vector<Cookie> request_cookies;
    std::vector<Cookie> set_cookies;
    /// Request payload, kept only when body recording is on. Beacon detection reads it.
    std::optional<std::string> request_body;
    Timestamp started_at{};
    Timestamp completed_at{};
    Category category = Category::Unclassified;

    std::uint64_t total_bytes() const {
        return request_header_bytes + request_body_bytes + response_header_bytes + response_body_bytes;
    }

    /// Sets the category once. Throws std::logic_error on an attempt to revert
    /// to Unclassified.
    void assign_category(Category c);

    bool operator==(const HttpFlow&) const = default;
};

struct JourneyRun {
    std::string run_id;
    std::string journey_name;
    std::string platform_id;
    Timestamp started_at{};
    Timestamp ended_at{};
    std::vector<std::string> flow_ids;
    /// False when the journey aborted part way through.
    bool complete = true;

    Millis duration() const { return ended_at - started_at; }

    bool operator==(const JourneyRun&) const = default;
};

/// A run together with its flows, in the run's flow_ids order.
struct RunRecord {
    JourneyRun run;
    std::vector<HttpFlow> flows;

    bool operator==(const RunRecord&) const = default;
};

/// Sets started_at/ended_at to the first request start and the last response
/// completion. Leaves the run untouched when there are no flows.
void bracket_run(JourneyRun& run, const std::vector<HttpFlow>& flows);

/// Random 128-bit hex identifier.
std::string random_id();

/// FNV-1a 64-bit, hex encoded. Used for content-derived identifiers.
std::string stable_id(std::string_view content);

} // namespace trafficledger
