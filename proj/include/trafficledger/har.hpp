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

#include "trafficledger/cookies.hpp"
#include "trafficledger/flow.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace trafficledger::har {

class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    /// JSON path of the offending element, e.g. `log.entries[3].request.url`.
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class UnsupportedVersion : public std::runtime_error {
public:
    explicit UnsupportedVersion(const std::string& version)
        : std::runtime_error("unsupported HAR version '" + version + "'"), version_(version) {}
    const std::string& version() const { return version_; }

private:
    std::string version_;
};

struct IngestOptions {
    std::string platform_id;
    std::string journey_name;
    /// Overrides the content-derived run id.
    std::optional<std::string> run_id;
    /// Keep `postData.text` so beacon detection can inspect payloads.
    bool keep_request_bodies = true;
    CookieOptions cookies;
};

/// Parses HAR 1.1/1.2 JSON into one run and one flow per entry.
///
/// Entries are ordered by startedDateTime with ties kept in file order.
/// Byte counts take the HAR wire sizes; a negative or missing size falls
/// back (see below) and marks the flow `size_is_estimated`:
///   - headersSize: length of the header block re-serialized from the header list
///   - request bodySize: postData.text length, then 0
///   - response bodySize: content.size, then 0
/// Identifiers derive from the document bytes, so the same input always
/// yields identical flows.
RunRecord parse_har(std::string_view document, const IngestOptions& opts);

/// HAR-shaped cookie extraction over request and response header lists.
std::pair<std::vector<Cookie>, std::vector<Cookie>> extract_cookies(const std::vector<HeaderField>& request_headers,
                                                                     const std::vector<HeaderField>& response_headers,
                                                                     CookieOptions opts = {});

} // namespace trafficledger::har
