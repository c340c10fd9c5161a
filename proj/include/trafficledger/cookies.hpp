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

#include <string_view>
#include <utility>
#include <vector>

namespace trafficledger {

/// Name used for a fragment that does not parse as `name=value`.
inline constexpr std::string_view kUnparsedCookieName = "(unparsed)";

struct HeaderField {
    std::string name;
    std::string value;
};

struct CookieOptions {
    bool keep_values = false;
};

/// Parses one `Cookie:` header value. Never throws.
std::vector<Cookie> parse_cookie_header(std::string_view value, CookieOptions opts = {});

/// Parses one `Set-Cookie:` header value into a single cookie. Never throws.
Cookie parse_set_cookie_header(std::string_view value, CookieOptions opts = {});

/// Walks a header list, collecting request cookies from `Cookie` and
/// response cookies from `Set-Cookie` (names compared case-insensitively).
std::pair<std::vector<Cookie>, std::vector<Cookie>> cookies_from_headers(
    const std::vector<HeaderField>& request_headers, const std::vector<HeaderField>& response_headers,
    CookieOptions opts = {});

bool iequals(std::string_view a, std::string_view b);
std::string_view trim(std::string_view s);

} // namespace trafficledger
