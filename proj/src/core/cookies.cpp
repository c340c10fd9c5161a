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

#include "trafficledger/cookies.hpp"

#include <cctype>

namespace trafficledger {

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

namespace {

Cookie unparsed(std::string_view raw) {
    Cookie c;
    c.name = std::string(kUnparsedCookieName);
    c.value_bytes = raw.size();
    return c;
}

bool valid_name(std::string_view name) {
    if (name.empty()) return false;
    for (unsigned char ch : name) {
        if (ch <= 0x20 || ch >= 0x7f || ch == '=' || ch == ';' || ch == ',') return false;
    }
    return true;
}

} // namespace

std::vector<Cookie> parse_cookie_header(std::string_view value, CookieOptions opts) {
    std::vector<Cookie> out;
    while (!value.empty()) {
        const auto semi = value.find(';');
        std::string_view fragment = trim(value.substr(0, semi));
        value = semi == std::string_view::npos ? std::string_view{} : value.substr(semi + 1);
        if (fragment.empty()) continue;

        const auto eq = fragment.find('=');
        std::string_view name = eq == std::string_view::npos ? std::string_view{} : trim(fragment.substr(0, eq));
        if (!valid_name(name)) {
            out.push_back(unparsed(fragment));
            continue;
        }
        std::string_view v = trim(fragment.substr(eq + 1));
        Cookie c;
        c.name = std::string(name);
        c.value_bytes = v.size();
        if (opts.keep_values) c.value = std::string(v);
        out.push_back(std::move(c));
    }
    return out;
}

Cookie parse_set_cookie_header(std::string_view value, CookieOptions opts) {
    const auto semi = value.find(';');
    std::string_view pair = trim(value.substr(0, semi));
    const auto eq = pair.find('=');
    std::string_view name = eq == std::string_view::npos ? std::string_view{} : trim(pair.substr(0, eq));
    if (!valid_name(name)) return unparsed(trim(value));

    Cookie c;
    c.name = std::string(name);
    std::string_view v = trim(pair.substr(eq + 1));
    c.value_bytes = v.size();
    if (opts.keep_values) c.value = std::string(v);

    std::string_view attrs = semi == std::string_view::npos ? std::string_view{} : value.substr(semi + 1);
    while (!attrs.empty()) {
        const auto next = attrs.find(';');
        std::string_view attr = trim(attrs.substr(0, next));
        attrs = next == std::string_view::npos ? std::string_view{} : attrs.substr(next + 1);
        if (attr.empty()) continue;
        const auto aeq = attr.find('=');
        std::string_view key = trim(attr.substr(0, aeq));
        std::string_view aval = aeq == std::string_view::npos ? std::string_view{} : trim(attr.substr(aeq + 1));
        if (iequals(key, "secure")) {
            c.secure = true;
        } else if (iequals(key, "httponly")) {
            c.http_only = true;
        } else if (iequals(key, "samesite")) {
            c.same_site = std::string(aval);
        } else if (iequals(key, "domain") && !aval.empty()) {
            c.domain = std::string(aval);
        }
    }
    return c;
}

std::pair<std::vector<Cookie>, std::vector<Cookie>> cookies_from_headers(
    const std::vector<HeaderField>& request_headers, const std::vector<HeaderField>& response_headers,
    CookieOptions opts) {
    std::pair<std::vector<Cookie>, std::vector<Cookie>> out;
    for (const auto& h : request_headers) {
        if (!iequals(h.name, "cookie")) continue;
        auto parsed = parse_cookie_header(h.value, opts);
        out.first.insert(out.first.end(), parsed.begin(), parsed.end());
    }
    for (const auto& h : response_headers) {
        if (iequals(h.name, "set-cookie")) out.second.push_back(parse_set_cookie_header(h.value, opts));
    }
    return out;
}

} // namespace trafficledger
