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

#include "trafficledger/flow.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace trafficledger {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::Unclassified: return "Unclassified";
    case Category::CoreNavigation: return "CoreNavigation";
    case Category::UserContent: return "UserContent";
    case Category::SurveillanceTracking: return "SurveillanceTracking";
    case Category::Other: return "Other";
    }
    return "Unclassified";
}

Category category_from_string(std::string_view name) {
    for (Category c : {Category::Unclassified, Category::CoreNavigation, Category::UserContent,
                       Category::SurveillanceTracking, Category::Other}) {
        if (to_string(c) == name) return c;
    }
    throw std::invalid_argument("unknown category '" + std::string(name) + "'");
}

std::size_t category_index(Category c) {
    switch (c) {
    case Category::CoreNavigation: return 0;
    case Category::UserContent: return 1;
    case Category::SurveillanceTracking: return 2;
    case Category::Other: return 3;
    case Category::Unclassified: break;
    }
    throw std::invalid_argument("Unclassified has no category slot");
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

} // namespace

Url Url::parse(std::string_view text) {
    Url url;
    std::string_view rest = text;
    if (auto p = rest.find("://"); p != std::string_view::npos) {
        url.scheme = lower(rest.substr(0, p));
        rest.remove_prefix(p + 3);
    } else if (rest.starts_with("//")) {
        rest.remove_prefix(2);
    }
    // Drop fragment.
    if (auto f = rest.find('#'); f != std::string_view::npos) rest = rest.substr(0, f);

    const std::size_t auth_end = rest.find_first_of("/?");
    std::string_view authority = rest.substr(0, auth_end);
    rest = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);

    std::string_view host = authority;
    std::string_view port;
    if (host.starts_with('[')) {
        auto close = host.find(']');
        if (close == std::string_view::npos) throw std::invalid_argument("bad IPv6 literal in URL");
        if (close + 1 < host.size() && host[close + 1] == ':') port = host.substr(close + 2);
        host = host.substr(0, close + 1);
    } else if (auto colon = host.rfind(':'); colon != std::string_view::npos) {
        port = host.substr(colon + 1);
        host = host.substr(0, colon);
    }
    if (host.empty()) throw std::invalid_argument("URL has no host: '" + std::string(text) + "'");
    url.host = lower(host);
    if (!port.empty()) {
        unsigned value = 0;
        auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
        if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535)
            throw std::invalid_argument("bad port in URL: '" + std::string(text) + "'");
        url.port = static_cast<std::uint16_t>(value);
    }

    if (auto q = rest.find('?'); q != std::string_view::npos) {
        url.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    url.path = rest.empty() ? "/" : std::string(rest);
    return url;
}

std::string Url::to_string() const {
    std::string out;
    if (!scheme.empty()) out += scheme + "://";
    out += host;
    if (port) out += ":" + std::to_string(*port);
    out += path;
    if (!query.empty()) out += "?" + query;
    return out;
}

std::string Url::extension() const {
    std::string_view p = path;
    if (auto slash = p.rfind('/'); slash != std::string_view::npos) p.remove_prefix(slash + 1);
    auto dot = p.rfind('.');
    if (dot == std::string_view::npos || dot + 1 == p.size()) return {};
    return lower(p.substr(dot + 1));
}

void HttpFlow::assign_category(Category c) {
    if (c == Category::Unclassified && category != Category::Unclassified)
        throw std::logic_error("a classified flow cannot revert to Unclassified");
    category = c;
}

void bracket_run(JourneyRun& run, const std::vector<HttpFlow>& flows) {
    if (flows.empty()) return;
    auto first = flows.front().started_at;
    auto last = flows.front().completed_at;
    for (const auto& f : flows) {
        first = std::min(first, f.started_at);
        last = std::max(last, f.completed_at);
    }
    run.started_at = first;
    run.ended_at = last;
}

std::string random_id() {
    thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string stable_id(std::string_view content) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : content) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace trafficledger
