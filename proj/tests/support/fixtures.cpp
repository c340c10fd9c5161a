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

#include "fixtures.hpp"

#include "trafficledger/json_codec.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tltest {

namespace fs = std::filesystem;
using trafficledger::Json;

TempDir::TempDir() {
    std::random_device rd;
    char name[64];
    std::snprintf(name, sizeof name, "tl-test-%08x%08x", rd(), rd());
    path_ = fs::temp_directory_path() / name;
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

Timestamp ts(std::int64_t ms) { return Timestamp(Millis(ms)); }

HttpFlow make_flow(const std::string& run_id, std::size_t index, const std::string& url, const std::string& method,
                   std::optional<std::string> content_type, std::uint64_t req_header, std::uint64_t req_body,
                   std::uint64_t resp_header, std::uint64_t resp_body, Timestamp start, Millis took) {
    HttpFlow f;
    char id[32];
    std::snprintf(id, sizeof id, "-f%05zu", index);
    f.flow_id = run_id + id;
    f.run_id = run_id;
    f.url = trafficledger::Url::parse(url);
    f.method = method;
    f.status = 200;
    f.request_header_bytes = req_header;
    f.request_body_bytes = req_body;
    f.response_header_bytes = resp_header;
    f.response_body_bytes = resp_body;
    f.content_type = std::move(content_type);
    f.started_at = start;
    f.completed_at = start + took;
    return f;
}

HttpFlow flow_for_category(Category c, const std::string& run_id, std::size_t index, std::uint64_t bytes,
                           Timestamp start, Millis took) {
    switch (c) {
    case Category::CoreNavigation:
        return make_flow(run_id, index, "https://x.com/home", "GET", "text/html; charset=utf-8", 0, 0, 0, bytes, start,
                         took);
    case Category::UserContent:
        return make_flow(run_id, index, "https://pbs.twimg.com/media/F00.jpg", "GET", "image/jpeg", 0, 0, 0, bytes,
                         start, took);
    case Category::SurveillanceTracking: {
        const std::string payload = R"({"action":"impression"})";
        HttpFlow f = make_flow(run_id, index, "https://x.com/i/api/1.1/graphql/user_flow.json", "POST",
                               "application/json", 0, 0, 0, bytes, start, took);
        if (bytes >= payload.size()) {
            f.request_body_bytes = payload.size();
            f.response_body_bytes = bytes - payload.size();
            f.request_body = payload;
        }
        return f;
    }
    case Category::Other:
    case Category::Unclassified:
        break;
    }
    return make_flow(run_id, index, "https://unknown.example/blob", "GET", "application/octet-stream", 0, 0, 0, bytes,
                     start, took);
}

RunRecord synthetic_record(const std::string& platform, const std::string& journey,
                           const std::array<std::uint64_t, 4>& bytes, Millis duration, Timestamp start, int split) {
    RunRecord rec;
    rec.run.run_id = trafficledger::stable_id(platform + "/" + journey + "/" + std::to_string(start.time_since_epoch().count()) +
                                              "/" + std::to_string(bytes[0]) + "," + std::to_string(bytes[1]) + "," +
                                              std::to_string(bytes[2]) + "," + std::to_string(bytes[3]));
    rec.run.platform_id = platform;
    rec.run.journey_name = journey;
    rec.run.started_at = start;
    rec.run.ended_at = start + duration;
    std::size_t index = 0;
    const Millis took = std::min(duration, Millis(1));
    for (std::size_t i = 0; i < 4; ++i) {
        if (bytes[i] == 0) continue;
        const int parts = std::max(1, split);
        std::uint64_t left = bytes[i];
        for (int p = 0; p < parts; ++p) {
            const std::uint64_t chunk = p + 1 == parts ? left : bytes[i] / static_cast<std::uint64_t>(parts);
            left -= chunk;
            rec.flows.push_back(
                flow_for_category(trafficledger::kAssignableCategories[i], rec.run.run_id, index++, chunk, start, took));
        }
    }
    // the last flow completes at the run end so bracketing reproduces `duration`
    if (!rec.flows.empty()) rec.flows.back().completed_at = start + duration;
    for (const auto& f : rec.flows) rec.run.flow_ids.push_back(f.flow_id);
    return rec;
}

trafficledger::analytics::ClassifiedRun classified_run(const std::string& platform, const std::string& journey,
                                                       const std::array<std::uint64_t, 4>& bytes, Millis duration,
                                                       std::uint64_t actions) {
    trafficledger::analytics::ClassifiedRun cr;
    cr.run.run_id = trafficledger::random_id();
    cr.run.platform_id = platform;
    cr.run.journey_name = journey;
    cr.run.started_at = ts(1'700'000'000'000);
    cr.run.ended_at = cr.run.started_at + duration;
    for (std::size_t i = 0; i < 4; ++i) {
        cr.breakdown.bytes[i] = bytes[i];
        cr.breakdown.flows[i] = bytes[i] ? 1 : 0;
        cr.breakdown.total_bytes += bytes[i];
        cr.breakdown.total_flows += cr.breakdown.flows[i];
    }
    cr.action_count = actions;
    return cr;
}

std::string random_har(std::size_t entries, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); };
    static const char* urls[] = {
        "https://x.com/home",
        "https://x.com/i/api/graphql/abc/HomeTimeline?variables=%7B%7D",
        "https://x.com/i/api/1.1/graphql/user_flow.json",
        "https://abs.twimg.com/responsive-web/client-web/main.js",
        "https://pbs.twimg.com/media/GXa1.jpg?format=jpg&name=small",
        "https://video.twimg.com/ext_tw_video/1/pu/vid/avc1/720x1280/a.mp4",
        "https://api.x.com/1.1/jot/client_event.json",
        "https://unknown.example/path/blob.bin",
    };
    static const char* types[] = {"text/html", "application/json", "application/javascript", "image/jpeg",
                                  "video/mp4", "application/octet-stream", ""};

    Json log = {{"version", "1.2"}, {"creator", {{"name", "fixture"}, {"version", "1"}}}, {"entries", Json::array()}};
    const std::int64_t base = 1'700'000'000'000;
    for (std::size_t i = 0; i < entries; ++i) {
        const bool post = pick(0, 3) == 0;
        Json req_headers = Json::array();
        const auto nreq = pick(1, 6);
        for (std::uint64_t h = 0; h < nreq; ++h)
            req_headers.push_back({{"name", "x-h" + std::to_string(h)}, {"value", std::string(pick(0, 40), 'v')}});
        if (pick(0, 2) == 0) req_headers.push_back({{"name", "Cookie"}, {"value", "a=1; guest_id=v1%3A17"}});
        Json resp_headers = Json::array({{{"name", "content-length"}, {"value", "0"}}});
        if (pick(0, 3) == 0) resp_headers.push_back({{"name", "set-cookie"}, {"value", "ct0=abc; Secure; HttpOnly"}});

        Json request = {{"method", post ? "POST" : "GET"},
                        {"url", urls[pick(0, std::size(urls) - 1)]},
                        {"httpVersion", "HTTP/2"},
                        {"headers", req_headers},
                        {"queryString", Json::array()},
                        {"cookies", Json::array()},
                        {"headersSize", pick(0, 4) == 0 ? -1 : static_cast<std::int64_t>(pick(50, 2000))},
                        {"bodySize", 0}};
        if (post) {
            const std::string text = pick(0, 1) ? R"({"action":"impression","n":)" + std::to_string(i) + "}"
                                                : std::string(pick(1, 300), 'p');
            request["postData"] = {{"mimeType", "application/json"}, {"text", text}};
            request["bodySize"] = pick(0, 3) == 0 ? -1 : static_cast<std::int64_t>(text.size() + pick(0, 10));
        }
        const std::string type = types[pick(0, std::size(types) - 1)];
        Json content = {{"size", static_cast<std::int64_t>(pick(0, 5'000'000))}, {"mimeType", type}};
        Json response = {{"status", 200},
                         {"statusText", "OK"},
                         {"httpVersion", "HTTP/2"},
                         {"headers", resp_headers},
                         {"cookies", Json::array()},
                         {"content", content},
                         {"redirectURL", ""},
                         {"headersSize", pick(0, 4) == 0 ? -1 : static_cast<std::int64_t>(pick(50, 1500))},
                         {"bodySize", pick(0, 5) == 0 ? -1 : static_cast<std::int64_t>(pick(0, 5'000'000))}};
        const auto start = base + static_cast<std::int64_t>(pick(0, 360'000));
        const auto started = trafficledger::format_timestamp(ts(start));
        Json entry = {{"startedDateTime", started},
                      {"time", static_cast<double>(pick(1, 4000)) + 0.25},
                      {"request", request},
                      {"response", response},
                      {"cache", Json::object()},
                      {"timings", {{"send", 1}, {"wait", 10}, {"receive", 5}}}};
        log["entries"].push_back(std::move(entry));
    }
    return Json{{"log", log}}.dump();
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

} // namespace tltest
