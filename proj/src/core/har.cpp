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

#include "trafficledger/har.hpp"

#include "trafficledger/json_codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace trafficledger::har {

namespace {

struct Ctx {
    std::string path;

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(path, what); }

    Ctx child(const std::string& key) const { return {path + "." + key}; }
    Ctx index(std::size_t i) const { return {path + "[" + std::to_string(i) + "]"}; }
};

const Json& member(const Json& obj, const Ctx& ctx, const char* key) {
    if (!obj.is_object()) ctx.fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) ctx.child(key).fail("missing");
    return *it;
}

const Json* optional_member(const Json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

std::string string_member(const Json& obj, const Ctx& ctx, const char* key) {
    const Json& v = member(obj, ctx, key);
    if (!v.is_string()) ctx.child(key).fail("expected a string");
    return v.get<std::string>();
}

/// HAR sizes: integers where -1 means unknown. Returns nullopt for unknown.
std::optional<std::uint64_t> size_member(const Json& obj, const Ctx& ctx, const char* key) {
    const Json* v = optional_member(obj, key);
    if (!v) return std::nullopt;
    if (!v->is_number()) ctx.child(key).fail("expected a number");
    const double d = v->get<double>();
    if (d < 0) return std::nullopt;
    return static_cast<std::uint64_t>(std::llround(d));
}

std::vector<HeaderField> headers_member(const Json& obj, const Ctx& ctx) {
    std::vector<HeaderField> out;
    const Json* v = optional_member(obj, "headers");
    if (!v) return out;
    const Ctx hctx = ctx.child("headers");
    if (!v->is_array()) hctx.fail("expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
        const Json& h = (*v)[i];
        const Ctx ictx = hctx.index(i);
        out.push_back({string_member(h, ictx, "name"), string_member(h, ictx, "value")});
    }
    return out;
}

std::uint64_t serialized_header_bytes(std::string_view first_line, const std::vector<HeaderField>& headers) {
    std::uint64_t n = first_line.size() + 2;
    for (const auto& h : headers) n += h.name.size() + 2 + h.value.size() + 2;
    return n + 2;
}

std::optional<std::string> header_value(const std::vector<HeaderField>& headers, std::string_view name) {
    for (const auto& h : headers) {
        if (iequals(h.name, name)) return h.value;
    }
    return std::nullopt;
}

struct ParsedEntry {
    HttpFlow flow;
    std::size_t file_index;
};

ParsedEntry parse_entry(const Json& entry, const Ctx& ctx, std::size_t file_index, const IngestOptions& opts) {
    HttpFlow f;
    if (!entry.is_object()) ctx.fail("expected an object");

    const std::string started = string_member(entry, ctx, "startedDateTime");
    try {
        f.started_at = parse_timestamp(started);
    } catch (const std::invalid_argument& e) {
        ctx.child("startedDateTime").fail(e.what());
    }

    double total_ms = -1;
    if (const Json* t = optional_member(entry, "time"); t && t->is_number()) total_ms = t->get<double>();
    if (total_ms < 0) {
        total_ms = 0;
        if (const Json* timings = optional_member(entry, "timings"); timings && timings->is_object()) {
            for (const auto& [k, v] : timings->items()) {
                if (v.is_number() && v.get<double>() > 0 && k != "comment") total_ms += v.get<double>();
            }
        }
    }
    f.completed_at = f.started_at + Millis(std::llround(total_ms));

    const Ctx rq = ctx.child("request");
    const Json& request = member(entry, ctx, "request");
    f.method = string_member(request, rq, "method");
    const std::string url = string_member(request, rq, "url");
    try {
        f.url = Url::parse(url);
    } catch (const std::invalid_argument& e) {
        rq.child("url").fail(e.what());
    }
    const std::string http_version = [&] {
        const Json* v = optional_member(request, "httpVersion");
        return v && v->is_string() ? v->get<std::string>() : std::string("HTTP/1.1");
    }();
    const auto req_headers = headers_member(request, rq);

    if (auto hs = size_member(request, rq, "headersSize")) {
        f.request_header_bytes = *hs;
    } else {
        std::string target = f.url.path + (f.url.query.empty() ? "" : "?" + f.url.query);
        f.request_header_bytes = serialized_header_bytes(f.method + " " + target + " " + http_version, req_headers);
        f.size_is_estimated = true;
    }

    const Json* post = optional_member(request, "postData");
    std::optional<std::string> post_text;
    if (post && post->is_object()) {
        if (const Json* t = optional_member(*post, "text"); t && t->is_string()) post_text = t->get<std::string>();
    }
    if (auto bs = size_member(request, rq, "bodySize")) {
        f.request_body_bytes = *bs;
    } else {
        f.request_body_bytes = post_text ? post_text->size() : 0;
        f.size_is_estimated = true;
    }
    if (opts.keep_request_bodies && post_text) f.request_body = post_text;

    const Ctx rs = ctx.child("response");
    const Json& response = member(entry, ctx, "response");
    const Json& status = member(response, rs, "status");
    if (!status.is_number()) rs.child("status").fail("expected a number");
    f.status = status.get<int>();
    const auto resp_headers = headers_member(response, rs);

    if (auto hs = size_member(response, rs, "headersSize")) {
        f.response_header_bytes = *hs;
    } else {
        std::string status_line = "HTTP/1.1 " + std::to_string(f.status);
        if (const Json* st = optional_member(response, "statusText"); st && st->is_string())
            status_line += " " + st->get<std::string>();
        f.response_header_bytes = serialized_header_bytes(status_line, resp_headers);
        f.size_is_estimated = true;
    }

    const Json* content = optional_member(response, "content");
    if (auto bs = size_member(response, rs, "bodySize")) {
        f.response_body_bytes = *bs;
    } else {
        std::optional<std::uint64_t> content_size;
        if (content) content_size = size_member(*content, rs.child("content"), "size");
        f.response_body_bytes = content_size.value_or(0);
        f.size_is_estimated = true;
    }

    if (content) {
        if (const Json* mt = optional_member(*content, "mimeType"); mt && mt->is_string() && !mt->get<std::string>().empty())
            f.content_type = mt->get<std::string>();
    }
    if (!f.content_type) f.content_type = header_value(resp_headers, "content-type");

    auto [req_cookies, set_cookies] = extract_cookies(req_headers, resp_headers, opts.cookies);
    f.request_cookies = std::move(req_cookies);
    f.set_cookies = std::move(set_cookies);
    return {std::move(f), file_index};
}

} // namespace

std::pair<std::vector<Cookie>, std::vector<Cookie>> extract_cookies(const std::vector<HeaderField>& request_headers,
                                                                     const std::vector<HeaderField>& response_headers,
                                                                     CookieOptions opts) {
    return cookies_from_headers(request_headers, response_headers, opts);
}

RunRecord parse_har(std::string_view document, const IngestOptions& opts) {
    Json root;
    try {
        root = Json::parse(document);
    } catch (const Json::exception& e) {
        throw ParseError("$", e.what());
    }
    const Ctx top{"$"};
    const Ctx log_ctx{"log"};
    const Json& log = member(root, top, "log");
    const std::string version = string_member(log, log_ctx, "version");
    if (version != "1.2" && version != "1.1") throw UnsupportedVersion(version);

    const Json& entries = member(log, log_ctx, "entries");
    const Ctx entries_ctx = log_ctx.child("entries");
    if (!entries.is_array()) entries_ctx.fail("expected an array");

    std::vector<ParsedEntry> parsed;
    parsed.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) parsed.push_back(parse_entry(entries[i], entries_ctx.index(i), i, opts));
    std::stable_sort(parsed.begin(), parsed.end(),
                     [](const ParsedEntry& a, const ParsedEntry& b) { return a.flow.started_at < b.flow.started_at; });

    RunRecord rec;
    JourneyRun& run = rec.run;
    run.run_id = opts.run_id.value_or(
        stable_id(std::string(document) + '\0' + opts.platform_id + '\0' + opts.journey_name));
    run.platform_id = opts.platform_id;
    run.journey_name = opts.journey_name;

    rec.flows.reserve(parsed.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        HttpFlow& f = parsed[i].flow;
        char suffix[24];
        std::snprintf(suffix, sizeof suffix, "-%06zu", i);
        f.flow_id = run.run_id + suffix;
        f.run_id = run.run_id;
        run.flow_ids.push_back(f.flow_id);
        rec.flows.push_back(std::move(f));
    }

    if (!rec.flows.empty()) {
        bracket_run(run, rec.flows);
    } else {
        // No traffic: anchor on the first page, if any, with zero duration.
        Timestamp anchor{};
        if (const Json* pages = optional_member(log, "pages"); pages && pages->is_array() && !pages->empty()) {
            if (const Json* s = optional_member((*pages)[0], "startedDateTime"); s && s->is_string()) {
                try {
                    anchor = parse_timestamp(s->get<std::string>());
                } catch (const std::invalid_argument& e) {
                    throw ParseError("log.pages[0].startedDateTime", e.what());
                }
            }
        }
        run.started_at = run.ended_at = anchor;
    }
    return rec;
}

} // namespace trafficledger::har
