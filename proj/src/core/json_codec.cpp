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

#include "trafficledger/json_codec.hpp"

#include <array>
#include <stdexcept>

namespace trafficledger {

namespace {

constexpr std::string_view kB64 = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

template <class T>
void put_optional(Json& j, const char* key, const std::optional<T>& v) {
    if (v) j[key] = *v;
}

template <class T>
std::optional<T> get_optional(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

Json cookies_to_json(const std::vector<Cookie>& cookies) {
    Json arr = Json::array();
    for (const auto& c : cookies) arr.push_back(to_json(c));
    return arr;
}

std::vector<Cookie> cookies_from_json(const Json& j) {
    std::vector<Cookie> out;
    for (const auto& c : j) out.push_back(cookie_from_json(c));
    return out;
}

} // namespace

Json to_json(const Url& url) {
    Json j{{"scheme", url.scheme}, {"host", url.host}, {"path", url.path}, {"query", url.query}};
    put_optional(j, "port", url.port);
    return j;
}

Json to_json(const Cookie& c) {
    Json j{{"name", c.name}, {"value_bytes", c.value_bytes}, {"secure", c.secure}, {"http_only", c.http_only}};
    put_optional(j, "value", c.value);
    put_optional(j, "domain", c.domain);
    put_optional(j, "same_site", c.same_site);
    return j;
}

Json to_json(const HttpFlow& f) {
    Json j{
        {"flow_id", f.flow_id},
        {"run_id", f.run_id},
        {"url", to_json(f.url)},
        {"method", f.method},
        {"status", f.status},
        {"request_header_bytes", f.request_header_bytes},
        {"request_body_bytes", f.request_body_bytes},
        {"response_header_bytes", f.response_header_bytes},
        {"response_body_bytes", f.response_body_bytes},
        {"size_is_estimated", f.size_is_estimated},
        {"request_cookies", cookies_to_json(f.request_cookies)},
        {"set_cookies", cookies_to_json(f.set_cookies)},
        {"started_at", format_timestamp(f.started_at)},
        {"completed_at", format_timestamp(f.completed_at)},
        {"category", to_string(f.category)},
    };
    put_optional(j, "content_type", f.content_type);
    if (f.request_body) j["request_body_b64"] = base64_encode(*f.request_body);
    return j;
}

Json to_json(const JourneyRun& r) {
    return Json{
        {"run_id", r.run_id},
        {"journey_name", r.journey_name},
        {"platform_id", r.platform_id},
        {"started_at", format_timestamp(r.started_at)},
        {"ended_at", format_timestamp(r.ended_at)},
        {"flow_ids", r.flow_ids},
        {"complete", r.complete},
    };
}

Url url_from_json(const Json& j) {
    Url u;
    u.scheme = j.at("scheme").get<std::string>();
    u.host = j.at("host").get<std::string>();
    u.path = j.at("path").get<std::string>();
    u.query = j.at("query").get<std::string>();
    u.port = get_optional<std::uint16_t>(j, "port");
    return u;
}

Cookie cookie_from_json(const Json& j) {
    Cookie c;
    c.name = j.at("name").get<std::string>();
    c.value_bytes = j.at("value_bytes").get<std::uint64_t>();
    c.secure = j.at("secure").get<bool>();
    c.http_only = j.at("http_only").get<bool>();
    c.value = get_optional<std::string>(j, "value");
    c.domain = get_optional<std::string>(j, "domain");
    c.same_site = get_optional<std::string>(j, "same_site");
    if (c.name.empty()) throw std::invalid_argument("cookie name is empty");
    return c;
}

HttpFlow flow_from_json(const Json& j) {
    HttpFlow f;
    f.flow_id = j.at("flow_id").get<std::string>();
    f.run_id = j.at("run_id").get<std::string>();
    f.url = url_from_json(j.at("url"));
    f.method = j.at("method").get<std::string>();
    f.status = j.at("status").get<int>();
    f.request_header_bytes = j.at("request_header_bytes").get<std::uint64_t>();
    f.request_body_bytes = j.at("request_body_bytes").get<std::uint64_t>();
    f.response_header_bytes = j.at("response_header_bytes").get<std::uint64_t>();
    f.response_body_bytes = j.at("response_body_bytes").get<std::uint64_t>();
    f.size_is_estimated = j.at("size_is_estimated").get<bool>();
    f.request_cookies = cookies_from_json(j.at("request_cookies"));
    f.set_cookies = cookies_from_json(j.at("set_cookies"));
    f.started_at = parse_timestamp(j.at("started_at").get<std::string>());
    f.completed_at = parse_timestamp(j.at("completed_at").get<std::string>());
    f.category = category_from_string(j.at("category").get<std::string>());
    f.content_type = get_optional<std::string>(j, "content_type");
    if (auto b = get_optional<std::string>(j, "request_body_b64")) f.request_body = base64_decode(*b);
    if (f.completed_at < f.started_at) throw std::invalid_argument("flow completes before it starts");
    return f;
}

JourneyRun run_from_json(const Json& j) {
    JourneyRun r;
    r.run_id = j.at("run_id").get<std::string>();
    r.journey_name = j.at("journey_name").get<std::string>();
    r.platform_id = j.at("platform_id").get<std::string>();
    r.started_at = parse_timestamp(j.at("started_at").get<std::string>());
    r.ended_at = parse_timestamp(j.at("ended_at").get<std::string>());
    r.flow_ids = j.at("flow_ids").get<std::vector<std::string>>();
    r.complete = j.at("complete").get<bool>();
    return r;
}

std::string base64_encode(std::string_view bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) | static_cast<unsigned char>(bytes[i + 2]);
        out += kB64[v >> 18];
        out += kB64[(v >> 12) & 63];
        out += kB64[(v >> 6) & 63];
        out += kB64[v & 63];
    }
    if (i < bytes.size()) {
        unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
        out += kB64[v >> 18];
        out += kB64[(v >> 12) & 63];
        out += i + 1 < bytes.size() ? kB64[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

std::string base64_decode(std::string_view text) {
    std::array<int, 256> rev;
    rev.fill(-1);
    for (std::size_t k = 0; k < kB64.size(); ++k) rev[static_cast<unsigned char>(kB64[k])] = static_cast<int>(k);
    if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
    std::string out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                vals[k] = 0;
                ++pad;
                continue;
            }
            if (pad > 0 || (vals[k] = rev[static_cast<unsigned char>(c)]) < 0)
                throw std::invalid_argument("invalid base64 input");
        }
        const unsigned v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out += static_cast<char>(v >> 16);
        if (pad < 2) out += static_cast<char>((v >> 8) & 0xff);
        if (pad < 1) out += static_cast<char>(v & 0xff);
    }
    return out;
}

} // namespace trafficledger
