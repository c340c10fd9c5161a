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

#include "trafficledger/proxy/http_message.hpp"

#include <algorithm>
#include <charconv>

namespace trafficledger::net {

namespace {

constexpr std::size_t kMaxHeaderBytes = 256 * 1024;

void read_headers(BufferedReader& in, std::vector<HeaderField>& headers, std::size_t& wire) {
    std::string line;
    for (;;) {
        if (!in.read_line(line)) throw HttpError("connection closed inside header block");
        wire += line.size() + 2;
        if (wire > kMaxHeaderBytes) throw HttpError("header block too large");
        if (line.empty()) return;
        if ((line[0] == ' ' || line[0] == '\t') && !headers.empty()) {
            // obsolete line folding
            headers.back().value += " " + std::string(trim(line));
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos || colon == 0) throw HttpError("malformed header line");
        headers.push_back({std::string(trim(std::string_view(line).substr(0, colon))),
                           std::string(trim(std::string_view(line).substr(colon + 1)))});
    }
}

std::optional<std::uint64_t> parse_u64(std::string_view s, int base = 10) {
    s = trim(s);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p == s.data()) return std::nullopt;
    if (base == 10 && p != s.data() + s.size()) return std::nullopt;
    return v;
}

void forward(Stream* out, std::string_view bytes) {
    if (out) out->write_all(bytes);
}

void append_capture(RelayProgress& p, bool capture, std::string_view data, std::size_t limit) {
    if (!capture || p.captured.size() >= limit) return;
    p.captured.append(data.substr(0, limit - p.captured.size()));
}

void relay_exact(BufferedReader& in, Stream* out, std::uint64_t n, bool capture, RelayProgress& p,
                 std::size_t limit) {
    char buf[32 * 1024];
    while (n > 0) {
        const std::size_t got = in.read_some(buf, static_cast<std::size_t>(std::min<std::uint64_t>(n, sizeof buf)));
        if (got == 0) throw IoError("stream ended inside message body");
        forward(out, {buf, got});
        p.wire_bytes += got;
        append_capture(p, capture, {buf, got}, limit);
        n -= got;
    }
}

} // namespace

std::optional<RequestHead> read_request_head(BufferedReader& in) {
    RequestHead head;
    std::string line;
    // tolerate stray CRLFs between pipelined requests
    do {
        if (!in.read_line(line)) return std::nullopt;
        head.wire_size += line.size() + 2;
    } while (line.empty());

    const auto sp1 = line.find(' ');
    const auto sp2 = line.rfind(' ');
    if (sp1 == std::string::npos || sp2 == sp1) throw HttpError("malformed request line");
    head.method = line.substr(0, sp1);
    head.target = line.substr(sp1 + 1, sp2 - sp1 - 1);
    head.version = line.substr(sp2 + 1);
    if (!head.version.starts_with("HTTP/1.")) throw HttpError("unsupported protocol '" + head.version + "'");
    read_headers(in, head.headers, head.wire_size);
    return head;
}

ResponseHead read_response_head(BufferedReader& in) {
    ResponseHead head;
    std::string line;
    if (!in.read_line(line)) throw HttpError("upstream closed before responding");
    head.wire_size += line.size() + 2;
    const auto sp1 = line.find(' ');
    if (sp1 == std::string::npos) throw HttpError("malformed status line");
    head.version = line.substr(0, sp1);
    const auto sp2 = line.find(' ', sp1 + 1);
    auto code = parse_u64(std::string_view(line).substr(sp1 + 1, sp2 == std::string::npos ? std::string::npos : sp2 - sp1 - 1));
    if (!code || *code < 100 || *code > 999) throw HttpError("malformed status code");
    head.status = static_cast<int>(*code);
    if (sp2 != std::string::npos) head.reason = line.substr(sp2 + 1);
    read_headers(in, head.headers, head.wire_size);
    return head;
}

std::string serialize(const RequestHead& head) {
    std::string out = head.method + " " + head.target + " " + head.version + "\r\n";
    for (const auto& h : head.headers) out += h.name + ": " + h.value + "\r\n";
    out += "\r\n";
    return out;
}

std::string serialize(const ResponseHead& head) {
    std::string out = head.version + " " + std::to_string(head.status);
    if (!head.reason.empty()) out += " " + head.reason;
    out += "\r\n";
    for (const auto& h : head.headers) out += h.name + ": " + h.value + "\r\n";
    out += "\r\n";
    return out;
}

std::optional<std::string_view> header_value(const std::vector<HeaderField>& headers, std::string_view name) {
    for (const auto& h : headers)
        if (iequals(h.name, name)) return std::string_view(h.value);
    return std::nullopt;
}

void remove_header(std::vector<HeaderField>& headers, std::string_view name) {
    std::erase_if(headers, [&](const HeaderField& h) { return iequals(h.name, name); });
}

bool header_has_token(const std::vector<HeaderField>& headers, std::string_view name, std::string_view token) {
    for (const auto& h : headers) {
        if (!iequals(h.name, name)) continue;
        std::string_view v = h.value;
        while (!v.empty()) {
            const auto comma = v.find(',');
            if (iequals(trim(v.substr(0, comma)), token)) return true;
            if (comma == std::string_view::npos) break;
            v.remove_prefix(comma + 1);
        }
    }
    return false;
}

void strip_hop_by_hop(std::vector<HeaderField>& headers) {
    std::vector<std::string> named;
    for (const auto& h : headers) {
        if (!iequals(h.name, "Connection")) continue;
        std::string_view v = h.value;
        while (!v.empty()) {
            const auto comma = v.find(',');
            auto tok = trim(v.substr(0, comma));
            if (!tok.empty() && !iequals(tok, "close") && !iequals(tok, "keep-alive")) named.emplace_back(tok);
            if (comma == std::string_view::npos) break;
            v.remove_prefix(comma + 1);
        }
    }
    for (const char* n : {"Connection", "Proxy-Connection", "Proxy-Authorization", "Keep-Alive", "TE", "Upgrade"})
        remove_header(headers, n);
    for (const auto& n : named) remove_header(headers, n);
}

Framing request_framing(const RequestHead& head) {
    if (header_has_token(head.headers, "Transfer-Encoding", "chunked")) return {BodyFraming::Chunked, 0};
    if (auto cl = header_value(head.headers, "Content-Length")) {
        auto n = parse_u64(*cl);
        if (!n) throw HttpError("bad Content-Length");
        return {*n ? BodyFraming::ContentLength : BodyFraming::None, *n};
    }
    return {BodyFraming::None, 0};
}

Framing response_framing(std::string_view request_method, const ResponseHead& head) {
    if (iequals(request_method, "HEAD") || head.status / 100 == 1 || head.status == 204 || head.status == 304)
        return {BodyFraming::None, 0};
    if (header_has_token(head.headers, "Transfer-Encoding", "chunked")) return {BodyFraming::Chunked, 0};
    if (auto cl = header_value(head.headers, "Content-Length")) {
        auto n = parse_u64(*cl);
        if (!n) throw HttpError("bad Content-Length");
        return {*n ? BodyFraming::ContentLength : BodyFraming::None, *n};
    }
    return {BodyFraming::UntilClose, 0};
}

void relay_body(BufferedReader& in, Stream* out, const Framing& framing, bool capture, RelayProgress& p,
                std::size_t limit) {
    switch (framing.kind) {
    case BodyFraming::None:
        break;
    case BodyFraming::ContentLength:
        relay_exact(in, out, framing.length, capture, p, limit);
        break;
    case BodyFraming::UntilClose: {
        char buf[32 * 1024];
        for (;;) {
            const std::size_t got = in.read_some(buf, sizeof buf);
            if (got == 0) break;
            forward(out, {buf, got});
            p.wire_bytes += got;
            append_capture(p, capture, {buf, got}, limit);
        }
        break;
    }
    case BodyFraming::Chunked: {
        std::string line;
        for (;;) {
            if (!in.read_line(line)) throw IoError("stream ended inside chunked body");
            forward(out, line + "\r\n");
            p.wire_bytes += line.size() + 2;
            const auto size = parse_u64(std::string_view(line).substr(0, line.find(';')), 16);
            if (!size) throw HttpError("bad chunk size");
            if (*size == 0) break;
            p.complete = false;
            relay_exact(in, out, *size, capture, p, limit);
            if (!in.read_line(line) || !line.empty()) throw HttpError("missing chunk terminator");
            forward(out, "\r\n");
            p.wire_bytes += 2;
        }
        // trailer section
        for (;;) {
            if (!in.read_line(line)) throw IoError("stream ended inside chunk trailer");
            forward(out, line + "\r\n");
            p.wire_bytes += line.size() + 2;
            if (line.empty()) break;
        }
        break;
    }
    }
    p.complete = true;
}

std::string make_simple_response(int status, std::string_view reason, std::string_view body) {
    std::string out = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) + "\r\n";
    out += "Content-Type: text/plain\r\nConnection: close\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n";
    out += body;
    return out;
}

} // namespace trafficledger::net
