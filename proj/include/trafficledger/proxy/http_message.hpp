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
#include "trafficledger/proxy/socket.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace trafficledger::net {

class HttpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RequestHead {
    std::string method;
    std::string target;
    std::string version = "HTTP/1.1";
    std::vector<HeaderField> headers;
    /// Exact bytes of the head as read, terminator included.
    std::size_t wire_size = 0;
};

struct ResponseHead {
    std::string version = "HTTP/1.1";
    int status = 0;
    std::string reason;
    std::vector<HeaderField> headers;
    std::size_t wire_size = 0;
};

/// nullopt when the peer closed before sending anything.
std::optional<RequestHead> read_request_head(BufferedReader& in);
ResponseHead read_response_head(BufferedReader& in);

std::string serialize(const RequestHead& head);
std::string serialize(const ResponseHead& head);

std::optional<std::string_view> header_value(const std::vector<HeaderField>& headers, std::string_view name);
void remove_header(std::vector<HeaderField>& headers, std::string_view name);
/// Comma-separated token search, case-insensitive (Connection: keep-alive, Upgrade).
bool header_has_token(const std::vector<HeaderField>& headers, std::string_view name, std::string_view token);

/// Drops hop-by-hop headers, including any named by Connection.
void strip_hop_by_hop(std::vector<HeaderField>& headers);

enum class BodyFraming { None, ContentLength, Chunked, UntilClose };

struct Framing {
    BodyFraming kind = BodyFraming::None;
    std::uint64_t length = 0;
};

Framing request_framing(const RequestHead& head);
Framing response_framing(std::string_view request_method, const ResponseHead& head);

/// Progress of a relay, readable after a failure.
struct RelayProgress {
    /// Raw bytes forwarded, chunk framing included.
    std::uint64_t wire_bytes = 0;
    /// Decoded payload, when capture was requested.
    std::string captured;
    bool complete = false;
};

/// Copies one message body from `in` to `out` per `framing`. Throws IoError on
/// a transport failure or premature end, leaving `progress` at the point reached.
/// `out` may be null to consume without forwarding.
void relay_body(BufferedReader& in, Stream* out, const Framing& framing, bool capture, RelayProgress& progress,
                std::size_t capture_limit = 16 * 1024 * 1024);

std::string make_simple_response(int status, std::string_view reason, std::string_view body);

} // namespace trafficledger::net
