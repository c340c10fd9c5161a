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

#include <chrono>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

using SSL = struct ssl_st;
using SSL_CTX = struct ssl_ctx_st;

namespace trafficledger::net {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Owning file descriptor.
class UniqueFd {
public:
    UniqueFd() = default;
    explicit UniqueFd(int fd) : fd_(fd) {}
    ~UniqueFd() { reset(); }
    UniqueFd(UniqueFd&& o) noexcept : fd_(o.release()) {}
    UniqueFd& operator=(UniqueFd&& o) noexcept {
        if (this != &o) reset(o.release());
        return *this;
    }
    UniqueFd(const UniqueFd&) = delete;
    UniqueFd& operator=(const UniqueFd&) = delete;

    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }
    int release() {
        int f = fd_;
        fd_ = -1;
        return f;
    }
    void reset(int fd = -1);

private:
    int fd_ = -1;
};

/// Byte stream over TCP, optionally TLS.
class Stream {
public:
    virtual ~Stream() = default;
    /// Returns 0 at end of stream; throws IoError on failure.
    virtual std::size_t read_some(char* buf, std::size_t len) = 0;
    virtual void write_all(std::string_view data) = 0;
    virtual int fd() const = 0;
};

class SocketStream final : public Stream {
public:
    explicit SocketStream(UniqueFd fd) : fd_(std::move(fd)) {}
    std::size_t read_some(char* buf, std::size_t len) override;
    void write_all(std::string_view data) override;
    int fd() const override { return fd_.get(); }

private:
    UniqueFd fd_;
};

/// TLS over a borrowed socket stream. The SSL object is owned.
class TlsStream final : public Stream {
public:
    TlsStream(SSL* ssl, Stream& transport) : ssl_(ssl), transport_(transport) {}
    ~TlsStream() override;
    TlsStream(const TlsStream&) = delete;
    TlsStream& operator=(const TlsStream&) = delete;

    std::size_t read_some(char* buf, std::size_t len) override;
    void write_all(std::string_view data) override;
    int fd() const override { return transport_.fd(); }
    SSL* ssl() const { return ssl_; }

private:
    SSL* ssl_;
    Stream& transport_;
};

/// Reads lines and exact byte counts from a stream through a buffer.
class BufferedReader {
public:
    explicit BufferedReader(Stream& s) : stream_(s) {}

    /// Line without its CRLF/LF terminator. Returns false at a clean end of
    /// stream before any byte. Throws IoError past `max_len` or on a torn line.
    bool read_line(std::string& line, std::size_t max_len = 64 * 1024);
    /// Up to `len` bytes; 0 only at end of stream.
    std::size_t read_some(char* buf, std::size_t len);
    /// Bytes already buffered but not yet consumed.
    std::string_view buffered() const { return std::string_view(buf_).substr(pos_); }
    void consume_buffered() { buf_.clear(), pos_ = 0; }
    Stream& stream() { return stream_; }

private:
    bool fill();

    Stream& stream_;
    std::string buf_;
    std::size_t pos_ = 0;
};

struct HostPort {
    std::string host;
    std::uint16_t port = 0;
};

/// Parses `host:port`, `[v6]:port`, or `host` with a default port.
HostPort parse_host_port(std::string_view text, std::uint16_t default_port);

/// Resolves and connects, trying each address. Throws IoError.
UniqueFd connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

/// Binds and listens. Port 0 picks an ephemeral port; query it with local_port.
UniqueFd listen_tcp(const HostPort& address, int backlog = 128);
std::uint16_t local_port(int fd);

void set_io_timeout(int fd, std::chrono::milliseconds timeout);

/// Disables Nagle so small heads are not held back behind delayed ACKs.
void set_no_delay(int fd);

/// Last OpenSSL error queue entry as text (clears the queue).
std::string openssl_error();

} // namespace trafficledger::net
