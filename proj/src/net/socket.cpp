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

#include "trafficledger/proxy/socket.hpp"

#include <openssl/err.h>
#include <openssl/ssl.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace trafficledger::net {

void UniqueFd::reset(int fd) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
}

std::size_t SocketStream::read_some(char* buf, std::size_t len) {
    for (;;) {
        const ssize_t n = ::recv(fd_.get(), buf, len, 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        throw IoError(std::string("recv: ") + std::strerror(errno));
    }
}

void SocketStream::write_all(std::string_view data) {
    while (!data.empty()) {
        const ssize_t n = ::send(fd_.get(), data.data(), data.size(), MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw IoError(std::string("send: ") + std::strerror(errno));
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

TlsStream::~TlsStream() {
    if (ssl_) {
        SSL_shutdown(ssl_);
        SSL_free(ssl_);
    }
}

std::size_t TlsStream::read_some(char* buf, std::size_t len) {
    const int want = static_cast<int>(std::min<std::size_t>(len, 1 << 20));
    const int n = SSL_read(ssl_, buf, want);
    if (n > 0) return static_cast<std::size_t>(n);
    const int err = SSL_get_error(ssl_, n);
    if (err == SSL_ERROR_ZERO_RETURN) return 0;
    // Peers that close without close_notify are treated as end of stream.
    if (err == SSL_ERROR_SYSCALL && ERR_peek_error() == 0) return 0;
    throw IoError("TLS read: " + openssl_error());
}

void TlsStream::write_all(std::string_view data) {
    while (!data.empty()) {
        const int chunk = static_cast<int>(std::min<std::size_t>(data.size(), 1 << 20));
        const int n = SSL_write(ssl_, data.data(), chunk);
        if (n <= 0) throw IoError("TLS write: " + openssl_error());
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

bool BufferedReader::fill() {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    char tmp[16 * 1024];
    const std::size_t n = stream_.read_some(tmp, sizeof tmp);
    if (n == 0) return false;
    buf_.append(tmp, n);
    return true;
}

bool BufferedReader::read_line(std::string& line, std::size_t max_len) {
    line.clear();
    for (;;) {
        const auto nl = buf_.find('\n', pos_);
        if (nl != std::string::npos) {
            line.assign(buf_, pos_, nl - pos_);
            pos_ = nl + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return true;
        }
        if (buf_.size() - pos_ > max_len) throw IoError("line exceeds limit");
        if (!fill()) {
            if (buf_.size() == pos_) return false;
            throw IoError("stream ended mid-line");
        }
    }
}

std::size_t BufferedReader::read_some(char* buf, std::size_t len) {
    if (pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
        return stream_.read_some(buf, len);
    }
    const std::size_t n = std::min(len, buf_.size() - pos_);
    std::memcpy(buf, buf_.data() + pos_, n);
    pos_ += n;
    return n;
}

HostPort parse_host_port(std::string_view text, std::uint16_t default_port) {
    HostPort hp;
    std::string_view port;
    if (text.starts_with('[')) {
        const auto close = text.find(']');
        if (close == std::string_view::npos) throw std::invalid_argument("bad IPv6 address");
        hp.host = std::string(text.substr(1, close - 1));
        if (close + 1 < text.size()) {
            if (text[close + 1] != ':') throw std::invalid_argument("bad address '" + std::string(text) + "'");
            port = text.substr(close + 2);
        }
    } else if (const auto colon = text.rfind(':'); colon != std::string_view::npos) {
        hp.host = std::string(text.substr(0, colon));
        port = text.substr(colon + 1);
    } else {
        hp.host = std::string(text);
    }
    hp.port = default_port;
    if (!port.empty()) {
        unsigned v = 0;
        auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), v);
        if (ec != std::errc{} || p != port.data() + port.size() || v > 65535)
            throw std::invalid_argument("bad port in '" + std::string(text) + "'");
        hp.port = static_cast<std::uint16_t>(v);
    }
    if (hp.host.empty()) throw std::invalid_argument("missing host in '" + std::string(text) + "'");
    return hp;
}

void set_io_timeout(int fd, std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void set_no_delay(int fd) {
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

UniqueFd connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(port);
    if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw IoError("resolve " + host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!fd) continue;
        const int flags = ::fcntl(fd.get(), F_GETFL);
        ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            pollfd p{fd.get(), POLLOUT, 0};
            rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
            if (rc == 1) {
                int err = 0;
                socklen_t len = sizeof err;
                ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                errno = err;
            } else {
                if (rc == 0) errno = ETIMEDOUT;
                rc = -1;
            }
        }
        if (rc == 0) {
            ::fcntl(fd.get(), F_SETFL, flags);
            set_no_delay(fd.get());
            set_io_timeout(fd.get(), timeout);
            return fd;
        }
        last_error = std::strerror(errno);
    }
    throw IoError("connect " + host + ":" + service + ": " + last_error);
}

UniqueFd listen_tcp(const HostPort& address, int backlog) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE | AI_NUMERICSERV;
    addrinfo* res = nullptr;
    const std::string service = std::to_string(address.port);
    if (int rc = ::getaddrinfo(address.host.c_str(), service.c_str(), &hints, &res); rc != 0)
        throw IoError("resolve " + address.host + ": " + ::gai_strerror(rc));
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

    std::string last_error = "no addresses";
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
        UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!fd) continue;
        int one = 1;
        ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd.get(), backlog) == 0) return fd;
        last_error = std::strerror(errno);
    }
    throw IoError("listen on " + address.host + ":" + service + ": " + last_error);
}

std::uint16_t local_port(int fd) {
    sockaddr_storage ss{};
    socklen_t len = sizeof ss;
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return 0;
    if (ss.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
    if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
    return 0;
}

std::string openssl_error() {
    const unsigned long code = ERR_get_error();
    ERR_clear_error();
    if (code == 0) return errno != 0 ? std::strerror(errno) : "unknown error";
    char buf[256];
    ERR_error_string_n(code, buf, sizeof buf);
    return buf;
}

} // namespace trafficledger::net
