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

#include "trafficledger/proxy/capture_proxy.hpp"

#include "trafficledger/classifier.hpp"
#include "trafficledger/proxy/http_message.hpp"
#include "trafficledger/proxy/socket.hpp"

#include <openssl/err.h>
#include <openssl/ssl.h>
#include <openssl/x509v3.h>

#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>

#include <csignal>
#include <cstring>
#include <cstdio>
#include <list>
#include <mutex>
#include <set>
#include <thread>

namespace trafficledger::net {

namespace {

using steady = std::chrono::steady_clock;

struct SslCtxDeleter {
    void operator()(SSL_CTX* c) const { SSL_CTX_free(c); }
};
using SslCtxPtr = std::unique_ptr<SSL_CTX, SslCtxDeleter>;

constexpr std::string_view kConnectEstablished = "HTTP/1.1 200 Connection Established\r\n\r\n";

int alpn_select(SSL*, const unsigned char** out, unsigned char* outlen, const unsigned char* in, unsigned inlen,
                void*) {
    // only HTTP/1.1 is spoken on the client side
    for (unsigned i = 0; i < inlen;) {
        const unsigned len = in[i];
        if (i + 1 + len > inlen) break;
        if (len == 8 && std::memcmp(in + i + 1, "http/1.1", 8) == 0) {
            *out = in + i + 1;
            *outlen = 8;
            return SSL_TLSEXT_ERR_OK;
        }
        i += 1 + len;
    }
    return SSL_TLSEXT_ERR_NOACK;
}

bool is_ip_literal(const std::string& host) {
    unsigned char buf[16];
    return inet_pton(AF_INET, host.c_str(), buf) == 1 || inet_pton(AF_INET6, host.c_str(), buf) == 1;
}

bool peer_closed_or_dirty(int fd) {
    pollfd p{fd, POLLIN, 0};
    return ::poll(&p, 1, 0) != 0;
}

/// One upstream connection, kept across keep-alive requests to the same origin.
struct Upstream {
    std::string host;
    std::uint16_t port = 0;
    bool tls = false;
    std::unique_ptr<SocketStream> sock;
    std::unique_ptr<TlsStream> tls_stream;
    std::unique_ptr<BufferedReader> in;

    Stream& stream() { return tls_stream ? static_cast<Stream&>(*tls_stream) : *sock; }
    bool matches(const std::string& h, std::uint16_t p, bool t) const {
        return sock && host == h && port == p && tls == t;
    }
    void reset() {
        in.reset();
        tls_stream.reset();
        sock.reset();
    }
};

struct Target {
    std::string scheme;
    std::string host;
    std::uint16_t port = 80;
};

} // namespace

struct CaptureSession::Impl {
    ProxyConfig cfg;
    store::FlowStore* store = nullptr;
    std::shared_ptr<CertificateAuthority> ca;
    SslCtxPtr upstream_ctx;
    SslCtxPtr intercept_ctx;
    UniqueFd listener;
    HostPort bound;
    std::string session_id = random_id();
    SessionClock clock;
    Timestamp started = clock.now();

    std::atomic<bool> stopping{false};
    std::thread acceptor;

    mutable std::mutex mu;
    std::string active_run;
    std::uint64_t seq = 0;
    std::vector<HttpFlow> recorded;
    std::optional<steady::time_point> last;
    std::size_t in_flight = 0;
    CaptureSummary summary;
    bool stopped = false;
    std::set<int> open_fds;

    struct Worker {
        std::thread thread;
        std::shared_ptr<std::atomic<bool>> done;
    };
    std::mutex workers_mu;
    std::list<Worker> workers;

    // -- bookkeeping ---------------------------------------------------------

    void track_fd(int fd) {
        std::lock_guard lk(mu);
        open_fds.insert(fd);
        if (stopped || stopping) ::shutdown(fd, SHUT_RDWR);
    }
    void untrack_fd(int fd) {
        std::lock_guard lk(mu);
        open_fds.erase(fd);
    }

    HttpFlow begin_flow(bool counts_in_flight) {
        HttpFlow f;
        std::lock_guard lk(mu);
        f.run_id = active_run;
        f.started_at = clock.now();
        last = steady::now();
        if (counts_in_flight) ++in_flight;
        return f;
    }

    void abandon_flow(bool counts_in_flight) {
        std::lock_guard lk(mu);
        if (counts_in_flight && in_flight > 0) --in_flight;
        last = steady::now();
    }

    void finish_flow(HttpFlow f, bool truncated, bool counts_in_flight) {
        f.completed_at = clock.now();
        if (truncated) f.size_is_estimated = true;
        std::lock_guard lk(mu);
        if (counts_in_flight && in_flight > 0) --in_flight;
        last = steady::now();
        char id[32];
        std::snprintf(id, sizeof id, "-%06llu", static_cast<unsigned long long>(++seq));
        f.flow_id = session_id + id;
        ++summary.flow_count;
        summary.total_bytes += f.total_bytes();
        if (truncated) ++summary.truncated_flows;
        if (store) {
            try {
                store->append_flow(f);
            } catch (const std::exception& e) {
                ++summary.store_errors;
                std::fprintf(stderr, "trafficledger: could not stage flow %s: %s\n", f.flow_id.c_str(), e.what());
            }
        }
        recorded.push_back(std::move(f));
    }

    bool should_intercept(const std::string& host) const {
        if (cfg.intercept_hosts.empty()) return true;
        for (const auto& g : cfg.intercept_hosts)
            if (classify::glob_match(g, host)) return true;
        return false;
    }

    // -- upstream ------------------------------------------------------------

    void connect_upstream(Upstream& up, const Target& t) {
        if (up.matches(t.host, t.port, t.scheme == "https") && !peer_closed_or_dirty(up.sock->fd())) return;
        drop_upstream(up);
        UniqueFd fd = connect_tcp(t.host, t.port, cfg.upstream_timeout);
        up.host = t.host;
        up.port = t.port;
        up.tls = t.scheme == "https";
        up.sock = std::make_unique<SocketStream>(std::move(fd));
        track_fd(up.sock->fd());
        try {
            if (up.tls) {
                SSL* ssl = SSL_new(upstream_ctx.get());
                if (!ssl) throw IoError("SSL_new: " + openssl_error());
                up.tls_stream = std::make_unique<TlsStream>(ssl, *up.sock);
                SSL_set_fd(ssl, up.sock->fd());
                if (!is_ip_literal(t.host)) SSL_set_tlsext_host_name(ssl, t.host.c_str());
                if (cfg.verify_upstream) {
                    if (is_ip_literal(t.host))
                        X509_VERIFY_PARAM_set1_ip_asc(SSL_get0_param(ssl), t.host.c_str());
                    else
                        SSL_set1_host(ssl, t.host.c_str());
                }
                if (SSL_connect(ssl) != 1) {
                    const long vr = SSL_get_verify_result(ssl);
                    std::string why = vr != X509_V_OK ? X509_verify_cert_error_string(vr) : openssl_error();
                    throw IoError("TLS handshake with " + t.host + " failed: " + why);
                }
            }
        } catch (...) {
            drop_upstream(up);
            throw;
        }
        up.in = std::make_unique<BufferedReader>(up.stream());
    }

    void drop_upstream(Upstream& up) {
        if (up.sock) untrack_fd(up.sock->fd());
        up.reset();
    }

    // -- exchanges -----------------------------------------------------------

    /// Forwards one request and its response. Returns whether the client
    /// connection may carry another request.
    bool exchange(BufferedReader& cin, Stream& client, const RequestHead& req, const Target& t, Upstream& up) {
        Url url;
        if (req.target.starts_with("/") || req.target == "*") {
            url = Url::parse(t.scheme + "://" + t.host + req.target);
        } else {
            url = Url::parse(req.target);
        }
        url.scheme = t.scheme;
        url.host = t.host;
        const std::uint16_t default_port = t.scheme == "https" ? 443 : 80;
        url.port = t.port == default_port ? std::nullopt : std::optional<std::uint16_t>(t.port);

        RequestHead fwd = req;
        fwd.version = "HTTP/1.1";
        fwd.target = url.path + (url.query.empty() ? "" : "?" + url.query);
        strip_hop_by_hop(fwd.headers);
        const bool expect_continue = header_has_token(fwd.headers, "Expect", "100-continue");
        if (expect_continue) remove_header(fwd.headers, "Expect");
        if (!header_value(fwd.headers, "Host")) {
            fwd.headers.insert(fwd.headers.begin(),
                               {"Host", url.host + (url.port ? ":" + std::to_string(*url.port) : "")});
        }
        const bool http10 = req.version == "HTTP/1.0";
        const bool client_close = header_has_token(req.headers, "Connection", "close") ||
                                  (http10 && !header_has_token(req.headers, "Connection", "keep-alive"));
        const Framing req_framing = request_framing(req);
        const std::string fwd_head = serialize(fwd);

        HttpFlow f = begin_flow(true);
        f.url = url;
        f.method = req.method;
        f.request_header_bytes = fwd_head.size();

        try {
            connect_upstream(up, t);
        } catch (const std::exception& e) {
            // nothing crossed the wire; no flow is recorded
            abandon_flow(true);
            if (!stopping) {
                try {
                    client.write_all(make_simple_response(502, "Bad Gateway", std::string("upstream: ") + e.what()));
                } catch (const IoError&) {
                }
            }
            return false;
        }

        RelayProgress reqp, respp;
        ResponseHead resp;
        bool response_started = false;
        try {
            up.stream().write_all(fwd_head);
            if (expect_continue) client.write_all("HTTP/1.1 100 Continue\r\n\r\n");
            relay_body(cin, &up.stream(), req_framing, cfg.record_bodies, reqp, cfg.max_recorded_body);
            f.request_body_bytes = reqp.wire_bytes;

            for (;;) {
                resp = read_response_head(*up.in);
                std::string out = serialize(resp);
                response_started = true;
                client.write_all(out);
                f.response_header_bytes += out.size();
                if (resp.status / 100 != 1 || resp.status == 101) break;
            }
            f.status = resp.status;
            if (auto ct = header_value(resp.headers, "Content-Type")) f.content_type = std::string(*ct);
            const Framing resp_framing = response_framing(req.method, resp);
            relay_body(*up.in, &client, resp_framing, false, respp);
            f.response_body_bytes = respp.wire_bytes;
            fill_cookies(f, req, resp, reqp);

            finish_flow(std::move(f), false, true);
            const bool upstream_close = header_has_token(resp.headers, "Connection", "close") ||
                                        resp.version == "HTTP/1.0" || resp_framing.kind == BodyFraming::UntilClose;
            if (upstream_close) drop_upstream(up);
            return !client_close && resp_framing.kind != BodyFraming::UntilClose && resp.status != 101;
        } catch (const std::exception&) {
            f.request_body_bytes = reqp.wire_bytes;
            f.response_body_bytes = respp.wire_bytes;
            if (response_started) f.status = resp.status;
            fill_cookies(f, req, resp, reqp);
            finish_flow(std::move(f), true, true);
            drop_upstream(up);
            if (!response_started && !stopping) {
                try {
                    client.write_all(make_simple_response(502, "Bad Gateway", "upstream connection failed"));
                } catch (const IoError&) {
                }
            }
            return false;
        }
    }

    void fill_cookies(HttpFlow& f, const RequestHead& req, const ResponseHead& resp, const RelayProgress& reqp) {
        auto [rq, rs] = cookies_from_headers(req.headers, resp.headers, cfg.cookies);
        f.request_cookies = std::move(rq);
        f.set_cookies = std::move(rs);
        if (cfg.record_bodies && reqp.wire_bytes > 0) f.request_body = reqp.captured;
    }

    void serve_requests(BufferedReader& in, Stream& client, const Target& t) {
        Upstream up;
        for (;;) {
            std::optional<RequestHead> head;
            try {
                head = read_request_head(in);
            } catch (const std::exception&) {
                break;
            }
            if (!head) break;
            if (!exchange(in, client, *head, t, up)) break;
        }
        drop_upstream(up);
    }

    void tunnel(BufferedReader& in, Stream& client, const RequestHead& req, const HostPort& hp) {
        HttpFlow f = begin_flow(false);
        f.method = "CONNECT";
        f.url.scheme = "https";
        f.url.host = hp.host;
        if (hp.port != 443) f.url.port = hp.port;
        f.request_header_bytes = req.wire_size;

        std::unique_ptr<SocketStream> upstream;
        try {
            upstream = std::make_unique<SocketStream>(connect_tcp(hp.host, hp.port, cfg.upstream_timeout));
        } catch (const std::exception& e) {
            abandon_flow(false);
            try {
                client.write_all(make_simple_response(502, "Bad Gateway", std::string("upstream: ") + e.what()));
            } catch (const IoError&) {
            }
            return;
        }
        track_fd(upstream->fd());
        // the tunnel is idle-waiting by nature; the read timeout would cut it
        set_io_timeout(upstream->fd(), std::chrono::milliseconds(0));

        bool clean = true;
        try {
            client.write_all(kConnectEstablished);
            f.status = 200;
            f.response_header_bytes = kConnectEstablished.size();
            if (auto pending = in.buffered(); !pending.empty()) {
                upstream->write_all(pending);
                f.request_body_bytes += pending.size();
                in.consume_buffered();
            }
            pollfd fds[2] = {{client.fd(), POLLIN, 0}, {upstream->fd(), POLLIN, 0}};
            char buf[32 * 1024];
            for (bool open = true; open;) {
                if (::poll(fds, 2, -1) < 0) {
                    if (errno == EINTR) continue;
                    break;
                }
                for (int i = 0; i < 2 && open; ++i) {
                    if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
                    Stream& from = i == 0 ? client : static_cast<Stream&>(*upstream);
                    Stream& to = i == 0 ? static_cast<Stream&>(*upstream) : client;
                    const std::size_t n = from.read_some(buf, sizeof buf);
                    if (n == 0) {
                        open = false;
                        break;
                    }
                    to.write_all({buf, n});
                    (i == 0 ? f.request_body_bytes : f.response_body_bytes) += n;
                }
            }
        } catch (const IoError&) {
            clean = false;
        }
        untrack_fd(upstream->fd());
        finish_flow(std::move(f), !clean || stopping, false);
    }

    void intercept(BufferedReader& in, Stream& client, const HostPort& hp) {
        client.write_all(kConnectEstablished);
        if (!in.buffered().empty()) return; // TLS bytes before our reply; cannot splice into OpenSSL

        std::shared_ptr<const LeafCertificate> leaf;
        try {
            leaf = ca->mint_leaf_certificate(hp.host);
        } catch (const CertError& e) {
            std::fprintf(stderr, "trafficledger: %s\n", e.what());
            return;
        }
        SSL* ssl = SSL_new(intercept_ctx.get());
        if (!ssl) return;
        TlsStream tls(ssl, client);
        SSL_use_certificate(ssl, leaf->cert.get());
        SSL_use_PrivateKey(ssl, ca->leaf_key());
        SSL_set_fd(ssl, client.fd());
        if (SSL_accept(ssl) != 1) {
            // usually the browser does not trust the local root yet
            ERR_clear_error();
            return;
        }
        BufferedReader tin(tls);
        serve_requests(tin, tls, Target{"https", hp.host, hp.port});
    }

    void handle_client(UniqueFd fd) {
        const int raw = fd.get();
        track_fd(raw);
        {
            SocketStream client(std::move(fd));
            BufferedReader in(client);
            try {
                std::optional<RequestHead> head = read_request_head(in);
                if (head && iequals(head->method, "CONNECT")) {
                    HostPort hp = parse_host_port(head->target, 443);
                    for (auto& c : hp.host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                    if (should_intercept(hp.host)) {
                        intercept(in, client, hp);
                    } else {
                        tunnel(in, client, *head, hp);
                    }
                } else if (head) {
                    serve_plain(in, client, std::move(*head));
                }
            } catch (const std::exception&) {
                // malformed request or client gone; drop the connection
            }
            untrack_fd(raw);
        }
    }

    void serve_plain(BufferedReader& in, Stream& client, RequestHead first) {
        Upstream up;
        std::optional<RequestHead> head = std::move(first);
        while (head) {
            Url u;
            try {
                u = Url::parse(head->target);
            } catch (const std::invalid_argument&) {
                client.write_all(make_simple_response(400, "Bad Request", "absolute URL required"));
                break;
            }
            if (u.scheme != "http") {
                client.write_all(make_simple_response(400, "Bad Request", "unsupported scheme"));
                break;
            }
            Target t{"http", u.host, u.port.value_or(80)};
            if (!exchange(in, client, *head, t, up)) break;
            head = read_request_head(in);
        }
        drop_upstream(up);
    }

    void accept_loop() {
        while (!stopping) {
            pollfd p{listener.get(), POLLIN, 0};
            const int rc = ::poll(&p, 1, 100);
            if (rc <= 0 || stopping) continue;
            const int c = ::accept4(listener.get(), nullptr, nullptr, SOCK_CLOEXEC);
            if (c < 0) continue;
            UniqueFd client(c);
            set_no_delay(client.get());
            std::lock_guard lk(workers_mu);
            workers.remove_if([](Worker& w) {
                if (!*w.done) return false;
                w.thread.join();
                return true;
            });
            auto done = std::make_shared<std::atomic<bool>>(false);
            workers.push_back({std::thread([this, done, fd = std::move(client)]() mutable {
                                   handle_client(std::move(fd));
                                   *done = true;
                               }),
                               done});
        }
    }
};

CaptureSession::CaptureSession(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

CaptureSession::~CaptureSession() { stop(); }

std::uint16_t CaptureSession::port() const { return impl_->bound.port; }

std::string CaptureSession::endpoint() const {
    const auto& h = impl_->bound.host;
    const bool v6 = h.find(':') != std::string::npos;
    return (v6 ? "[" + h + "]" : h) + ":" + std::to_string(impl_->bound.port);
}

const std::string& CaptureSession::session_id() const { return impl_->session_id; }
Timestamp CaptureSession::started_at() const { return impl_->started; }
const CertificateAuthority& CaptureSession::ca() const { return *impl_->ca; }
store::FlowStore* CaptureSession::store() const { return impl_->store; }

void CaptureSession::set_run_id(std::string run_id) {
    std::lock_guard lk(impl_->mu);
    impl_->active_run = std::move(run_id);
}

std::string CaptureSession::run_id() const {
    std::lock_guard lk(impl_->mu);
    return impl_->active_run;
}

std::size_t CaptureSession::flow_count() const {
    std::lock_guard lk(impl_->mu);
    return impl_->recorded.size();
}

std::vector<HttpFlow> CaptureSession::flows() const {
    std::lock_guard lk(impl_->mu);
    return impl_->recorded;
}

std::vector<HttpFlow> CaptureSession::flows_for_run(const std::string& run_id) const {
    std::lock_guard lk(impl_->mu);
    std::vector<HttpFlow> out;
    for (const auto& f : impl_->recorded)
        if (f.run_id == run_id) out.push_back(f);
    return out;
}

std::optional<journey::Pacer::clock::time_point> CaptureSession::last_activity() const {
    std::lock_guard lk(impl_->mu);
    return impl_->last;
}

std::size_t CaptureSession::in_flight() const {
    std::lock_guard lk(impl_->mu);
    return impl_->in_flight;
}

CaptureSummary CaptureSession::stop() {
    Impl& m = *impl_;
    {
        std::lock_guard lk(m.mu);
        if (m.stopped) return m.summary;
    }
    m.stopping = true;
    if (m.acceptor.joinable()) m.acceptor.join();
    m.listener.reset();
    {
        std::lock_guard lk(m.mu);
        for (int fd : m.open_fds) ::shutdown(fd, SHUT_RDWR);
    }
    std::list<Impl::Worker> workers;
    {
        std::lock_guard lk(m.workers_mu);
        workers.swap(m.workers);
    }
    for (auto& w : workers) w.thread.join();
    std::lock_guard lk(m.mu);
    m.stopped = true;
    return m.summary;
}

std::unique_ptr<CaptureSession> start_proxy(ProxyConfig config, store::FlowStore* store,
                                            std::shared_ptr<CertificateAuthority> ca) {
    std::signal(SIGPIPE, SIG_IGN);
    auto impl = std::make_unique<CaptureSession::Impl>();
    impl->store = store;
    impl->active_run = impl->session_id;

    if (!ca) {
        if (config.ca_dir.empty()) throw ProxyStartError("no CA directory configured");
        try {
            ca = CertificateAuthority::load_or_create(config.ca_dir);
        } catch (const CaError& e) {
            throw ProxyStartError(std::string("root CA unavailable: ") + e.what());
        }
    }
    impl->ca = std::move(ca);

    impl->upstream_ctx.reset(SSL_CTX_new(TLS_client_method()));
    impl->intercept_ctx.reset(SSL_CTX_new(TLS_server_method()));
    if (!impl->upstream_ctx || !impl->intercept_ctx) throw ProxyStartError("TLS setup failed: " + openssl_error());
    SSL_CTX_set_min_proto_version(impl->upstream_ctx.get(), TLS1_2_VERSION);
    SSL_CTX_set_min_proto_version(impl->intercept_ctx.get(), TLS1_2_VERSION);
    SSL_CTX_set_default_verify_paths(impl->upstream_ctx.get());
    if (config.upstream_ca_file) {
        if (SSL_CTX_load_verify_locations(impl->upstream_ctx.get(), config.upstream_ca_file->c_str(), nullptr) != 1)
            throw ProxyStartError("cannot load upstream CA file " + config.upstream_ca_file->string() + ": " +
                                  openssl_error());
    }
    SSL_CTX_set_verify(impl->upstream_ctx.get(), config.verify_upstream ? SSL_VERIFY_PEER : SSL_VERIFY_NONE,
                       nullptr);
    static const unsigned char alpn[] = "\x08http/1.1";
    SSL_CTX_set_alpn_protos(impl->upstream_ctx.get(), alpn, sizeof alpn - 1);
    SSL_CTX_set_alpn_select_cb(impl->intercept_ctx.get(), alpn_select, nullptr);

    try {
        impl->bound = parse_host_port(config.listen_address, 8080);
        impl->listener = listen_tcp(impl->bound);
        impl->bound.port = local_port(impl->listener.get());
    } catch (const std::exception& e) {
        throw ProxyStartError("cannot listen on " + config.listen_address + ": " + e.what());
    }
    impl->cfg = std::move(config);

    CaptureSession::Impl* raw = impl.get();
    raw->acceptor = std::thread([raw] { raw->accept_loop(); });
    return std::unique_ptr<CaptureSession>(new CaptureSession(std::move(impl)));
}

CaptureSummary stop_proxy(CaptureSession& session) { return session.stop(); }

} // namespace trafficledger::net
