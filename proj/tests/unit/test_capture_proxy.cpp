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

#include "support/fixtures.hpp"
#include "support/origin_server.hpp"

#include "trafficledger/flow_store.hpp"
#include "trafficledger/proxy/capture_proxy.hpp"
#include "trafficledger/proxy/http_message.hpp"
#include "trafficledger/proxy/socket.hpp"

#include <httplib.h>

#include <doctest.h>

#include <numeric>
#include <thread>

using namespace trafficledger;
using namespace trafficledger::net;

namespace {

struct ProxyFixture {
    tltest::TempDir dir;
    std::shared_ptr<CertificateAuthority> ca = CertificateAuthority::create_in_memory("proxy test root");
    std::filesystem::path ca_file = dir / "proxy-ca.pem";

    ProxyFixture() { tltest::write_text(ca_file, ca->root_pem()); }

    ProxyConfig config(const tltest::OriginServer* tls_origin = nullptr) const {
        ProxyConfig c;
        c.listen_address = "127.0.0.1:0";
        c.upstream_timeout = std::chrono::milliseconds(3000);
        c.record_bodies = true;
        if (tls_origin) c.upstream_ca_file = tls_origin->ca_file();
        return c;
    }
};

httplib::Client plain_client(const tltest::OriginServer& origin, const CaptureSession& proxy) {
    httplib::Client c(origin.base_url());
    c.set_proxy("127.0.0.1", proxy.port());
    c.set_read_timeout(10);
    return c;
}

std::uint64_t sum_response_bodies(const std::vector<HttpFlow>& flows) {
    return std::accumulate(flows.begin(), flows.end(), std::uint64_t{0},
                           [](std::uint64_t a, const HttpFlow& f) { return a + f.response_body_bytes; });
}

/// Flows are recorded after the client has its response; give the worker a moment.
void wait_for_flows(const CaptureSession& s, std::size_t n) {
    for (int i = 0; i < 200 && s.flow_count() < n; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
}

} // namespace

TEST_CASE("plain HTTP flows match served bytes") {
    ProxyFixture fx;
    tltest::OriginServer origin(false);
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);
    auto client = plain_client(origin, *proxy);

    const std::size_t sizes[] = {0, 1, 1024, 65'537, 1'000'000};
    for (auto n : sizes) {
        auto res = client.Get("/payload/" + std::to_string(n) + "?type=image/jpeg");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(res->body.size() == n);
    }
    wait_for_flows(*proxy, std::size(sizes));
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == std::size(sizes));
    CHECK(sum_response_bodies(flows) == origin.served_body_bytes());
    for (std::size_t i = 0; i < flows.size(); ++i) {
        CHECK(flows[i].response_body_bytes == sizes[i]);
        CHECK(flows[i].status == 200);
        CHECK(flows[i].content_type == "image/jpeg");
        CHECK(flows[i].url.host == "127.0.0.1");
        CHECK(flows[i].url.port == origin.port());
        CHECK(flows[i].url.path == "/payload/" + std::to_string(sizes[i]));
        CHECK_FALSE(flows[i].size_is_estimated);
        CHECK(flows[i].request_header_bytes > 0);
        CHECK(flows[i].response_header_bytes > 0);
        CHECK(flows[i].run_id == proxy->session_id());
    }
    CHECK(proxy->in_flight() == 0);
    CHECK(origin.request_count() == std::size(sizes));
    const auto summary = proxy->stop();
    CHECK(summary.flow_count == std::size(sizes));
    CHECK(summary.truncated_flows == 0);
}

TEST_CASE("intercepted HTTPS flows match served bytes") {
    ProxyFixture fx;
    tltest::OriginServer origin(true);
    auto proxy = start_proxy(fx.config(&origin), nullptr, fx.ca);

    httplib::Client client(origin.base_url());
    client.set_proxy("127.0.0.1", proxy->port());
    client.set_ca_cert_path(fx.ca_file.string());
    client.enable_server_certificate_verification(true);
    client.set_read_timeout(10);

    const std::size_t sizes[] = {10, 4096, 300'000};
    for (auto n : sizes) {
        auto res = client.Get("/payload/" + std::to_string(n));
        REQUIRE_MESSAGE(res, httplib::to_string(res.error()));
        CHECK(res->body.size() == n);
    }
    auto echo = client.Post("/echo", R"({"action":"impression"})", "application/json");
    REQUIRE(echo);
    wait_for_flows(*proxy, std::size(sizes) + 1);
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == std::size(sizes) + 1);
    CHECK(sum_response_bodies(flows) == origin.served_body_bytes());
    for (std::size_t i = 0; i < std::size(sizes); ++i) {
        CHECK(flows[i].url.scheme == "https");
        CHECK(flows[i].response_body_bytes == sizes[i]);
    }
    const auto& post = flows.back();
    CHECK(post.method == "POST");
    CHECK(post.request_body_bytes == 23);
    CHECK(post.request_body == R"({"action":"impression"})");
    CHECK(origin.request_count() == flows.size());
}

TEST_CASE("the proxy refuses to impersonate an untrusted upstream") {
    ProxyFixture fx;
    tltest::OriginServer origin(true);
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca); // origin root not trusted
    httplib::Client client(origin.base_url());
    client.set_proxy("127.0.0.1", proxy->port());
    client.set_ca_cert_path(fx.ca_file.string());
    auto res = client.Get("/payload/10");
    REQUIRE(res);
    CHECK(res->status == 502);
    CHECK(origin.request_count() == 0);
    proxy->stop();
    CHECK(proxy->flow_count() == 0);
}

TEST_CASE("no phantom flows when the upstream refuses") {
    ProxyFixture fx;
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);
    const auto port = tltest::unused_port();
    httplib::Client client("http://127.0.0.1:" + std::to_string(port));
    client.set_proxy("127.0.0.1", proxy->port());
    for (int i = 0; i < 3; ++i) {
        auto res = client.Get("/x");
        REQUIRE(res);
        CHECK(res->status == 502);
    }
    httplib::Client tls_client("https://127.0.0.1:" + std::to_string(port));
    tls_client.set_proxy("127.0.0.1", proxy->port());
    tls_client.enable_server_certificate_verification(false);
    // the CONNECT itself is refused
    auto tls_res = tls_client.Get("/x");
    if (tls_res) CHECK(tls_res->status == 502);
    const auto summary = proxy->stop();
    CHECK(summary.flow_count == 0);
    CHECK(proxy->flows().empty());
}

TEST_CASE("chunked responses are counted on the wire") {
    const std::string body_wire = "4\r\nWiki\r\n7\r\npedia i\r\nB\r\nn \r\nchunks.\r\n0\r\n\r\n";
    const std::string head = "HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\nTransfer-Encoding: chunked\r\n\r\n";
    tltest::RawServer origin(head + body_wire);
    ProxyFixture fx;
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);

    auto fd = connect_tcp("127.0.0.1", proxy->port(), std::chrono::milliseconds(2000));
    set_io_timeout(fd.get(), std::chrono::milliseconds(5000));
    SocketStream s(std::move(fd));
    const std::string target = "http://127.0.0.1:" + std::to_string(origin.port()) + "/c";
    s.write_all("GET " + target + " HTTP/1.1\r\nHost: 127.0.0.1\r\nConnection: close\r\n\r\n");
    BufferedReader r(s);
    const auto resp = read_response_head(r);
    CHECK(resp.status == 200);
    RelayProgress p;
    relay_body(r, nullptr, {BodyFraming::Chunked, 0}, true, p);
    CHECK(p.captured == "Wikipedia in \r\nchunks.");

    wait_for_flows(*proxy, 1);
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].response_body_bytes == body_wire.size());
    CHECK(flows[0].response_header_bytes == resp.wire_size);

    // the forwarded head is what the origin received
    const auto got = origin.received();
    REQUIRE(got.size() == 1);
    CHECK(flows[0].request_header_bytes == got[0].size());
    CHECK(got[0].rfind("GET /c HTTP/1.1\r\n", 0) == 0);
    CHECK(got[0].find("Connection") == std::string::npos);
}

TEST_CASE("request bodies with Expect: 100-continue") {
    tltest::RawServer origin("HTTP/1.1 200 OK\r\nContent-Length: 2\r\nConnection: close\r\n\r\nok");
    ProxyFixture fx;
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);
    auto fd = connect_tcp("127.0.0.1", proxy->port(), std::chrono::milliseconds(2000));
    set_io_timeout(fd.get(), std::chrono::milliseconds(5000));
    SocketStream s(std::move(fd));
    s.write_all("POST http://127.0.0.1:" + std::to_string(origin.port()) +
                "/p HTTP/1.1\r\nHost: x\r\nContent-Length: 5\r\nExpect: 100-continue\r\n\r\n");
    BufferedReader r(s);
    const auto cont = read_response_head(r);
    CHECK(cont.status == 100);
    s.write_all("hello");
    const auto resp = read_response_head(r);
    CHECK(resp.status == 200);
    wait_for_flows(*proxy, 1);
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].request_body_bytes == 5);
    CHECK(flows[0].request_body == "hello");
    const auto got = origin.received();
    REQUIRE(got.size() == 1);
    CHECK(got[0].find("Expect") == std::string::npos);
    CHECK(got[0].substr(got[0].size() - 5) == "hello");
}

TEST_CASE("hosts outside the intercept list are tunneled as one flow") {
    ProxyFixture fx;
    tltest::OriginServer origin(true);
    auto cfg = fx.config();
    cfg.intercept_hosts = {"*.x.com", "x.com"};
    auto proxy = start_proxy(cfg, nullptr, fx.ca);

    httplib::Client client(origin.base_url());
    client.set_proxy("127.0.0.1", proxy->port());
    client.set_ca_cert_path(origin.ca_file().string()); // the origin's own certificate reaches the client
    client.set_keep_alive(false);
    auto res = client.Get("/payload/5000");
    REQUIRE_MESSAGE(res, httplib::to_string(res.error()));
    CHECK(res->body.size() == 5000);
    client.stop();
    for (int i = 0; i < 200 && proxy->flow_count() < 1; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].method == "CONNECT");
    CHECK(flows[0].url.port == origin.port());
    CHECK(flows[0].response_body_bytes > 5000); // TLS records around the payload
    CHECK(flows[0].request_header_bytes > 0);
}

TEST_CASE("flows land in the store under the active run id") {
    ProxyFixture fx;
    tltest::OriginServer origin(false);
    store::FlowStore st(fx.dir / "store");
    auto proxy = start_proxy(fx.config(), &st, fx.ca);
    CHECK(proxy->store() == &st);
    auto client = plain_client(origin, *proxy);

    proxy->set_run_id("run-a");
    client.Get("/payload/100");
    client.Get("/payload/200");
    wait_for_flows(*proxy, 2);
    proxy->set_run_id("run-b");
    client.Get("/page");
    wait_for_flows(*proxy, 3);

    CHECK(proxy->flows_for_run("run-a").size() == 2);
    CHECK(proxy->flows_for_run("run-b").size() == 1);
    CHECK(st.load_runs().empty()); // staged only

    JourneyRun run;
    run.run_id = "run-a";
    run.platform_id = "x";
    run.journey_name = "t";
    const auto flows = proxy->flows_for_run("run-a");
    for (const auto& f : flows) run.flow_ids.push_back(f.flow_id);
    bracket_run(run, flows);
    st.commit_run(run);
    const auto loaded = st.load_runs();
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].flows == flows);
    CHECK(sum_response_bodies(loaded[0].flows) == 300);
}

TEST_CASE("activity tracking and stop with an exchange in flight") {
    ProxyFixture fx;
    tltest::OriginServer origin(false);
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);
    CHECK_FALSE(proxy->last_activity().has_value());
    CHECK(proxy->in_flight() == 0);

    std::thread slow([&] {
        auto client = plain_client(origin, *proxy);
        client.Get("/slow/3000");
    });
    for (int i = 0; i < 200 && proxy->in_flight() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    CHECK(proxy->in_flight() == 1);
    CHECK(proxy->last_activity().has_value());

    const auto summary = proxy->stop();
    slow.join();
    CHECK(summary.flow_count == 1);
    CHECK(summary.truncated_flows == 1);
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].size_is_estimated);
    CHECK(proxy->in_flight() == 0);
    CHECK(proxy->stop().flow_count == 1); // idempotent
}

TEST_CASE("cookie sizes are recorded without values by default") {
    ProxyFixture fx;
    tltest::OriginServer origin(false);
    auto proxy = start_proxy(fx.config(), nullptr, fx.ca);
    auto client = plain_client(origin, *proxy);
    client.Get("/page", {{"Cookie", "guest_id=v1%3A17; ct0=abcdef"}});
    wait_for_flows(*proxy, 1);
    const auto flows = proxy->flows();
    REQUIRE(flows.size() == 1);
    REQUIRE(flows[0].request_cookies.size() == 2);
    CHECK(flows[0].request_cookies[1].value_bytes == 6);
    CHECK_FALSE(flows[0].request_cookies[1].value.has_value());
}

TEST_CASE("start errors") {
    ProxyFixture fx;
    auto first = start_proxy(fx.config(), nullptr, fx.ca);
    auto cfg = fx.config();
    cfg.listen_address = "127.0.0.1:" + std::to_string(first->port());
    CHECK_THROWS_AS(start_proxy(cfg, nullptr, fx.ca), ProxyStartError);
    cfg.listen_address = "not-an-address:x";
    CHECK_THROWS_AS(start_proxy(cfg, nullptr, fx.ca), ProxyStartError);

    auto disk = fx.config();
    disk.ca_dir = fx.dir / "ca";
    auto s = start_proxy(disk);
    CHECK(std::filesystem::exists(fx.dir / "ca" / CertificateAuthority::kCertFile));
    CHECK(s->endpoint() == "127.0.0.1:" + std::to_string(s->port()));
}
