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
#include "trafficledger/flow.hpp"
#include "trafficledger/flow_store.hpp"
#include "trafficledger/journey/pacing.hpp"
#include "trafficledger/proxy/certificate_authority.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trafficledger::net {

/// The listen address is unusable or the root CA could not be prepared.
class ProxyStartError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProxyConfig {
    /// `host:port`; port 0 picks a free port.
    std::string listen_address = "127.0.0.1:8080";
    /// Directory for ca.pem / ca-key.pem. Ignored when a CA object is supplied.
    std::filesystem::path ca_dir;
    std::chrono::milliseconds upstream_timeout{30000};
    /// Keep request payloads on each flow (needed for beacon detection).
    bool record_bodies = false;
    std::size_t max_recorded_body = 16 * 1024 * 1024;
    /// Hosts (globs) whose HTTPS is decrypted. Empty means all. Other CONNECT
    /// targets are tunneled opaquely and recorded as one flow.
    std::vector<std::string> intercept_hosts;
    CookieOptions cookies;
    /// Extra trust anchors for upstream TLS, PEM. System roots are always used.
    std::optional<std::filesystem::path> upstream_ca_file;
    bool verify_upstream = true;
};

struct CaptureSummary {
    std::size_t flow_count = 0;
    std::uint64_t total_bytes = 0;
    /// Flows cut short by stop() or a transport failure.
    std::size_t truncated_flows = 0;
    std::size_t store_errors = 0;
};

/// A running intercepting proxy. Every completed exchange is recorded as one
/// HttpFlow, tagged with the run id active when the request arrived, and
/// staged in the store when one is attached.
class CaptureSession final : public journey::ActivitySource {
public:
    ~CaptureSession() override;
    CaptureSession(const CaptureSession&) = delete;
    CaptureSession& operator=(const CaptureSession&) = delete;

    std::uint16_t port() const;
    /// `host:port` suitable for a browser proxy setting.
    std::string endpoint() const;
    const std::string& session_id() const;
    Timestamp started_at() const;
    const CertificateAuthority& ca() const;
    /// Store that completed flows are staged in, or null.
    store::FlowStore* store() const;

    /// Tags flows whose request arrives from now on.
    void set_run_id(std::string run_id);
    std::string run_id() const;

    std::size_t flow_count() const;
    std::vector<HttpFlow> flows() const;
    std::vector<HttpFlow> flows_for_run(const std::string& run_id) const;

    std::optional<journey::Pacer::clock::time_point> last_activity() const override;
    std::size_t in_flight() const override;

    /// Closes the listener and every open connection, records in-flight
    /// exchanges as truncated, and waits for the workers. Idempotent.
    CaptureSummary stop();

    struct Impl;

private:
    friend std::unique_ptr<CaptureSession> start_proxy(ProxyConfig, store::FlowStore*,
                                                       std::shared_ptr<CertificateAuthority>);
    explicit CaptureSession(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

/// Binds, loads or creates the root CA, and starts accepting. `store` may be
/// null for an in-memory session; when set it must outlive the session.
/// Throws ProxyStartError.
std::unique_ptr<CaptureSession> start_proxy(ProxyConfig config, store::FlowStore* store = nullptr,
                                            std::shared_ptr<CertificateAuthority> ca = nullptr);

CaptureSummary stop_proxy(CaptureSession& session);

} // namespace trafficledger::net
