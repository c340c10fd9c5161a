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

#include "trafficledger/json_codec.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace trafficledger::journey {

/// The driver answered with a protocol error or could not be reached.
class DriverError : public std::runtime_error {
public:
    DriverError(std::string error, const std::string& message, int http_status = 0)
        : std::runtime_error(error + ": " + message), error_(std::move(error)), http_status_(http_status) {}

    /// W3C error code, e.g. "no such element", or "transport" for I/O failures.
    const std::string& error() const { return error_; }
    int http_status() const { return http_status_; }

private:
    std::string error_;
    int http_status_;
};

inline constexpr const char* kElementKey = "element-6066-11e4-a052-4f2c87e40cfd";

struct SessionOptions {
    /// HTTP and HTTPS proxy for the browser, `host:port`.
    std::optional<std::string> proxy;
    std::optional<std::string> browser_name;
    bool accept_insecure_certs = false;
    /// Merged into `alwaysMatch` (vendor options such as a profile directory).
    Json extra_capabilities = Json::object();
};

/// The request body sent for New Session.
Json new_session_payload(const SessionOptions& opts);

/// Minimal W3C WebDriver client: the commands a journey needs and nothing else.
class WebDriverClient {
public:
    /// `endpoint` like `http://127.0.0.1:4444` or `http://host:4444/wd/hub`.
    explicit WebDriverClient(const std::string& endpoint,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(120000));
    ~WebDriverClient();
    WebDriverClient(const WebDriverClient&) = delete;
    WebDriverClient& operator=(const WebDriverClient&) = delete;

    void new_session(const SessionOptions& opts);
    bool has_session() const { return !session_id_.empty(); }
    const std::string& session_id() const { return session_id_; }

    void navigate(const std::string& url);
    /// Element id, or nullopt when the driver reports "no such element".
    std::optional<std::string> find_element(const std::string& strategy, const std::string& value);
    void click(const std::string& element_id);
    bool is_displayed(const std::string& element_id);
    void perform_actions(const Json& actions);
    Json execute_sync(const std::string& script, const Json& args = Json::array());
    /// Ends the session; a no-op without one.
    void delete_session();

private:
    Json command(const std::string& method, const std::string& path, const Json* body);
    std::string session_path(const std::string& suffix) const;

    struct Http;
    std::unique_ptr<Http> http_;
    std::string base_path_;
    std::string session_id_;
};

} // namespace trafficledger::journey
