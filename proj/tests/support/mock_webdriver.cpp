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

#include "mock_webdriver.hpp"

#include "trafficledger/journey/webdriver_client.hpp"

#include <httplib.h>

#include <regex>
#include <stdexcept>

namespace tltest {

using trafficledger::Json;

namespace {

const std::string kSession = "mock-session-1";

void reply(httplib::Response& res, const Json& value, int status = 200) {
    res.status = status;
    res.set_content(Json{{"value", value}}.dump(), "application/json; charset=utf-8");
}

void reply_error(httplib::Response& res, int status, const std::string& error, const std::string& message) {
    reply(res, Json{{"error", error}, {"message", message}, {"stacktrace", ""}}, status);
}

} // namespace

MockWebDriver::MockWebDriver(MockDriverOptions opts) : opts_(std::move(opts)), server_(std::make_unique<httplib::Server>()) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        static const std::regex element_re(R"(^/session/([^/]+)/element/([^/]+)/(click|displayed)$)");
        static const std::regex session_re(R"(^/session/([^/]+)(/.*)?$)");
        Json body = Json::object();
        if (!req.body.empty()) {
            try {
                body = Json::parse(req.body);
            } catch (const Json::parse_error&) {
                reply_error(res, 400, "invalid argument", "body is not JSON");
                return;
            }
        }
        std::smatch m;
        std::string norm = req.path;
        std::string suffix;
        if (std::regex_match(req.path, m, element_re)) {
            norm = "/session/{sid}/element/{eid}/" + m[3].str();
            suffix = "/element/" + m[3].str();
        } else if (std::regex_match(req.path, m, session_re)) {
            suffix = m[2].matched ? m[2].str() : "";
            norm = "/session/{sid}" + suffix;
            if (m[1] != kSession) {
                reply_error(res, 404, "invalid session id", "unknown session " + m[1].str());
                return;
            }
        }
        int click_no = 0;
        {
            std::lock_guard lk(mu_);
            commands_.push_back({req.method, norm, body});
            if (suffix == "/element/click") click_no = ++clicks_;
        }

        if (req.method == "POST" && req.path == "/session") {
            ++sessions_;
            {
                std::lock_guard lk(mu_);
                capabilities_ = body;
            }
            reply(res, Json{{"sessionId", kSession}, {"capabilities", {{"browserName", "mock"}}}});
        } else if (req.method == "DELETE" && suffix.empty()) {
            ++deleted_;
            reply(res, nullptr);
        } else if (suffix == "/url") {
            if (opts_.proxy) fetch(body.value("url", ""));
            reply(res, nullptr);
        } else if (suffix == "/element") {
            const std::string value = body.value("value", "");
            bool found = !opts_.missing.count(value);
            if (found) {
                std::lock_guard lk(mu_);
                auto it = opts_.appear_after.find(value);
                if (it != opts_.appear_after.end() && lookups_[value]++ < it->second) found = false;
            }
            if (!found) {
                reply_error(res, 404, "no such element", "no element matches " + value);
                return;
            }
            reply(res, Json{{trafficledger::journey::kElementKey, "el-" + std::to_string(std::hash<std::string>{}(value) % 100000)}});
        } else if (suffix == "/element/click") {
            if (opts_.fail_click && click_no == *opts_.fail_click) {
                reply_error(res, 500, "unknown error", "click intercepted");
                return;
            }
            if (opts_.proxy && opts_.click_fetch_url) fetch(*opts_.click_fetch_url);
            reply(res, nullptr);
        } else if (suffix == "/element/displayed") {
            reply(res, true);
        } else if (suffix == "/actions") {
            reply(res, nullptr);
        } else if (suffix == "/execute/sync") {
            std::size_t scrolls = 0;
            {
                std::lock_guard lk(mu_);
                for (const auto& c : commands_) scrolls += c.path == "/session/{sid}/execute/sync";
            }
            reply(res, static_cast<std::int64_t>(scrolls * 1000));
        } else {
            reply_error(res, 404, "unknown command", req.method + " " + req.path);
        }
    };
    server_->set_tcp_nodelay(true);
    server_->Post(R"(/.*)", handler);
    server_->Get(R"(/.*)", handler);
    server_->Delete(R"(/.*)", handler);
    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock webdriver: bind failed");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockWebDriver::~MockWebDriver() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockWebDriver::endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::vector<DriverCommand> MockWebDriver::commands() const {
    std::lock_guard lk(mu_);
    return commands_;
}

std::vector<std::string> MockWebDriver::transcript() const {
    std::vector<std::string> out;
    for (const auto& c : commands()) out.push_back(c.method + " " + c.path);
    return out;
}

Json MockWebDriver::last_capabilities() const {
    std::lock_guard lk(mu_);
    return capabilities_;
}

void MockWebDriver::fetch(const std::string& url) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, url_re)) return;
    const auto colon = opts_.proxy->rfind(':');
    httplib::Client cli(m[1].str());
    cli.set_proxy(opts_.proxy->substr(0, colon), std::stoi(opts_.proxy->substr(colon + 1)));
    cli.enable_server_certificate_verification(false);
    cli.set_connection_timeout(5);
    cli.set_read_timeout(10);
    cli.Get(m[2].matched ? m[2].str() : "/");
}

} // namespace tltest
