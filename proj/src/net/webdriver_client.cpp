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

#include "trafficledger/journey/webdriver_client.hpp"

#include "trafficledger/flow.hpp"

#include <httplib.h>

namespace trafficledger::journey {

struct WebDriverClient::Http {
    explicit Http(const std::string& origin) : client(origin) {}
    httplib::Client client;
};

Json new_session_payload(const SessionOptions& opts) {
    Json always = Json::object();
    if (opts.browser_name) always["browserName"] = *opts.browser_name;
    if (opts.accept_insecure_certs) always["acceptInsecureCerts"] = true;
    if (opts.proxy) {
        always["proxy"] = {{"proxyType", "manual"}, {"httpProxy", *opts.proxy}, {"sslProxy", *opts.proxy}};
    }
    if (opts.extra_capabilities.is_object()) {
        for (const auto& [k, v] : opts.extra_capabilities.items()) always[k] = v;
    }
    return {{"capabilities", {{"alwaysMatch", always}, {"firstMatch", Json::array({Json::object()})}}}};
}

WebDriverClient::WebDriverClient(const std::string& endpoint, std::chrono::milliseconds timeout) {
    Url u;
    try {
        u = Url::parse(endpoint);
    } catch (const std::invalid_argument& e) {
        throw DriverError("invalid argument", "bad driver endpoint '" + endpoint + "'");
    }
    if (u.scheme != "http" && u.scheme != "https")
        throw DriverError("invalid argument", "driver endpoint must be http(s): " + endpoint);
    std::string origin = u.scheme + "://" + u.host;
    if (u.port) origin += ":" + std::to_string(*u.port);
    base_path_ = u.path == "/" ? "" : u.path;
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();

    http_ = std::make_unique<Http>(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    http_->client.set_connection_timeout(std::chrono::seconds(10));
    http_->client.set_read_timeout(secs);
    http_->client.set_write_timeout(secs);
    http_->client.set_keep_alive(true);
    http_->client.set_tcp_nodelay(true);
}

WebDriverClient::~WebDriverClient() = default;

std::string WebDriverClient::session_path(const std::string& suffix) const {
    if (session_id_.empty()) throw DriverError("invalid session id", "no active session");
    return "/session/" + session_id_ + suffix;
}

Json WebDriverClient::command(const std::string& method, const std::string& path, const Json* body) {
    const std::string full = base_path_ + path;
    httplib::Result res;
    if (method == "GET") {
        res = http_->client.Get(full);
    } else if (method == "DELETE") {
        res = http_->client.Delete(full);
    } else {
        res = http_->client.Post(full, body ? body->dump() : std::string("{}"), "application/json; charset=utf-8");
    }
    if (!res) throw DriverError("transport", method + " " + full + ": " + httplib::to_string(res.error()));

    Json reply;
    try {
        reply = Json::parse(res->body);
    } catch (const Json::parse_error&) {
        throw DriverError("unknown error", "non-JSON reply to " + method + " " + full, res->status);
    }
    const Json value = reply.contains("value") ? reply["value"] : Json();
    if (res->status < 200 || res->status >= 300) {
        std::string error = "unknown error", message;
        if (value.is_object()) {
            error = value.value("error", error);
            message = value.value("message", "");
        }
        throw DriverError(error, message.empty() ? method + " " + full : message, res->status);
    }
    return value;
}

void WebDriverClient::new_session(const SessionOptions& opts) {
    const Json body = new_session_payload(opts);
    const Json value = command("POST", "/session", &body);
    if (!value.is_object() || !value.contains("sessionId") || !value["sessionId"].is_string())
        throw DriverError("session not created", "reply lacks sessionId");
    session_id_ = value["sessionId"].get<std::string>();
}

void WebDriverClient::navigate(const std::string& url) {
    const Json body = {{"url", url}};
    command("POST", session_path("/url"), &body);
}

std::optional<std::string> WebDriverClient::find_element(const std::string& strategy, const std::string& value) {
    const Json body = {{"using", strategy}, {"value", value}};
    try {
        const Json v = command("POST", session_path("/element"), &body);
        if (v.is_object() && v.contains(kElementKey)) return v[kElementKey].get<std::string>();
        throw DriverError("unknown error", "find element reply lacks an element reference");
    } catch (const DriverError& e) {
        if (e.error() == "no such element") return std::nullopt;
        throw;
    }
}

void WebDriverClient::click(const std::string& element_id) {
    const Json body = Json::object();
    command("POST", session_path("/element/" + element_id + "/click"), &body);
}

bool WebDriverClient::is_displayed(const std::string& element_id) {
    const Json v = command("GET", session_path("/element/" + element_id + "/displayed"), nullptr);
    return v.is_boolean() && v.get<bool>();
}

void WebDriverClient::perform_actions(const Json& actions) {
    const Json body = {{"actions", actions}};
    command("POST", session_path("/actions"), &body);
}

Json WebDriverClient::execute_sync(const std::string& script, const Json& args) {
    const Json body = {{"script", script}, {"args", args}};
    return command("POST", session_path("/execute/sync"), &body);
}

void WebDriverClient::delete_session() {
    if (session_id_.empty()) return;
    const std::string path = session_path("");
    session_id_.clear();
    command("DELETE", path, nullptr);
}

} // namespace trafficledger::journey
