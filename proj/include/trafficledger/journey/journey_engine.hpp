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

#include "trafficledger/flow.hpp"
#include "trafficledger/flow_store.hpp"
#include "trafficledger/journey/journey_spec.hpp"
#include "trafficledger/journey/pacing.hpp"
#include "trafficledger/journey/webdriver_client.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace trafficledger::net {
class CaptureSession;
}

namespace trafficledger::journey {

/// A step could not complete, typically an element that never appeared.
class StepError : public std::runtime_error {
public:
    StepError(std::size_t index, std::string kind, const std::string& what)
        : std::runtime_error("step " + std::to_string(index + 1) + " (" + kind + "): " + what),
          index_(index),
          kind_(std::move(kind)) {}

    /// Zero-based step index.
    std::size_t step_index() const { return index_; }
    const std::string& step_kind() const { return kind_; }

private:
    std::size_t index_;
    std::string kind_;
};

struct IdleResult {
    std::chrono::milliseconds elapsed{0};
    /// True when the hard timeout ended the wait.
    bool timed_out = false;
};

/// Returns once `quiet_period` has passed with no new request and none in
/// flight, or when `hard_timeout` elapses.
IdleResult wait_network_idle(const ActivitySource* activity, Pacer& pacer, Millis quiet_period, Millis hard_timeout);

struct ScrollResult {
    std::size_t commands = 0;
    std::chrono::milliseconds elapsed{0};
};

/// Scrolls by `pixels` every `interval` until `duration` has elapsed.
ScrollResult scroll_feed(WebDriverClient& driver, Pacer& pacer, Millis duration, Millis interval, int pixels = 1000);

struct JourneyResult {
    JourneyRun run;
    std::vector<HttpFlow> flows;
    /// Set for an aborted run.
    std::optional<std::string> error;
};

struct EngineOptions {
    std::string driver_endpoint;
    SessionOptions session;
    /// Poll interval while waiting for elements.
    Millis element_poll{100};
    /// How long to wait for the proxy to settle after the browser closes.
    Millis drain_timeout{2000};
    /// Called after each run is recorded (for progress output).
    std::function<void(const JourneyResult&, int run_index)> on_run;
};

/// Executes `spec.repeat` runs, each in a fresh browser session. Flows captured
/// by `proxy` during a run carry its run_id; with a store the run is committed
/// after the browser closes. An aborted run is committed with complete=false
/// and the StepError or DriverError is rethrown.
std::vector<JourneyResult> run_journey(const JourneySpec& spec, const EngineOptions& options,
                                       net::CaptureSession* proxy, store::FlowStore* store, Pacer& pacer);

} // namespace trafficledger::journey
