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
#include <optional>
#include <thread>

namespace trafficledger::journey {

/// Monotonic time source and sleeper. Journeys run against this so tests can
/// substitute a manual clock.
class Pacer {
public:
    using clock = std::chrono::steady_clock;
    virtual ~Pacer() = default;
    virtual clock::time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class RealPacer final : public Pacer {
public:
    clock::time_point now() override { return clock::now(); }
    void sleep_for(std::chrono::milliseconds d) override {
        if (d.count() > 0) std::this_thread::sleep_for(d);
    }
};

/// Something that can report when it last saw network activity, in the
/// pacer's timeline. The capture proxy implements it.
class ActivitySource {
public:
    virtual ~ActivitySource() = default;
    /// Start of the most recent request, if any.
    virtual std::optional<Pacer::clock::time_point> last_activity() const = 0;
    /// Requests started but not yet completed.
    virtual std::size_t in_flight() const = 0;
};

} // namespace trafficledger::journey
