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

#include "trafficledger/journey/journey_engine.hpp"

#include "trafficledger/proxy/capture_proxy.hpp"

#include <algorithm>
#include <exception>

namespace trafficledger::journey {

namespace {

using std::chrono::duration_cast;

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// UTF-8 to one string per code point; invalid bytes pass through singly.
std::vector<std::string> code_points(std::string_view s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 1;
        if (i + len > s.size()) len = 1;
        out.emplace_back(s.substr(i, len));
        i += len;
    }
    return out;
}

std::string key_value(const std::string& cp) {
    if (cp == "\n") return "\xEE\x80\x87"; // U+E007 Enter
    if (cp == "\t") return "\xEE\x80\x84"; // U+E004 Tab
    return cp;
}

/// Pointer click on the element to focus it, then each key pressed with the
/// delay held between keyDown and keyUp.
Json typing_actions(const std::string& element_id, const std::string& text, Millis delay) {
    Json pointer = {{"type", "pointer"},
                    {"id", "mouse"},
                    {"parameters", {{"pointerType", "mouse"}}},
                    {"actions",
                     Json::array({{{"type", "pointerMove"},
                                   {"duration", 0},
                                   {"origin", {{kElementKey, element_id}}},
                                   {"x", 0},
                                   {"y", 0}},
                                  {{"type", "pointerDown"}, {"button", 0}},
                                  {{"type", "pointerUp"}, {"button", 0}}})}};
    Json keys = Json::array();
    for (int i = 0; i < 3; ++i) keys.push_back({{"type", "pause"}, {"duration", 0}});
    for (const auto& cp : code_points(text)) {
        const std::string k = key_value(cp);
        keys.push_back({{"type", "keyDown"}, {"value", k}});
        if (delay.count() > 0) keys.push_back({{"type", "pause"}, {"duration", delay.count()}});
        keys.push_back({{"type", "keyUp"}, {"value", k}});
    }
    Json keyboard = {{"type", "key"}, {"id", "keyboard"}, {"actions", keys}};
    return Json::array({pointer, keyboard});
}

class Runner {
public:
    Runner(WebDriverClient& d, Pacer& p, const JourneySpec& s, const EngineOptions& o,
           const ActivitySource* activity)
        : driver_(d), pacer_(p), spec_(s), opts_(o), activity_(activity) {}

    void run_steps() {
        for (std::size_t i = 0; i < spec_.steps.size(); ++i) {
            index_ = i;
            std::visit([this](const auto& step) { exec(step); }, spec_.steps[i]);
        }
    }

private:
    [[noreturn]] void fail(const std::string& what) {
        throw StepError(index_, std::string(step_kind(spec_.steps[index_])), what);
    }

    std::string find(const Selector& sel) {
        const auto [strategy, value] = sel.locator();
        const auto start = pacer_.now();
        for (;;) {
            if (auto id = driver_.find_element(strategy, value)) return *id;
            if (pacer_.now() - start >= spec_.element_timeout)
                fail("no element matching " + sel.describe() + " within " +
                     std::to_string(spec_.element_timeout.count()) + " ms");
            pacer_.sleep_for(opts_.element_poll);
        }
    }

    void exec(const Goto& g) { driver_.navigate(g.url); }
    void exec(const Click& c) { driver_.click(find(c.target)); }
    void exec(const TypeText& t) { driver_.perform_actions(typing_actions(find(t.target), t.text, t.per_key_delay)); }
    void exec(const Scroll& s) {
        if (s.times) {
            for (int i = 0; i < *s.times; ++i) {
                if (i > 0) pacer_.sleep_for(s.interval);
                driver_.execute_sync("window.scrollBy(0, arguments[0]); return window.scrollY;", Json::array({s.pixels}));
            }
            return;
        }
        scroll_feed(driver_, pacer_, s.duration, s.interval, s.pixels);
    }
    void exec(const WaitFixed& w) { pacer_.sleep_for(w.duration); }
    void exec(const WaitNetworkIdle& w) { wait_network_idle(activity_, pacer_, w.quiet_period, w.hard_timeout); }
    void exec(const AssertVisible& a) {
        const auto start = pacer_.now();
        const std::string id = find(a.target);
        while (!driver_.is_displayed(id)) {
            if (pacer_.now() - start >= spec_.element_timeout) fail(a.target.describe() + " is present but not visible");
            pacer_.sleep_for(opts_.element_poll);
        }
    }

    WebDriverClient& driver_;
    Pacer& pacer_;
    const JourneySpec& spec_;
    const EngineOptions& opts_;
    const ActivitySource* activity_;
    std::size_t index_ = 0;
};

Timestamp wall_now() { return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()); }

} // namespace

IdleResult wait_network_idle(const ActivitySource* activity, Pacer& pacer, Millis quiet, Millis hard_timeout) {
    const auto start = pacer.now();
    const Millis step = std::clamp(quiet / 5, Millis(1), Millis(50));
    for (;;) {
        const auto now = pacer.now();
        auto ref = start;
        std::size_t busy = 0;
        if (activity) {
            if (auto last = activity->last_activity(); last && *last > ref) ref = *last;
            busy = activity->in_flight();
        }
        const auto elapsed = duration_cast<Millis>(now - start);
        const auto silent = duration_cast<Millis>(now - ref);
        if (busy == 0 && silent >= quiet) return {elapsed, false};
        if (elapsed >= hard_timeout) return {elapsed, true};
        Millis nap = step;
        if (busy == 0) nap = std::min(nap, quiet - silent);
        nap = std::min(nap, hard_timeout - elapsed);
        pacer.sleep_for(std::max(nap, Millis(1)));
    }
}

ScrollResult scroll_feed(WebDriverClient& driver, Pacer& pacer, Millis duration, Millis interval, int pixels) {
    ScrollResult r;
    const auto start = pacer.now();
    if (duration.count() <= 0) return r;
    if (interval.count() <= 0) interval = Millis(1);
    const auto end = start + duration;
    for (;;) {
        driver.execute_sync("window.scrollBy(0, arguments[0]); return window.scrollY;", Json::array({pixels}));
        ++r.commands;
        const auto next = start + interval * static_cast<Millis::rep>(r.commands);
        const auto until = std::min(next, end);
        const auto now = pacer.now();
        if (until > now) pacer.sleep_for(duration_cast<Millis>(until - now));
        if (next >= end || pacer.now() >= end) break;
    }
    r.elapsed = duration_cast<Millis>(pacer.now() - start);
    return r;
}

std::vector<JourneyResult> run_journey(const JourneySpec& spec, const EngineOptions& options,
                                       net::CaptureSession* proxy, store::FlowStore* store, Pacer& pacer) {
    spec.validate();
    std::vector<JourneyResult> results;
    for (int r = 0; r < spec.repeat; ++r) {
        JourneyResult res;
        res.run.run_id = random_id();
        res.run.journey_name = spec.name;
        res.run.platform_id = spec.platform_id;
        if (proxy) proxy->set_run_id(res.run.run_id);

        SessionOptions so = options.session;
        if (!so.browser_name && spec.browser) so.browser_name = spec.browser;
        if (spec.accept_insecure_certs) so.accept_insecure_certs = true;
        if (!so.proxy && proxy) so.proxy = proxy->endpoint();

        std::exception_ptr failure;
        const Timestamp t0 = wall_now();
        {
            WebDriverClient driver(options.driver_endpoint);
            try {
                driver.new_session(so);
                Runner(driver, pacer, spec, options, proxy).run_steps();
            } catch (const std::exception& e) {
                failure = std::current_exception();
                res.error = e.what();
            }
            // the browser is closed even after a failed step
            try {
                driver.delete_session();
            } catch (const DriverError& e) {
                if (!failure) {
                    failure = std::current_exception();
                    res.error = e.what();
                }
            }
        }
        const Timestamp t1 = wall_now();

        if (proxy) {
            const auto drain_start = pacer.now();
            while (proxy->in_flight() > 0 && pacer.now() - drain_start < options.drain_timeout)
                pacer.sleep_for(Millis(20));
            res.flows = proxy->flows_for_run(res.run.run_id);
        }
        for (const auto& f : res.flows) res.run.flow_ids.push_back(f.flow_id);
        res.run.started_at = t0;
        res.run.ended_at = t1;
        bracket_run(res.run, res.flows);
        res.run.complete = !failure;

        if (store) {
            if (proxy && proxy->store() == store) {
                store->commit_run(res.run);
            } else {
                store->append_run(res.run, res.flows);
            }
        }
        if (options.on_run) options.on_run(res, r);
        results.push_back(std::move(res));
        if (failure) std::rethrow_exception(failure);
    }
    return results;
}

} // namespace trafficledger::journey
