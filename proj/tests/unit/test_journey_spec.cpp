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

#include "trafficledger/journey/journey_spec.hpp"

#include <doctest.h>

using namespace trafficledger;
using namespace trafficledger::journey;

namespace {

const char* kPostJourney = R"(
name: post-text
platform: x
repeat: 3
basis: action
actions: 1
element_timeout: 15s
browser: firefox
accept_insecure_certs: true
steps:
  - goto: https://x.com/home
  - wait_network_idle: {quiet: 750ms, timeout: 20s}
  - click: {css: "a[data-testid='SideNav_NewTweet_Button']"}
  - type_text:
      target: {role: textbox, name: "Post text"}
      text: "hello, world"
      delay: 100ms
  - click: {text: "Post"}
  - assert_visible: {text: "Your post was sent."}
  - wait: 2s
)";

} // namespace

TEST_CASE("durations") {
    CHECK(parse_duration("250ms") == Millis(250));
    CHECK(parse_duration("2s") == Millis(2000));
    CHECK(parse_duration("1.5s") == Millis(1500));
    CHECK(parse_duration("5m") == Millis(300'000));
    CHECK(parse_duration("5min") == Millis(300'000));
    CHECK(parse_duration("1h") == Millis(3'600'000));
    CHECK(parse_duration("0ms") == Millis(0));
    CHECK_THROWS_AS(parse_duration("5"), SpecError);
    CHECK_THROWS_AS(parse_duration("s"), SpecError);
    CHECK_THROWS_AS(parse_duration("-2s"), SpecError);
    CHECK_THROWS_AS(parse_duration("2 weeks"), SpecError);
}

TEST_CASE("post journey parses every field") {
    const auto spec = parse_journey_spec(kPostJourney);
    CHECK(spec.name == "post-text");
    CHECK(spec.platform_id == "x");
    CHECK(spec.repeat == 3);
    CHECK(spec.basis == analytics::RateBasis::PerAction);
    CHECK(spec.action_count == 1);
    CHECK(spec.element_timeout == Millis(15000));
    CHECK(spec.browser == "firefox");
    CHECK(spec.accept_insecure_certs);
    REQUIRE(spec.steps.size() == 7);

    CHECK(std::get<Goto>(spec.steps[0]).url == "https://x.com/home");
    const auto idle = std::get<WaitNetworkIdle>(spec.steps[1]);
    CHECK(idle.quiet_period == Millis(750));
    CHECK(idle.hard_timeout == Millis(20000));
    const auto click = std::get<Click>(spec.steps[2]);
    CHECK(click.target.kind == Selector::Kind::Css);
    CHECK(click.target.value == "a[data-testid='SideNav_NewTweet_Button']");
    const auto type = std::get<TypeText>(spec.steps[3]);
    CHECK(type.target.kind == Selector::Kind::Role);
    CHECK(type.target.value == "textbox");
    CHECK(type.target.name == "Post text");
    CHECK(type.text == "hello, world");
    CHECK(type.per_key_delay == Millis(100));
    CHECK(std::get<Click>(spec.steps[4]).target.kind == Selector::Kind::Text);
    CHECK(std::get<AssertVisible>(spec.steps[5]).target.value == "Your post was sent.");
    CHECK(std::get<WaitFixed>(spec.steps[6]).duration == Millis(2000));

    const char* kinds[] = {"goto", "wait_network_idle", "click", "type_text", "click", "assert_visible", "wait"};
    for (std::size_t i = 0; i < spec.steps.size(); ++i) CHECK(step_kind(spec.steps[i]) == kinds[i]);
}

TEST_CASE("defaults and short forms") {
    const auto spec = parse_journey_spec(R"(
name: scroll
platform: mastodon
steps:
  - goto: {url: "https://mastodon.social/home"}
  - wait_network_idle:
  - scroll: {duration: 5m}
  - scroll: {times: 3, interval: 500ms, pixels: 400}
  - wait: {duration: 1s}
)");
    CHECK(spec.repeat == 1);
    CHECK(spec.basis == analytics::RateBasis::PerMinute);
    CHECK(spec.element_timeout == Millis(10000));
    CHECK_FALSE(spec.browser.has_value());
    CHECK_FALSE(spec.accept_insecure_certs);
    const auto idle = std::get<WaitNetworkIdle>(spec.steps[1]);
    CHECK(idle.quiet_period == Millis(500));
    CHECK(idle.hard_timeout == Millis(30000));
    const auto s = std::get<Scroll>(spec.steps[2]);
    CHECK(s.duration == Millis(300'000));
    CHECK(s.interval == Millis(2000));
    CHECK(s.pixels == 1000);
    CHECK_FALSE(s.times.has_value());
    const auto t = std::get<Scroll>(spec.steps[3]);
    CHECK(t.times == 3);
    CHECK(t.interval == Millis(500));
    CHECK(t.pixels == 400);
    CHECK(std::get<WaitFixed>(spec.steps[4]).duration == Millis(1000));
}

TEST_CASE("invalid journeys are rejected with the step named") {
    auto err = [](const std::string& yaml) -> std::string {
        try {
            parse_journey_spec(yaml);
        } catch (const SpecError& e) {
            return e.what();
        }
        return "";
    };
    const std::string head = "name: j\nplatform: x\nsteps:\n  - goto: https://x.com\n";
    CHECK(err(head + "  - hover: {css: a}\n").find("step 2: unknown step 'hover'") != std::string::npos);
    CHECK(err(head + "  - click: {css: a, text: b}\n").find("exactly one") != std::string::npos);
    CHECK(err(head + "  - click: {css: a, name: b}\n").find("role selectors only") != std::string::npos);
    CHECK(err(head + "  - click: {css: \"\"}\n").find("empty selector") != std::string::npos);
    CHECK(err(head + "  - scroll: {duration: 1s, times: 2}\n").find("not both") != std::string::npos);
    CHECK(err(head + "  - scroll: {}\n").find("duration or times") != std::string::npos);
    CHECK(err(head + "  - scroll: {times: 0}\n").find("positive") != std::string::npos);
    CHECK(err(head + "  - scroll: {duration: 1s, interval: 0ms}\n").find("interval") != std::string::npos);
    CHECK(err(head + "  - wait: 0s\n").find("positive") != std::string::npos);
    CHECK(err(head + "  - wait: soon\n").find("bad duration") != std::string::npos);
    CHECK(err(head + "  - type_text: {target: {css: a}}\n").find("target and text") != std::string::npos);
    CHECK(err(head + "  - {click: {css: a}, wait: 1s}\n").find("single-key") != std::string::npos);
    CHECK(err("name: j\nplatform: x\nsteps:\n  - click: {css: a}\n").find("first step must be goto") !=
          std::string::npos);
    CHECK(err("platform: x\nsteps:\n  - goto: u\n").find("name") != std::string::npos);
    CHECK(err("name: j\nsteps:\n  - goto: u\n").find("platform") != std::string::npos);
    CHECK(err("name: j\nplatform: x\nsteps: []\n").find("at least one step") != std::string::npos);
    CHECK(err(head + "repeat: 0\n").find("repeat") != std::string::npos);
    CHECK(err(head + "basis: hourly\n") != "");
    CHECK(err(head + "repeats: 2\n").find("unknown key 'repeats'") != std::string::npos);
    CHECK(err("steps: [unclosed") != "");
    CHECK(err("- just\n- a list\n").find("mapping") != std::string::npos);
    CHECK(err(head + "repeat: many\n") != "");
}

TEST_CASE("journey files load with the path in errors") {
    tltest::TempDir dir;
    tltest::write_text(dir / "ok.yaml", kPostJourney);
    CHECK(load_journey_spec(dir / "ok.yaml").steps.size() == 7);
    tltest::write_text(dir / "bad.yaml", "name: j\n");
    try {
        load_journey_spec(dir / "bad.yaml");
        FAIL("expected SpecError");
    } catch (const SpecError& e) {
        CHECK(std::string(e.what()).find("bad.yaml") != std::string::npos);
    }
    CHECK_THROWS_AS(load_journey_spec(dir / "absent.yaml"), SpecError);
}

TEST_CASE("shipped journeys parse") {
    const std::filesystem::path dir = std::filesystem::path(TL_SOURCE_DIR) / "data" / "journeys";
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".yaml") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_journey_spec(e.path()));
        ++n;
    }
    CHECK(n >= 3);
}

TEST_CASE("xpath literals") {
    CHECK(xpath_literal("Post") == "'Post'");
    CHECK(xpath_literal("it's") == "\"it's\"");
    CHECK(xpath_literal("say \"it's\"") == "concat('say \"it', \"'\", 's\"')");
    CHECK(xpath_literal("'") == "\"'\"");
    CHECK(xpath_literal("") == "''");
}

TEST_CASE("selector locators") {
    Selector css{Selector::Kind::Css, "div.x > a", ""};
    CHECK(css.locator() == std::pair<std::string, std::string>{"css selector", "div.x > a"});
    CHECK(css.describe() == "css 'div.x > a'");

    Selector role{Selector::Kind::Role, "button", "Post"};
    const auto [rs, rv] = role.locator();
    CHECK(rs == "xpath");
    CHECK(rv.find("@role='button'") != std::string::npos);
    CHECK(rv.find("self::button") != std::string::npos);
    CHECK(rv.find("normalize-space(.)='Post'") != std::string::npos);
    CHECK(rv.find("@aria-label='Post'") != std::string::npos);
    CHECK(role.describe() == "role button named 'Post'");

    Selector bare{Selector::Kind::Role, "dialog", ""};
    CHECK(bare.locator().second == "//*[(@role='dialog')]");

    Selector text{Selector::Kind::Text, "What's happening?", ""};
    const auto [ts_, tv] = text.locator();
    CHECK(ts_ == "xpath");
    CHECK(tv.find("contains(normalize-space(.), \"What's happening?\")") != std::string::npos);
    CHECK(tv.find("not(.//*") != std::string::npos);
}
