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

#include "trafficledger/flow.hpp"
#include "trafficledger/time.hpp"

#include <doctest.h>

#include <set>
#include <thread>

using namespace trafficledger;
using tltest::ts;

TEST_CASE("timestamps format as UTC with millisecond precision") {
    CHECK(format_timestamp(ts(0)) == "1970-01-01T00:00:00.000Z");
    CHECK(format_timestamp(ts(1'700'000'000'123)) == "2023-11-14T22:13:20.123Z");
}

TEST_CASE("HAR style timestamps parse with offsets and long fractions") {
    CHECK(parse_timestamp("2023-11-14T22:13:20.123Z") == ts(1'700'000'000'123));
    CHECK(parse_timestamp("2023-11-14T22:13:20.1239876Z") == ts(1'700'000'000'123));
    CHECK(parse_timestamp("2023-11-14T23:13:20.123+01:00") == ts(1'700'000'000'123));
    CHECK(parse_timestamp("2023-11-14T17:43:20.5-04:30") == ts(1'700'000'000'500));
    CHECK(parse_timestamp("2023-11-14T22:13:20Z") == ts(1'700'000'000'000));
    CHECK_THROWS_AS(parse_timestamp("yesterday"), std::invalid_argument);
    CHECK_THROWS_AS(parse_timestamp("2023-13-14T22:13:20Z"), std::invalid_argument);
    CHECK_THROWS_AS(parse_timestamp("2023-11-14T22:13:20"), std::invalid_argument);
}

TEST_CASE("format and parse round-trip") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const auto t = ts(static_cast<std::int64_t>(rng() % 4'000'000'000'000ULL));
        CHECK(parse_timestamp(format_timestamp(t)) == t);
    }
}

TEST_CASE("session clock is monotonic") {
    SessionClock clock;
    auto a = clock.now();
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    auto b = clock.now();
    CHECK(b >= a);
    CHECK(clock.to_utc(clock.anchor_steady()) <= a);
}

TEST_CASE("url parsing") {
    auto u = Url::parse("HTTPS://X.com:8443/i/api/graphql/abc/HomeTimeline?variables=%7B%7D");
    CHECK(u.scheme == "https");
    CHECK(u.host == "x.com");
    CHECK(u.port == 8443);
    CHECK(u.path == "/i/api/graphql/abc/HomeTimeline");
    CHECK(u.query == "variables=%7B%7D");
    CHECK(u.to_string() == "https://x.com:8443/i/api/graphql/abc/HomeTimeline?variables=%7B%7D");

    CHECK(Url::parse("https://pbs.twimg.com/media/A.JPG?name=small").extension() == "jpg");
    CHECK(Url::parse("https://x.com/home").extension().empty());
    CHECK(Url::parse("https://x.com/dir.d/").extension().empty());
    CHECK(Url::parse("http://[::1]:8080/x").host == "[::1]");
    CHECK(Url::parse("http://[::1]:8080/x").port == 8080);
    CHECK(Url::parse("example.org").path == "/");
    CHECK_THROWS_AS(Url::parse("https:///nohost"), std::invalid_argument);
    CHECK_THROWS_AS(Url::parse("http://h:99999/"), std::invalid_argument);
}

TEST_CASE("category names and slots") {
    for (Category c : kAssignableCategories) {
        CHECK(category_from_string(to_string(c)) == c);
    }
    CHECK(category_index(Category::CoreNavigation) == 0);
    CHECK(category_index(Category::Other) == 3);
    CHECK_THROWS_AS(category_index(Category::Unclassified), std::invalid_argument);
    CHECK_THROWS_AS(category_from_string("Tracking"), std::invalid_argument);
}

TEST_CASE("a classified flow cannot revert") {
    HttpFlow f;
    f.assign_category(Category::UserContent);
    f.assign_category(Category::Other);
    CHECK(f.category == Category::Other);
    CHECK_THROWS_AS(f.assign_category(Category::Unclassified), std::logic_error);
}

TEST_CASE("bracket_run spans first request start to last completion") {
    JourneyRun run;
    run.started_at = ts(5);
    run.ended_at = ts(6);
    std::vector<HttpFlow> none;
    bracket_run(run, none);
    CHECK(run.started_at == ts(5));

    std::vector<HttpFlow> flows{
        tltest::make_flow("r", 0, "https://a.example/", "GET", std::nullopt, 1, 0, 1, 0, ts(2000), Millis(10)),
        tltest::make_flow("r", 1, "https://a.example/", "GET", std::nullopt, 1, 0, 1, 0, ts(1000), Millis(5000)),
        tltest::make_flow("r", 2, "https://a.example/", "GET", std::nullopt, 1, 0, 1, 0, ts(3000), Millis(10)),
    };
    bracket_run(run, flows);
    CHECK(run.started_at == ts(1000));
    CHECK(run.ended_at == ts(6000));
    CHECK(run.duration() == Millis(5000));
}

TEST_CASE("identifiers") {
    CHECK(stable_id("abc") == stable_id("abc"));
    CHECK(stable_id("abc") != stable_id("abd"));
    // FNV-1a 64 of the empty string is the offset basis
    CHECK(stable_id("") == "cbf29ce484222325");
    CHECK(stable_id("a") == "af63dc4c8601ec8c");
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) seen.insert(random_id());
    CHECK(seen.size() == 1000);
    CHECK(seen.begin()->size() == 32);
}

TEST_CASE("total bytes sums the four counters") {
    auto f = tltest::make_flow("r", 0, "https://a.example/", "POST", std::nullopt, 1, 20, 300, 4000, ts(0), Millis(1));
    CHECK(f.total_bytes() == 4321);
}
