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

#include "trafficledger/time.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace trafficledger {

namespace {

// Howard Hinnant's days_from_civil / civil_from_days.
constexpr long long days_from_civil(long long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

struct Civil {
    long long year;
    unsigned month;
    unsigned day;
};

constexpr Civil civil_from_days(long long z) {
    z += 719468;
    const long long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long long y = static_cast<long long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {y + (m <= 2), m, d};
}

[[noreturn]] void bad(std::string_view text) {
    throw std::invalid_argument("invalid timestamp: '" + std::string(text) + "'");
}

class Cursor {
public:
    explicit Cursor(std::string_view s) : s_(s) {}

    int digits(std::size_t n) {
        if (pos_ + n > s_.size()) bad(s_);
        int v = 0;
        for (std::size_t i = 0; i < n; ++i) {
            char c = s_[pos_ + i];
            if (!std::isdigit(static_cast<unsigned char>(c))) bad(s_);
            v = v * 10 + (c - '0');
        }
        pos_ += n;
        return v;
    }
    void expect(char c) {
        if (pos_ >= s_.size() || (s_[pos_] != c && !(c == 'T' && (s_[pos_] == 't' || s_[pos_] == ' '))))
            bad(s_);
        ++pos_;
    }
    bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
    bool done() const { return pos_ == s_.size(); }
    char next() {
        if (pos_ >= s_.size()) bad(s_);
        return s_[pos_++];
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

std::string format_timestamp(Timestamp ts) {
    const long long ms = ts.time_since_epoch().count();
    long long days = ms / 86'400'000;
    long long rem = ms % 86'400'000;
    if (rem < 0) {
        rem += 86'400'000;
        --days;
    }
    const Civil c = civil_from_days(days);
    const int hh = static_cast<int>(rem / 3'600'000);
    const int mm = static_cast<int>(rem / 60'000 % 60);
    const int ss = static_cast<int>(rem / 1000 % 60);
    const int frac = static_cast<int>(rem % 1000);
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ", c.year, c.month, c.day, hh, mm, ss,
                  frac);
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    Cursor cur(text);
    const int year = cur.digits(4);
    cur.expect('-');
    const int month = cur.digits(2);
    cur.expect('-');
    const int day = cur.digits(2);
    cur.expect('T');
    const int hour = cur.digits(2);
    cur.expect(':');
    const int minute = cur.digits(2);
    cur.expect(':');
    const int second = cur.digits(2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60) bad(text);

    int millis = 0;
    if (cur.peek('.')) {
        cur.next();
        int scale = 100;
        bool any = false;
        while (!cur.done() && !cur.peek('Z') && !cur.peek('z') && !cur.peek('+') && !cur.peek('-')) {
            char c = cur.next();
            if (!std::isdigit(static_cast<unsigned char>(c))) bad(text);
            millis += (c - '0') * scale;
            scale /= 10;
            any = true;
        }
        if (!any) bad(text);
    }

    long long offset_minutes = 0;
    if (cur.done()) bad(text);
    char tz = cur.next();
    if (tz == 'Z' || tz == 'z') {
        // UTC
    } else if (tz == '+' || tz == '-') {
        const int oh = cur.digits(2);
        if (cur.peek(':')) cur.next();
        const int om = cur.digits(2);
        offset_minutes = (oh * 60 + om) * (tz == '-' ? -1 : 1);
    } else {
        bad(text);
    }
    if (!cur.done()) bad(text);

    const long long days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    const long long secs = days * 86400 + hour * 3600 + minute * 60 + second - offset_minutes * 60;
    return Timestamp(Millis(secs * 1000 + millis));
}

SessionClock::SessionClock()
    : steady_anchor_(std::chrono::steady_clock::now()),
      utc_anchor_(std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now())) {}

Timestamp SessionClock::now() const { return to_utc(std::chrono::steady_clock::now()); }

Timestamp SessionClock::to_utc(std::chrono::steady_clock::time_point tp) const {
    return utc_anchor_ + std::chrono::duration_cast<Millis>(tp - steady_anchor_);
}

} // namespace trafficledger
