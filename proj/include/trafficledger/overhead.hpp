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

#include "trafficledger/classifier.hpp"
#include "trafficledger/flow.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trafficledger::analytics {

class AggregationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ComparabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scroll-style journeys are normalised per minute of measured journey time;
/// post-style journeys per action.
enum class RateBasis { PerMinute, PerAction };

std::string_view to_string(RateBasis b);
/// Accepts "time"/"per-minute" and "action"/"per-action".
RateBasis rate_basis_from_string(std::string_view s);

struct ClassifiedRun {
    JourneyRun run;
    classify::CategoryBreakdown breakdown;
    /// Actions performed in the run; one post per run for the post journey.
    std::uint64_t action_count = 1;
};

/// Repeated runs of one (platform, journey). Sums are kept exactly so that
/// downstream shares are exact ratios of integers.
struct RunAggregate {
    std::string platform_id;
    std::string journey_name;
    RateBasis basis = RateBasis::PerMinute;
    std::size_t n_runs = 0;
    std::size_t n_flows = 0;

    std::uint64_t sum_total_bytes = 0;
    std::array<std::uint64_t, 4> sum_category_bytes{};
    std::uint64_t sum_actions = 0;
    Millis sum_duration{0};

    double mean_total_bytes = 0;
    /// Population standard deviation of per-run totals.
    double std_total_bytes = 0;
    std::array<double, 4> mean_category_bytes{};
    double mean_duration_minutes = 0;
    double mean_actions = 0;
    /// GB per minute or GB per action; absent when the denominator is zero.
    std::optional<double> mean_rate_gb;

    std::uint64_t sum_category(Category c) const { return sum_category_bytes[category_index(c)]; }
};

/// Throws AggregationError on an empty list or mixed platform/journey.
RunAggregate aggregate(const std::vector<ClassifiedRun>& runs, RateBasis basis);

/// Decimal-GB rate. `denominator` is minutes (PerMinute) or actions
/// (PerAction); throws RateError when it is not positive.
double rate(double bytes, double denominator, RateBasis basis);

struct TrackingOverhead {
    /// Mean SurveillanceTracking bytes per run, rounded to whole bytes.
    std::int64_t bytes = 0;
    double share = 0;
    std::optional<double> rate_gb;
};

TrackingOverhead tracking_overhead(const RunAggregate& csm);

/// Corporate overhead of a corporate platform over a sufficiency baseline.
///
/// res_x and res_m are per-run mean totals rounded to whole bytes, and
/// res_co = res_x - res_m, so res_m + res_co == res_x holds exactly.
/// co_share is computed from the exact integer sums rather than the rounded
/// means; it is therefore invariant under scaling every byte count.
struct OverheadReport {
    std::string journey_name;
    std::string csm_platform;
    std::string baseline_platform;
    RateBasis basis = RateBasis::PerMinute;
    std::size_t csm_runs = 0;
    std::size_t baseline_runs = 0;
    double csm_mean_duration_minutes = 0;
    double baseline_mean_duration_minutes = 0;

    std::int64_t res_x = 0;
    std::int64_t res_m = 0;
    std::int64_t res_co = 0;
    /// Present only when res_x > 0.
    std::optional<double> co_share;
    std::optional<double> co_rate_gb;

    std::int64_t tracking_bytes = 0;
    double tracking_share = 0;
    std::optional<double> tracking_rate_gb;

    /// Baseline exceeded the corporate platform. Reported, never clamped.
    bool negative_overhead_flag = false;
};

/// Throws ComparabilityError for different journeys or rate bases.
OverheadReport corporate_overhead(const RunAggregate& csm, const RunAggregate& baseline);

/// `0.860409` -> `"86.04%"`.
std::string format_percent(double share);

} // namespace trafficledger::analytics
