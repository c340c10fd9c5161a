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

#include "trafficledger/overhead.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

namespace trafficledger::analytics {

namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

/// num/den reduced to lowest terms before conversion, so proportional
/// inputs give bit-identical results.
double exact_ratio(i128 num, i128 den) {
    const i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den));
}

std::int64_t rounded_mean(std::uint64_t sum, std::size_t n) {
    const i128 s = sum;
    const i128 k = n;
    return static_cast<std::int64_t>((2 * s + k) / (2 * k));
}

std::optional<double> try_rate(double bytes, double denominator, RateBasis basis) {
    if (!(denominator > 0)) return std::nullopt;
    return rate(bytes, denominator, basis);
}

double denominator_of(const RunAggregate& a) {
    return a.basis == RateBasis::PerMinute ? a.mean_duration_minutes : a.mean_actions;
}

} // namespace

std::string_view to_string(RateBasis b) { return b == RateBasis::PerMinute ? "per-minute" : "per-action"; }

RateBasis rate_basis_from_string(std::string_view s) {
    if (s == "time" || s == "per-minute" || s == "minute") return RateBasis::PerMinute;
    if (s == "action" || s == "per-action") return RateBasis::PerAction;
    throw std::invalid_argument("unknown rate basis '" + std::string(s) + "'");
}

double rate(double bytes, double denominator, RateBasis) {
    if (!(denominator > 0)) throw RateError("rate denominator must be positive");
    return bytes / kBytesPerGB / denominator;
}

RunAggregate aggregate(const std::vector<ClassifiedRun>& runs, RateBasis basis) {
    if (runs.empty()) throw AggregationError("no runs to aggregate");
    RunAggregate a;
    a.platform_id = runs.front().run.platform_id;
    a.journey_name = runs.front().run.journey_name;
    a.basis = basis;
    a.n_runs = runs.size();

    for (const auto& r : runs) {
        if (r.run.platform_id != a.platform_id || r.run.journey_name != a.journey_name)
            throw AggregationError("cannot aggregate " + r.run.platform_id + "/" + r.run.journey_name + " with " +
                                   a.platform_id + "/" + a.journey_name);
        a.sum_total_bytes += r.breakdown.total_bytes;
        for (std::size_t i = 0; i < 4; ++i) a.sum_category_bytes[i] += r.breakdown.bytes[i];
        a.sum_actions += r.action_count;
        a.sum_duration += r.run.duration();
        a.n_flows += r.breakdown.total_flows;
    }

    const double n = static_cast<double>(a.n_runs);
    a.mean_total_bytes = static_cast<double>(a.sum_total_bytes) / n;
    double sq = 0;
    for (const auto& r : runs) {
        const double d = static_cast<double>(r.breakdown.total_bytes) - a.mean_total_bytes;
        sq += d * d;
    }
    a.std_total_bytes = std::sqrt(sq / n);
    for (std::size_t i = 0; i < 4; ++i) a.mean_category_bytes[i] = static_cast<double>(a.sum_category_bytes[i]) / n;
    a.mean_duration_minutes = static_cast<double>(a.sum_duration.count()) / n / 60000.0;
    a.mean_actions = static_cast<double>(a.sum_actions) / n;
    a.mean_rate_gb = try_rate(a.mean_total_bytes, denominator_of(a), basis);
    return a;
}

TrackingOverhead tracking_overhead(const RunAggregate& csm) {
    TrackingOverhead t;
    const std::uint64_t sum = csm.sum_category(Category::SurveillanceTracking);
    if (csm.n_runs == 0) return t;
    t.bytes = rounded_mean(sum, csm.n_runs);
    t.share = csm.sum_total_bytes == 0 ? 0.0 : exact_ratio(sum, csm.sum_total_bytes);
    t.rate_gb = try_rate(static_cast<double>(sum) / static_cast<double>(csm.n_runs), denominator_of(csm), csm.basis);
    return t;
}

OverheadReport corporate_overhead(const RunAggregate& csm, const RunAggregate& baseline) {
    if (csm.journey_name != baseline.journey_name)
        throw ComparabilityError("journeys differ: '" + csm.journey_name + "' vs '" + baseline.journey_name + "'");
    if (csm.basis != baseline.basis)
        throw ComparabilityError("rate bases differ for journey '" + csm.journey_name + "'");
    if (csm.n_runs == 0 || baseline.n_runs == 0) throw ComparabilityError("aggregate without runs");

    OverheadReport r;
    r.journey_name = csm.journey_name;
    r.csm_platform = csm.platform_id;
    r.baseline_platform = baseline.platform_id;
    r.basis = csm.basis;
    r.csm_runs = csm.n_runs;
    r.baseline_runs = baseline.n_runs;
    r.csm_mean_duration_minutes = csm.mean_duration_minutes;
    r.baseline_mean_duration_minutes = baseline.mean_duration_minutes;

    r.res_x = rounded_mean(csm.sum_total_bytes, csm.n_runs);
    r.res_m = rounded_mean(baseline.sum_total_bytes, baseline.n_runs);
    r.res_co = r.res_x - r.res_m;

    // mean_x - mean_m = (sum_x * n_m - sum_m * n_x) / (n_x * n_m)
    const i128 nx = csm.n_runs, nm = baseline.n_runs;
    const i128 co_num = static_cast<i128>(csm.sum_total_bytes) * nm - static_cast<i128>(baseline.sum_total_bytes) * nx;
    if (csm.sum_total_bytes > 0) r.co_share = exact_ratio(co_num, static_cast<i128>(csm.sum_total_bytes) * nm);
    r.negative_overhead_flag = co_num < 0;
    const double exact_co_bytes = static_cast<double>(static_cast<long double>(co_num) / static_cast<long double>(nx * nm));
    r.co_rate_gb = try_rate(exact_co_bytes, denominator_of(csm), csm.basis);

    const TrackingOverhead t = tracking_overhead(csm);
    r.tracking_bytes = t.bytes;
    r.tracking_share = t.share;
    r.tracking_rate_gb = t.rate_gb;
    return r;
}

std::string format_percent(double share) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", share * 100.0);
    return buf;
}

} // namespace trafficledger::analytics
