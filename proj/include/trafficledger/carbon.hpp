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

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trafficledger::carbon {

class ParamsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParamsMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDefaultProfile = "paper-2025-defaults";
inline constexpr std::string_view kLowerBoundNote =
    "lower bound, transmission only: excludes computation, storage, analysis and resale of the same data";

enum class Basis { PerMinute, PerAction, Combined };

std::string_view to_string(Basis b);

struct CarbonParams {
    std::string profile;
    /// kWh per decimal GB.
    double kwh_per_gb = 0;
    std::optional<double> core_network_kwh_per_gb;
    std::optional<double> data_center_kwh_per_gb;
    double grid_intensity_g_per_kwh = 0;
    double daily_active_minutes = 0;
    double daily_actions = 0;
    double days_per_year = 365;

    /// Throws ParamsError unless every coefficient is strictly positive and
    /// a given decomposition sums to kwh_per_gb.
    void validate() const;

    /// Applies `key=value` for any field name above. Clears the profile's
    /// decomposition when kwh_per_gb is overridden alone.
    void set(std::string_view key, double value);

    bool operator==(const CarbonParams&) const = default;
};

/// Loads a named profile from the shipped profile file.
CarbonParams profile(std::string_view name);
std::vector<std::string> profile_names();

struct CarbonEstimate {
    Basis basis = Basis::PerMinute;
    /// GB per minute or GB per action. Zero for combined estimates.
    double theta = 0;
    double gb_per_day = 0;
    double kwh_per_day = 0;
    double g_co2e_per_day = 0;
    double t_co2e_per_year = 0;
    CarbonParams params;
    std::string lower_bound_note = std::string(kLowerBoundNote);
    /// Set when the input matches a published reference computation.
    std::optional<std::string> reference_note;
};

/// gb/day = theta * daily_active_minutes, then * kWh/GB * g/kWh * days / 1e6.
CarbonEstimate annual_emissions_time_basis(double theta_gb_per_minute, const CarbonParams& params);
/// Same chain with daily_actions as the scale.
CarbonEstimate annual_emissions_action_basis(double theta_gb_per_action, const CarbonParams& params);

/// Stage-wise sum. All inputs must share identical params (ParamsMismatch
/// otherwise). An empty list yields a zero estimate under the default profile.
CarbonEstimate combine_estimates(const std::vector<CarbonEstimate>& estimates);

/// Estimate whose stages are back-derived from an annual tonnage, for
/// combining externally published figures with computed ones.
CarbonEstimate from_annual_tonnes(double t_co2e_per_year, Basis basis, const CarbonParams& params);

/// Emission figures published for specific inputs under the default profile.
struct ReferenceFigure {
    Basis basis;
    double theta;
    double published_t_co2e_per_year;
    std::string_view label;
};

std::span<const ReferenceFigure> reference_figures();

/// 414.222 -> "414.222 tCO2e", 123465 -> "123.465 ktCO2e", 1.471e6 -> "1.471 MtCO2e".
std::string format_tonnes(double t_co2e);

} // namespace trafficledger::carbon
