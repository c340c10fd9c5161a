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

#include "trafficledger/carbon.hpp"

#include "trafficledger/embedded_data.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>

namespace trafficledger::carbon {

namespace {

constexpr ReferenceFigure kReferences[] = {
    {Basis::PerMinute, 0.001608, 123465.0, "corporate overhead, feed scrolling (account feed)"},
    {Basis::PerMinute, 0.019156, 1.471e6, "corporate overhead, feed scrolling (main feed)"},
    {Basis::PerMinute, 0.000193, 14877.0, "user tracking overhead, feed scrolling"},
    {Basis::PerAction, 0.006612, 414.222, "corporate overhead, posting"},
    {Basis::PerAction, 0.000145, 9.110, "user tracking overhead, posting"},
};

bool near(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b)); }

void attach_reference(CarbonEstimate& e) {
    if (e.params.profile != kDefaultProfile) return;
    for (const auto& ref : kReferences) {
        if (ref.basis != e.basis || !near(ref.theta, e.theta)) continue;
        const double ratio = e.t_co2e_per_year / ref.published_t_co2e_per_year;
        char buf[320];
        if (std::fabs(ratio - 1.0) <= 0.005) {
            std::snprintf(buf, sizeof buf, "published figure for this input (%s): %s; formula result differs by %+.2f%%",
                          std::string(ref.label).c_str(), format_tonnes(ref.published_t_co2e_per_year).c_str(),
                          (ratio - 1.0) * 100.0);
        } else {
            std::snprintf(buf, sizeof buf,
                          "published figure for this input (%s) is %s, but the stated formula yields %s "
                          "(factor %.1f); the formula result is reported",
                          std::string(ref.label).c_str(), format_tonnes(ref.published_t_co2e_per_year).c_str(),
                          format_tonnes(e.t_co2e_per_year).c_str(), ratio);
        }
        e.reference_note = buf;
        return;
    }
}

CarbonEstimate chain(double theta, double scale, Basis basis, const CarbonParams& params) {
    params.validate();
    if (!(theta >= 0)) throw ParamsError("rate must be nonnegative");
    CarbonEstimate e;
    e.basis = basis;
    e.theta = theta;
    e.params = params;
    e.gb_per_day = theta * scale;
    e.kwh_per_day = e.gb_per_day * params.kwh_per_gb;
    e.g_co2e_per_day = e.kwh_per_day * params.grid_intensity_g_per_kwh;
    e.t_co2e_per_year = e.g_co2e_per_day * params.days_per_year / 1e6;
    attach_reference(e);
    return e;
}

YAML::Node profiles_root() {
    auto text = embedded::find("profiles/carbon-profiles.yaml");
    if (!text) throw ParamsError("profile data missing from build");
    return YAML::Load(std::string(*text))["profiles"];
}

} // namespace

std::string_view to_string(Basis b) {
    switch (b) {
    case Basis::PerMinute: return "per-minute";
    case Basis::PerAction: return "per-action";
    case Basis::Combined: return "combined";
    }
    return "combined";
}

void CarbonParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0) || !std::isfinite(v)) throw ParamsError(std::string(name) + " must be strictly positive");
    };
    positive(kwh_per_gb, "kwh_per_gb");
    positive(grid_intensity_g_per_kwh, "grid_intensity_g_per_kwh");
    positive(daily_active_minutes, "daily_active_minutes");
    positive(daily_actions, "daily_actions");
    positive(days_per_year, "days_per_year");
    if (core_network_kwh_per_gb || data_center_kwh_per_gb) {
        const double parts = core_network_kwh_per_gb.value_or(0) + data_center_kwh_per_gb.value_or(0);
        if (std::fabs(parts - kwh_per_gb) > 1e-12 * kwh_per_gb)
            throw ParamsError("kWh/GB components do not sum to kwh_per_gb");
    }
}

void CarbonParams::set(std::string_view key, double value) {
    if (key == "kwh_per_gb") {
        kwh_per_gb = value;
        core_network_kwh_per_gb.reset();
        data_center_kwh_per_gb.reset();
    } else if (key == "core_network_kwh_per_gb") {
        core_network_kwh_per_gb = value;
        kwh_per_gb = value + data_center_kwh_per_gb.value_or(0);
    } else if (key == "data_center_kwh_per_gb") {
        data_center_kwh_per_gb = value;
        kwh_per_gb = core_network_kwh_per_gb.value_or(0) + value;
    } else if (key == "grid_intensity_g_per_kwh" || key == "grid_intensity") {
        grid_intensity_g_per_kwh = value;
    } else if (key == "daily_active_minutes") {
        daily_active_minutes = value;
    } else if (key == "daily_actions") {
        daily_actions = value;
    } else if (key == "days_per_year") {
        days_per_year = value;
    } else {
        throw ParamsError("unknown parameter '" + std::string(key) + "'");
    }
    profile += "+" + std::string(key);
}

CarbonParams profile(std::string_view name) {
    const YAML::Node node = profiles_root()[std::string(name)];
    if (!node) throw ParamsError("unknown profile '" + std::string(name) + "'");
    try {
        CarbonParams p;
        p.profile = std::string(name);
        p.kwh_per_gb = node["kwh_per_gb"].as<double>();
        if (node["core_network_kwh_per_gb"]) p.core_network_kwh_per_gb = node["core_network_kwh_per_gb"].as<double>();
        if (node["data_center_kwh_per_gb"]) p.data_center_kwh_per_gb = node["data_center_kwh_per_gb"].as<double>();
        p.grid_intensity_g_per_kwh = node["grid_intensity_g_per_kwh"].as<double>();
        p.daily_active_minutes = node["daily_active_minutes"].as<double>();
        p.daily_actions = node["daily_actions"].as<double>();
        p.days_per_year = node["days_per_year"].as<double>();
        p.validate();
        return p;
    } catch (const YAML::Exception& e) {
        throw ParamsError("malformed profile '" + std::string(name) + "': " + e.what());
    }
}

std::vector<std::string> profile_names() {
    std::vector<std::string> out;
    for (const auto& kv : profiles_root()) out.push_back(kv.first.as<std::string>());
    return out;
}

CarbonEstimate annual_emissions_time_basis(double theta, const CarbonParams& params) {
    return chain(theta, params.daily_active_minutes, Basis::PerMinute, params);
}

CarbonEstimate annual_emissions_action_basis(double theta, const CarbonParams& params) {
    return chain(theta, params.daily_actions, Basis::PerAction, params);
}

CarbonEstimate combine_estimates(const std::vector<CarbonEstimate>& estimates) {
    if (estimates.empty()) {
        CarbonEstimate zero;
        zero.basis = Basis::Combined;
        zero.params = profile(kDefaultProfile);
        return zero;
    }
    if (estimates.size() == 1) return estimates.front();

    CarbonEstimate total;
    total.params = estimates.front().params;
    total.basis = estimates.front().basis;
    for (const auto& e : estimates) {
        if (!(e.params == total.params))
            throw ParamsMismatch("cannot combine estimates computed under different parameters ('" +
                                 total.params.profile + "' vs '" + e.params.profile + "')");
        if (e.basis != total.basis) total.basis = Basis::Combined;
        total.gb_per_day += e.gb_per_day;
        total.kwh_per_day += e.kwh_per_day;
        total.g_co2e_per_day += e.g_co2e_per_day;
        total.t_co2e_per_year += e.t_co2e_per_year;
    }
    total.theta = 0;
    if (total.basis != Basis::Combined) {
        for (const auto& e : estimates) total.theta += e.theta;
    }
    return total;
}

CarbonEstimate from_annual_tonnes(double t, Basis basis, const CarbonParams& params) {
    params.validate();
    CarbonEstimate e;
    e.basis = basis;
    e.params = params;
    e.t_co2e_per_year = t;
    e.g_co2e_per_day = t * 1e6 / params.days_per_year;
    e.kwh_per_day = e.g_co2e_per_day / params.grid_intensity_g_per_kwh;
    e.gb_per_day = e.kwh_per_day / params.kwh_per_gb;
    if (basis == Basis::PerMinute) e.theta = e.gb_per_day / params.daily_active_minutes;
    if (basis == Basis::PerAction) e.theta = e.gb_per_day / params.daily_actions;
    return e;
}

std::span<const ReferenceFigure> reference_figures() { return kReferences; }

std::string format_tonnes(double t) {
    char buf[64];
    const double a = std::fabs(t);
    if (a >= 1e6) {
        std::snprintf(buf, sizeof buf, "%.3f MtCO2e", t / 1e6);
    } else if (a >= 1e3) {
        std::snprintf(buf, sizeof buf, "%.3f ktCO2e", t / 1e3);
    } else {
        std::snprintf(buf, sizeof buf, "%.3f tCO2e", t);
    }
    return buf;
}

} // namespace trafficledger::carbon
