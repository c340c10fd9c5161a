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

#include "trafficledger/carbon.hpp"
#include "trafficledger/classifier.hpp"
#include "trafficledger/flow.hpp"
#include "trafficledger/json_codec.hpp"
#include "trafficledger/overhead.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trafficledger::report {

enum class ErrorKind { Config, Data, Comparability };

/// A pipeline stage failed. Outputs from earlier invocations are untouched.
class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, ErrorKind kind, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), kind_(kind) {}

    const std::string& stage() const { return stage_; }
    ErrorKind kind() const { return kind_; }

private:
    std::string stage_;
    ErrorKind kind_;
};

struct JourneyConfig {
    std::string name;
    analytics::RateBasis basis = analytics::RateBasis::PerMinute;
    /// Actions per run, per-action journeys only.
    std::uint64_t actions = 1;
    /// Whether this journey's estimates count toward the combined total.
    bool include_in_total = true;
};

struct PipelineConfig {
    std::filesystem::path store;
    std::string csm_platform;
    std::string baseline_platform;
    std::string csm_rules = "x-heuristic";
    std::string baseline_rules = "mastodon-default";
    std::string profile = std::string(carbon::kDefaultProfile);
    std::vector<std::pair<std::string, double>> params;
    std::filesystem::path output_dir;
    std::vector<JourneyConfig> journeys;
};

/// Relative paths in the document resolve against `base_dir`. Throws
/// PipelineError (stage "config").
PipelineConfig parse_pipeline_config(std::string_view yaml_text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& file);

struct RulesetInfo {
    std::string name;
    std::string version;
};

struct Provenance {
    std::string store;
    RulesetInfo csm_rules;
    RulesetInfo baseline_rules;
    carbon::CarbonParams params;
    std::string tool_version;
    int schema_version = 0;
    std::size_t runs_considered = 0;
    /// Earliest run start and latest run end among analysed runs.
    std::optional<Timestamp> first_run_started;
    std::optional<Timestamp> last_run_ended;
};

struct JourneySection {
    JourneyConfig config;
    analytics::RunAggregate csm;
    analytics::RunAggregate baseline;
    analytics::OverheadReport overhead;
    /// Summed over all runs of the journey.
    classify::CategoryBreakdown csm_breakdown;
    classify::CategoryBreakdown baseline_breakdown;
    std::size_t beacons_flagged = 0;
    std::size_t beacon_posts_unrecorded = 0;
    std::optional<carbon::CarbonEstimate> overhead_estimate;
    std::optional<carbon::CarbonEstimate> tracking_estimate;
    /// Why an estimate is absent.
    std::optional<std::string> estimate_note;
};

struct ReportBundle {
    Provenance provenance;
    std::vector<JourneySection> journeys;
    carbon::CarbonEstimate overhead_total;
    carbon::CarbonEstimate tracking_total;
};

/// Classifies, aggregates and estimates. Pure function of its inputs.
ReportBundle build_report(const PipelineConfig& config, const std::vector<RunRecord>& records,
                          const std::string& store_label);

/// Loads the store, builds the bundle, and writes every output file.
ReportBundle run_pipeline(const PipelineConfig& config);

Json to_json(const carbon::CarbonEstimate& e);
Json to_json(const carbon::CarbonParams& p);
Json to_json(const analytics::RunAggregate& a);
Json to_json(const analytics::OverheadReport& r);
Json to_json(const classify::CategoryBreakdown& b);
Json to_json(const ReportBundle& bundle);

std::string render_markdown(const ReportBundle& bundle);
std::string render_overhead_csv(const ReportBundle& bundle);
std::string render_categories_csv(const ReportBundle& bundle);
std::string render_carbon_csv(const ReportBundle& bundle);

/// Output file names written by write_outputs.
inline constexpr const char* kOutputFiles[] = {"report.json", "report.md", "overhead.csv", "categories.csv",
                                               "carbon.csv"};

/// Renders everything first, then moves each file into place by rename.
void write_outputs(const ReportBundle& bundle, const std::filesystem::path& dir);

/// `136750000` -> `"136.75 MB"` (decimal units, two decimals).
std::string format_bytes(double bytes);

} // namespace trafficledger::report
