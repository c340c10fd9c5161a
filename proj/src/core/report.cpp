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

#include "trafficledger/report.hpp"

#include "trafficledger/flow_store.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace trafficledger::report {

namespace {

namespace fs = std::filesystem;
using analytics::RateBasis;

[[noreturn]] void config_error(const std::string& what) { throw PipelineError("config", ErrorKind::Config, what); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string rate_unit(RateBasis b) { return b == RateBasis::PerMinute ? "GB/min" : "GB/action"; }

carbon::CarbonEstimate estimate_for(double theta, RateBasis basis, const carbon::CarbonParams& params) {
    return basis == RateBasis::PerMinute ? carbon::annual_emissions_time_basis(theta, params)
                                         : carbon::annual_emissions_action_basis(theta, params);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string resolve_rules_ref(const fs::path& base, const std::string& ref) {
    std::error_code ec;
    const fs::path candidate = resolve(base, ref);
    if (fs::is_regular_file(candidate, ec)) return candidate.string();
    return ref;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string opt_num(const std::optional<double>& v, const char* f) { return v ? fmt(f, *v) : ""; }

void write_file(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
    out.flush();
    if (!out) throw PipelineError("write", ErrorKind::Data, "cannot write " + p.string());
}

} // namespace

std::string format_bytes(double bytes) {
    const double a = std::fabs(bytes);
    if (a >= 1e9) return fmt("%.2f GB", bytes / 1e9);
    if (a >= 1e6) return fmt("%.2f MB", bytes / 1e6);
    if (a >= 1e3) return fmt("%.2f kB", bytes / 1e3);
    return fmt("%.0f B", bytes);
}

PipelineConfig parse_pipeline_config(std::string_view yaml_text, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        config_error(std::string("malformed pipeline file: ") + e.what());
    }
    if (!root.IsMap()) config_error("pipeline file must be a mapping");
    try {
        for (const auto& kv : root) {
            const std::string key = kv.first.as<std::string>();
            static const char* known[] = {"store",   "csm",        "baseline",   "csm_rules", "baseline_rules",
                                          "profile", "params",     "output_dir", "journeys"};
            if (std::find(std::begin(known), std::end(known), key) == std::end(known))
                config_error("unknown key '" + key + "'");
        }
        PipelineConfig c;
        if (!root["store"]) config_error("missing 'store'");
        c.store = resolve(base_dir, root["store"].as<std::string>());
        if (!root["csm"] || !root["baseline"]) config_error("'csm' and 'baseline' platforms are required");
        c.csm_platform = root["csm"].as<std::string>();
        c.baseline_platform = root["baseline"].as<std::string>();
        if (root["csm_rules"]) c.csm_rules = resolve_rules_ref(base_dir, root["csm_rules"].as<std::string>());
        if (root["baseline_rules"])
            c.baseline_rules = resolve_rules_ref(base_dir, root["baseline_rules"].as<std::string>());
        if (root["profile"]) c.profile = root["profile"].as<std::string>();
        if (const auto params = root["params"]) {
            if (!params.IsMap()) config_error("'params' must be a mapping");
            for (const auto& kv : params) c.params.emplace_back(kv.first.as<std::string>(), kv.second.as<double>());
        }
        c.output_dir = resolve(base_dir, root["output_dir"] ? root["output_dir"].as<std::string>() : "report");
        const auto journeys = root["journeys"];
        if (!journeys || !journeys.IsSequence() || journeys.size() == 0) config_error("'journeys' must be a nonempty list");
        for (const auto& j : journeys) {
            JourneyConfig jc;
            if (j.IsScalar()) {
                jc.name = j.Scalar();
            } else {
                if (!j["name"]) config_error("journey entry without a name");
                jc.name = j["name"].as<std::string>();
                if (j["basis"]) {
                    try {
                        jc.basis = analytics::rate_basis_from_string(j["basis"].as<std::string>());
                    } catch (const std::exception& e) {
                        config_error(e.what());
                    }
                }
                if (j["actions"]) {
                    const long long a = j["actions"].as<long long>();
                    if (a < 1) config_error("journey '" + jc.name + "': actions must be positive");
                    jc.actions = static_cast<std::uint64_t>(a);
                }
                if (j["include_in_total"]) jc.include_in_total = j["include_in_total"].as<bool>();
            }
            c.journeys.push_back(std::move(jc));
        }
        return c;
    } catch (const YAML::Exception& e) {
        config_error(std::string("bad pipeline file: ") + e.what());
    }
}

PipelineConfig load_pipeline_config(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) config_error("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str(), file.parent_path().empty() ? fs::path(".") : file.parent_path());
}

ReportBundle build_report(const PipelineConfig& config, const std::vector<RunRecord>& records,
                          const std::string& store_label) {
    if (records.empty()) throw PipelineError("load", ErrorKind::Data, "no runs found in " + store_label);
    if (config.csm_platform == config.baseline_platform)
        throw PipelineError("analyze", ErrorKind::Comparability,
                            "platform '" + config.csm_platform + "' cannot be its own baseline");

    std::optional<classify::Ruleset> csm_rules, baseline_rules;
    carbon::CarbonParams params;
    try {
        csm_rules = classify::resolve_ruleset(config.csm_rules);
        baseline_rules = classify::resolve_ruleset(config.baseline_rules);
    } catch (const std::exception& e) {
        config_error(e.what());
    }
    try {
        params = carbon::profile(config.profile);
        for (const auto& [k, v] : config.params) params.set(k, v);
        params.validate();
    } catch (const std::exception& e) {
        config_error(e.what());
    }

    ReportBundle bundle;
    auto& prov = bundle.provenance;
    prov.store = store_label;
    prov.csm_rules = {csm_rules->name(), csm_rules->version()};
    prov.baseline_rules = {baseline_rules->name(), baseline_rules->version()};
    prov.params = params;
    prov.tool_version = TRAFFICLEDGER_VERSION;
    prov.schema_version = store::kSchemaVersion;

    std::vector<carbon::CarbonEstimate> overhead_parts, tracking_parts;
    for (const auto& jc : config.journeys) {
        std::vector<analytics::ClassifiedRun> csm_runs, baseline_runs;
        JourneySection section;
        section.config = jc;
        std::vector<HttpFlow> csm_flows;
        try {
            for (const auto& rec : records) {
                if (rec.run.journey_name != jc.name) continue;
                const bool is_csm = rec.run.platform_id == config.csm_platform;
                const bool is_base = rec.run.platform_id == config.baseline_platform;
                if (!is_csm && !is_base) continue;
                std::vector<HttpFlow> flows = rec.flows;
                const auto& rules = is_csm ? *csm_rules : *baseline_rules;
                analytics::ClassifiedRun cr{rec.run, classify::classify_run(rec.run, flows, rules), jc.actions};
                if (is_csm) {
                    section.csm_breakdown += cr.breakdown;
                    csm_flows.insert(csm_flows.end(), std::make_move_iterator(flows.begin()),
                                     std::make_move_iterator(flows.end()));
                    csm_runs.push_back(std::move(cr));
                } else {
                    section.baseline_breakdown += cr.breakdown;
                    baseline_runs.push_back(std::move(cr));
                }
                ++prov.runs_considered;
                if (!prov.first_run_started || rec.run.started_at < *prov.first_run_started)
                    prov.first_run_started = rec.run.started_at;
                if (!prov.last_run_ended || rec.run.ended_at > *prov.last_run_ended)
                    prov.last_run_ended = rec.run.ended_at;
            }
        } catch (const std::exception& e) {
            throw PipelineError("classify", ErrorKind::Data, "journey '" + jc.name + "': " + e.what());
        }
        if (csm_runs.empty())
            throw PipelineError("analyze", ErrorKind::Data,
                                "no runs found for platform '" + config.csm_platform + "', journey '" + jc.name + "'");
        if (baseline_runs.empty())
            throw PipelineError("analyze", ErrorKind::Data,
                                "no runs found for platform '" + config.baseline_platform + "', journey '" + jc.name +
                                    "'");

        for (const auto& f : classify::detect_tracking_beacons(csm_flows, csm_rules->beacons())) {
            if (f.flagged) ++section.beacons_flagged;
            else if (f.note) ++section.beacon_posts_unrecorded;
        }

        try {
            section.csm = analytics::aggregate(csm_runs, jc.basis);
            section.baseline = analytics::aggregate(baseline_runs, jc.basis);
            section.overhead = analytics::corporate_overhead(section.csm, section.baseline);
        } catch (const analytics::ComparabilityError& e) {
            throw PipelineError("analyze", ErrorKind::Comparability, e.what());
        } catch (const std::exception& e) {
            throw PipelineError("analyze", ErrorKind::Data, "journey '" + jc.name + "': " + e.what());
        }

        try {
            const auto& o = section.overhead;
            if (o.negative_overhead_flag) {
                section.estimate_note = "no overhead estimate: baseline exceeds the corporate platform";
            } else if (!o.co_rate_gb) {
                section.estimate_note = "no estimate: zero journey duration";
            } else {
                section.overhead_estimate = estimate_for(*o.co_rate_gb, jc.basis, params);
            }
            if (o.tracking_rate_gb) section.tracking_estimate = estimate_for(*o.tracking_rate_gb, jc.basis, params);
        } catch (const std::exception& e) {
            throw PipelineError("estimate", ErrorKind::Data, "journey '" + jc.name + "': " + e.what());
        }
        if (jc.include_in_total) {
            if (section.overhead_estimate) overhead_parts.push_back(*section.overhead_estimate);
            if (section.tracking_estimate) tracking_parts.push_back(*section.tracking_estimate);
        }
        bundle.journeys.push_back(std::move(section));
    }

    auto combine = [&](const std::vector<carbon::CarbonEstimate>& parts) {
        if (parts.empty()) {
            carbon::CarbonEstimate zero;
            zero.basis = carbon::Basis::Combined;
            zero.params = params;
            return zero;
        }
        return carbon::combine_estimates(parts);
    };
    bundle.overhead_total = combine(overhead_parts);
    bundle.tracking_total = combine(tracking_parts);
    return bundle;
}

ReportBundle run_pipeline(const PipelineConfig& config) {
    std::vector<RunRecord> records;
    std::error_code ec;
    if (!fs::is_directory(config.store, ec))
        throw PipelineError("load", ErrorKind::Data, "store not found: " + config.store.string());
    try {
        records = store::load_runs(config.store);
    } catch (const std::exception& e) {
        throw PipelineError("load", ErrorKind::Data, e.what());
    }
    ReportBundle bundle = build_report(config, records, config.store.string());
    write_outputs(bundle, config.output_dir);
    return bundle;
}

// -- JSON ---------------------------------------------------------------------

Json to_json(const carbon::CarbonParams& p) {
    Json j = {{"profile", p.profile},
              {"kwh_per_gb", p.kwh_per_gb},
              {"grid_intensity_g_per_kwh", p.grid_intensity_g_per_kwh},
              {"daily_active_minutes", p.daily_active_minutes},
              {"daily_actions", p.daily_actions},
              {"days_per_year", p.days_per_year}};
    if (p.core_network_kwh_per_gb) j["core_network_kwh_per_gb"] = *p.core_network_kwh_per_gb;
    if (p.data_center_kwh_per_gb) j["data_center_kwh_per_gb"] = *p.data_center_kwh_per_gb;
    return j;
}

Json to_json(const carbon::CarbonEstimate& e) {
    Json j = {{"basis", carbon::to_string(e.basis)},
              {"theta", e.theta},
              {"gb_per_day", e.gb_per_day},
              {"kwh_per_day", e.kwh_per_day},
              {"g_co2e_per_day", e.g_co2e_per_day},
              {"t_co2e_per_year", e.t_co2e_per_year},
              {"params", to_json(e.params)},
              {"lower_bound_note", e.lower_bound_note}};
    if (e.reference_note) j["reference_note"] = *e.reference_note;
    return j;
}

Json to_json(const classify::CategoryBreakdown& b) {
    Json cats = Json::object();
    for (Category c : kAssignableCategories) {
        cats[std::string(to_string(c))] = {
            {"bytes", b.bytes_in(c)}, {"flows", b.flows_in(c)}, {"share", b.share(c)}};
    }
    return {{"total_bytes", b.total_bytes}, {"total_flows", b.total_flows}, {"categories", cats}};
}

Json to_json(const analytics::RunAggregate& a) {
    Json cats = Json::object();
    for (Category c : kAssignableCategories) {
        const auto i = category_index(c);
        cats[std::string(to_string(c))] = {{"sum_bytes", a.sum_category_bytes[i]}, {"mean_bytes", a.mean_category_bytes[i]}};
    }
    Json j = {{"platform_id", a.platform_id},
              {"journey_name", a.journey_name},
              {"basis", analytics::to_string(a.basis)},
              {"n_runs", a.n_runs},
              {"n_flows", a.n_flows},
              {"sum_total_bytes", a.sum_total_bytes},
              {"mean_total_bytes", a.mean_total_bytes},
              {"std_total_bytes", a.std_total_bytes},
              {"sum_duration_ms", a.sum_duration.count()},
              {"mean_duration_minutes", a.mean_duration_minutes},
              {"sum_actions", a.sum_actions},
              {"mean_actions", a.mean_actions},
              {"categories", cats}};
    j["mean_rate_gb"] = a.mean_rate_gb ? Json(*a.mean_rate_gb) : Json();
    return j;
}

Json to_json(const analytics::OverheadReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(); };
    return {{"journey_name", r.journey_name},
            {"csm_platform", r.csm_platform},
            {"baseline_platform", r.baseline_platform},
            {"basis", analytics::to_string(r.basis)},
            {"csm_runs", r.csm_runs},
            {"baseline_runs", r.baseline_runs},
            {"csm_mean_duration_minutes", r.csm_mean_duration_minutes},
            {"baseline_mean_duration_minutes", r.baseline_mean_duration_minutes},
            {"res_x", r.res_x},
            {"res_m", r.res_m},
            {"res_co", r.res_co},
            {"co_share", opt(r.co_share)},
            {"co_rate_gb", opt(r.co_rate_gb)},
            {"tracking_bytes", r.tracking_bytes},
            {"tracking_share", r.tracking_share},
            {"tracking_rate_gb", opt(r.tracking_rate_gb)},
            {"negative_overhead_flag", r.negative_overhead_flag}};
}

Json to_json(const ReportBundle& b) {
    const auto& p = b.provenance;
    Json prov = {{"store", p.store},
                 {"csm_rules", {{"name", p.csm_rules.name}, {"version", p.csm_rules.version}}},
                 {"baseline_rules", {{"name", p.baseline_rules.name}, {"version", p.baseline_rules.version}}},
                 {"params", to_json(p.params)},
                 {"tool_version", p.tool_version},
                 {"schema_version", p.schema_version},
                 {"runs_considered", p.runs_considered}};
    prov["first_run_started"] = p.first_run_started ? Json(format_timestamp(*p.first_run_started)) : Json();
    prov["last_run_ended"] = p.last_run_ended ? Json(format_timestamp(*p.last_run_ended)) : Json();

    Json journeys = Json::array();
    for (const auto& s : b.journeys) {
        Json j = {{"name", s.config.name},
                  {"basis", analytics::to_string(s.config.basis)},
                  {"actions_per_run", s.config.actions},
                  {"include_in_total", s.config.include_in_total},
                  {"overhead", to_json(s.overhead)},
                  {"csm", to_json(s.csm)},
                  {"baseline", to_json(s.baseline)},
                  {"csm_breakdown", to_json(s.csm_breakdown)},
                  {"baseline_breakdown", to_json(s.baseline_breakdown)},
                  {"beacons_flagged", s.beacons_flagged},
                  {"beacon_posts_unrecorded", s.beacon_posts_unrecorded}};
        j["overhead_estimate"] = s.overhead_estimate ? to_json(*s.overhead_estimate) : Json();
        j["tracking_estimate"] = s.tracking_estimate ? to_json(*s.tracking_estimate) : Json();
        if (s.estimate_note) j["estimate_note"] = *s.estimate_note;
        journeys.push_back(std::move(j));
    }
    return {{"provenance", prov},
            {"journeys", journeys},
            {"overhead_total", to_json(b.overhead_total)},
            {"tracking_total", to_json(b.tracking_total)}};
}

// -- CSV ----------------------------------------------------------------------

std::string render_overhead_csv(const ReportBundle& b) {
    std::string out =
        "journey,basis,csm_platform,baseline_platform,csm_runs,baseline_runs,csm_mean_duration_minutes,"
        "baseline_mean_duration_minutes,res_x_bytes,res_m_bytes,res_co_bytes,co_share,co_rate_gb,tracking_bytes,"
        "tracking_share,tracking_rate_gb,negative_overhead\n";
    for (const auto& s : b.journeys) {
        const auto& o = s.overhead;
        out += csv_field(o.journey_name) + "," + std::string(analytics::to_string(o.basis)) + "," +
               csv_field(o.csm_platform) + "," + csv_field(o.baseline_platform) + "," + std::to_string(o.csm_runs) +
               "," + std::to_string(o.baseline_runs) + "," + fmt("%.6f", o.csm_mean_duration_minutes) + "," +
               fmt("%.6f", o.baseline_mean_duration_minutes) + "," + std::to_string(o.res_x) + "," +
               std::to_string(o.res_m) + "," + std::to_string(o.res_co) + "," + opt_num(o.co_share, "%.6f") + "," +
               opt_num(o.co_rate_gb, "%.9f") + "," + std::to_string(o.tracking_bytes) + "," +
               fmt("%.6f", o.tracking_share) + "," + opt_num(o.tracking_rate_gb, "%.9f") + "," +
               (o.negative_overhead_flag ? "true" : "false") + "\n";
    }
    return out;
}

std::string render_categories_csv(const ReportBundle& b) {
    std::string out = "journey,platform,category,mean_bytes,sum_bytes,flows,share\n";
    for (const auto& s : b.journeys) {
        for (const auto* part : {&s.csm, &s.baseline}) {
            const auto& bd = part == &s.csm ? s.csm_breakdown : s.baseline_breakdown;
            for (Category c : kAssignableCategories) {
                const auto i = category_index(c);
                out += csv_field(s.config.name) + "," + csv_field(part->platform_id) + "," +
                       std::string(to_string(c)) + "," + fmt("%.3f", part->mean_category_bytes[i]) + "," +
                       std::to_string(part->sum_category_bytes[i]) + "," + std::to_string(bd.flows_in(c)) + "," +
                       fmt("%.6f", bd.share(c)) + "\n";
            }
        }
    }
    return out;
}

std::string render_carbon_csv(const ReportBundle& b) {
    std::string out = "journey,quantity,basis,theta,gb_per_day,kwh_per_day,g_co2e_per_day,t_co2e_per_year,note\n";
    auto row = [&](const std::string& journey, const char* quantity, const carbon::CarbonEstimate& e) {
        out += csv_field(journey) + "," + quantity + "," + std::string(carbon::to_string(e.basis)) + "," +
               fmt("%.9f", e.theta) + "," + fmt("%.6f", e.gb_per_day) + "," + fmt("%.6f", e.kwh_per_day) + "," +
               fmt("%.3f", e.g_co2e_per_day) + "," + fmt("%.6f", e.t_co2e_per_year) + "," +
               csv_field(e.reference_note.value_or(e.lower_bound_note)) + "\n";
    };
    for (const auto& s : b.journeys) {
        if (s.overhead_estimate) row(s.config.name, "corporate_overhead", *s.overhead_estimate);
        if (s.tracking_estimate) row(s.config.name, "tracking_overhead", *s.tracking_estimate);
    }
    row("(total)", "corporate_overhead", b.overhead_total);
    row("(total)", "tracking_overhead", b.tracking_total);
    return out;
}

// -- Markdown -----------------------------------------------------------------

std::string render_markdown(const ReportBundle& b) {
    std::ostringstream md;
    const auto& p = b.provenance;
    md << "# Traffic overhead report\n\n";
    md << "Corporate platform `" << (b.journeys.empty() ? "" : b.journeys.front().overhead.csm_platform)
       << "` against sufficiency baseline `" << (b.journeys.empty() ? "" : b.journeys.front().overhead.baseline_platform)
       << "`.\n\n";

    md << "## Corporate overhead\n\n";
    md << "| Journey | Basis | Runs (CSM/baseline) | Mean duration (min) | res_X | res_M | res_CO | CO share | CO rate "
          "| Tracking | Tracking share | Tracking rate |\n";
    md << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : b.journeys) {
        const auto& o = s.overhead;
        const std::string unit = rate_unit(o.basis);
        md << "| " << o.journey_name << " | " << analytics::to_string(o.basis) << " | " << o.csm_runs << "/"
           << o.baseline_runs << " | " << fmt("%.2f", o.csm_mean_duration_minutes) << "/"
           << fmt("%.2f", o.baseline_mean_duration_minutes) << " | " << format_bytes(double(o.res_x)) << " | "
           << format_bytes(double(o.res_m)) << " | " << format_bytes(double(o.res_co)) << " | "
           << (o.co_share ? analytics::format_percent(*o.co_share) : "n/a") << " | "
           << (o.co_rate_gb ? fmt("%.6f ", *o.co_rate_gb) + unit : "n/a") << " | "
           << format_bytes(double(o.tracking_bytes)) << " | " << analytics::format_percent(o.tracking_share) << " | "
           << (o.tracking_rate_gb ? fmt("%.6f ", *o.tracking_rate_gb) + unit : "n/a") << " |\n";
    }
    md << "\n";
    for (const auto& s : b.journeys) {
        if (s.overhead.negative_overhead_flag)
            md << "- **Negative overhead** in `" << s.config.name
               << "`: the baseline carried more traffic than the corporate platform.\n";
        if (s.beacons_flagged || s.beacon_posts_unrecorded)
            md << "- `" << s.config.name << "`: " << s.beacons_flagged << " tracking beacon(s) flagged"
               << (s.beacon_posts_unrecorded ? ", " + std::to_string(s.beacon_posts_unrecorded) +
                                                   " POST(s) without recorded bodies"
                                             : std::string())
               << ".\n";
    }
    md << "Exact byte values: see `overhead.csv` and `report.json`.\n\n";

    md << "## Category breakdown\n\n";
    md << "| Journey | Platform | CoreNavigation | UserContent | SurveillanceTracking | Other | Total |\n";
    md << "|---|---|---|---|---|---|---|\n";
    for (const auto& s : b.journeys) {
        for (const auto* part : {&s.csm, &s.baseline}) {
            const auto& bd = part == &s.csm ? s.csm_breakdown : s.baseline_breakdown;
            md << "| " << s.config.name << " | " << part->platform_id;
            for (Category c : kAssignableCategories) {
                md << " | " << format_bytes(part->mean_category_bytes[category_index(c)]) << " ("
                   << analytics::format_percent(bd.share(c)) << ")";
            }
            md << " | " << format_bytes(part->mean_total_bytes) << " |\n";
        }
    }
    md << "\nValues are per-run means; shares are of total bytes across all runs.\n\n";

    md << "## Estimated annual emissions\n\n";
    md << "| Journey | Quantity | Basis | Rate | GB/day | kWh/day | gCO2e/day | CO2e/year |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    std::vector<std::string> notes;
    auto row = [&](const std::string& journey, const char* quantity, const carbon::CarbonEstimate& e) {
        md << "| " << journey << " | " << quantity << " | " << carbon::to_string(e.basis) << " | "
           << (e.basis == carbon::Basis::Combined ? std::string("-") : fmt("%.6f", e.theta)) << " | "
           << fmt("%.3f", e.gb_per_day) << " | " << fmt("%.3f", e.kwh_per_day) << " | "
           << fmt("%.1f", e.g_co2e_per_day) << " | " << carbon::format_tonnes(e.t_co2e_per_year) << " |\n";
        if (e.reference_note) notes.push_back(journey + ", " + quantity + ": " + *e.reference_note);
    };
    for (const auto& s : b.journeys) {
        if (s.overhead_estimate) row(s.config.name, "corporate overhead", *s.overhead_estimate);
        if (s.tracking_estimate) row(s.config.name, "tracking overhead", *s.tracking_estimate);
        if (s.estimate_note) notes.push_back(s.config.name + ": " + *s.estimate_note);
    }
    row("total (included journeys)", "corporate overhead", b.overhead_total);
    row("total (included journeys)", "tracking overhead", b.tracking_total);
    md << "\nAll figures are a " << carbon::kLowerBoundNote << ".\n";
    std::vector<std::string> excluded;
    for (const auto& s : b.journeys)
        if (!s.config.include_in_total) excluded.push_back(s.config.name);
    if (!excluded.empty()) {
        md << "Excluded from totals:";
        for (const auto& n : excluded) md << " `" << n << "`";
        md << ".\n";
    }
    if (!notes.empty()) {
        md << "\nNotes:\n\n";
        for (const auto& n : notes) md << "- " << n << "\n";
    }

    md << "\n## Provenance\n\n";
    md << "- store: `" << p.store << "` (schema " << p.schema_version << ", " << p.runs_considered
       << " runs analysed)\n";
    if (p.first_run_started && p.last_run_ended)
        md << "- runs span " << format_timestamp(*p.first_run_started) << " to " << format_timestamp(*p.last_run_ended)
           << "\n";
    md << "- rules: `" << p.csm_rules.name << "` " << p.csm_rules.version << ", `" << p.baseline_rules.name << "` "
       << p.baseline_rules.version << "\n";
    md << "- parameters: `" << p.params.profile << "` (" << p.params.kwh_per_gb << " kWh/GB, "
       << p.params.grid_intensity_g_per_kwh << " gCO2e/kWh, " << p.params.daily_active_minutes
       << " active minutes/day, " << p.params.daily_actions << " actions/day, " << p.params.days_per_year
       << " days/year)\n";
    md << "- trafficledger " << p.tool_version << "\n";
    return md.str();
}

void write_outputs(const ReportBundle& bundle, const fs::path& dir) {
    std::map<std::string, std::string> files;
    try {
        files["report.json"] = to_json(bundle).dump(2) + "\n";
        files["report.md"] = render_markdown(bundle);
        files["overhead.csv"] = render_overhead_csv(bundle);
        files["categories.csv"] = render_categories_csv(bundle);
        files["carbon.csv"] = render_carbon_csv(bundle);
    } catch (const std::exception& e) {
        throw PipelineError("render", ErrorKind::Data, e.what());
    }

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw PipelineError("write", ErrorKind::Data, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path staging = dir / (".staging-" + random_id());
    fs::create_directories(staging, ec);
    if (ec) throw PipelineError("write", ErrorKind::Data, "cannot create " + staging.string() + ": " + ec.message());
    try {
        for (const auto& [name, data] : files) write_file(staging / name, data);
        for (const auto& [name, data] : files) fs::rename(staging / name, dir / name);
    } catch (const std::exception& e) {
        fs::remove_all(staging, ec);
        throw PipelineError("write", ErrorKind::Data, e.what());
    }
    fs::remove_all(staging, ec);
}

} // namespace trafficledger::report
