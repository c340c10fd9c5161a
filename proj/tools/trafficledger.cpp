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

// trafficledger command-line interface.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 comparability error.

#include "trafficledger/carbon.hpp"
#include "trafficledger/classifier.hpp"
#include "trafficledger/flow_store.hpp"
#include "trafficledger/har.hpp"
#include "trafficledger/journey/journey_engine.hpp"
#include "trafficledger/proxy/capture_proxy.hpp"
#include "trafficledger/report.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace tl = trafficledger;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitComparability = 4;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::atomic<bool> g_interrupted{false};
extern "C" void on_signal(int) { g_interrupted = true; }

fs::path store_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("TRAFFICLEDGER_STORE"); env && *env) return env;
    throw ConfigError("no store given: pass --store or set TRAFFICLEDGER_STORE");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::pair<std::string, double> parse_param(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
    try {
        std::size_t used = 0;
        const double v = std::stod(kv.substr(eq + 1), &used);
        if (used != kv.size() - eq - 1) throw std::invalid_argument(kv);
        return {kv.substr(0, eq), v};
    } catch (const std::exception&) {
        throw ConfigError("--param value is not a number: '" + kv + "'");
    }
}

tl::classify::Ruleset rules_or_config_error(const std::string& ref) {
    try {
        return tl::classify::resolve_ruleset(ref);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

void print_version() {
    std::cout << "trafficledger " << TRAFFICLEDGER_VERSION << "\n";
    std::cout << "store schema " << tl::store::kSchemaVersion << "\n";
    for (const auto& name : tl::classify::builtin_ruleset_names()) {
        const auto rs = tl::classify::builtin_ruleset(name);
        std::cout << "ruleset " << rs.name() << " " << rs.version() << "\n";
    }
    std::cout << "default profile " << tl::carbon::kDefaultProfile << "\n";
}

// -- capture ------------------------------------------------------------------

struct CaptureArgs {
    std::string listen = "127.0.0.1:8080";
    std::string ca_dir;
    std::string store;
    std::string platform;
    std::string journey;
    std::string duration;
    bool record_bodies = false;
    bool keep_cookie_values = false;
    bool insecure_upstream = false;
    std::string upstream_ca;
    std::vector<std::string> intercept;
};

tl::net::ProxyConfig proxy_config(const CaptureArgs& a) {
    tl::net::ProxyConfig cfg;
    cfg.listen_address = a.listen;
    cfg.ca_dir = a.ca_dir.empty() ? fs::path(".trafficledger-ca") : fs::path(a.ca_dir);
    cfg.record_bodies = a.record_bodies;
    cfg.cookies.keep_values = a.keep_cookie_values;
    cfg.verify_upstream = !a.insecure_upstream;
    if (!a.upstream_ca.empty()) cfg.upstream_ca_file = a.upstream_ca;
    cfg.intercept_hosts = a.intercept;
    return cfg;
}

int cmd_capture(const CaptureArgs& a) {
    if (a.platform.empty() || a.journey.empty()) throw ConfigError("capture needs --platform and --journey");
    std::optional<tl::Millis> limit;
    if (!a.duration.empty()) {
        try {
            limit = tl::journey::parse_duration(a.duration);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    tl::store::FlowStore store(store_dir(a.store));
    auto session = tl::net::start_proxy(proxy_config(a), &store);
    std::cerr << "listening on " << session->endpoint() << "; root certificate "
              << (fs::path(proxy_config(a).ca_dir) / tl::net::CertificateAuthority::kCertFile).string() << "\n"
              << "press Ctrl-C to finish the capture\n";

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const auto start = std::chrono::steady_clock::now();
    while (!g_interrupted && (!limit || std::chrono::steady_clock::now() - start < *limit))
        std::this_thread::sleep_for(std::chrono::milliseconds(100));

    const auto summary = session->stop();
    const auto flows = session->flows();
    tl::JourneyRun run;
    run.run_id = session->session_id();
    run.journey_name = a.journey;
    run.platform_id = a.platform;
    run.started_at = session->started_at();
    run.ended_at = std::chrono::time_point_cast<tl::Millis>(std::chrono::system_clock::now());
    for (const auto& f : flows) run.flow_ids.push_back(f.flow_id);
    tl::bracket_run(run, flows);
    const auto receipt = store.commit_run(run);
    std::cout << "run " << receipt.run_id << ": " << receipt.flow_count << " flows, " << receipt.total_bytes
              << " bytes";
    if (summary.truncated_flows) std::cout << " (" << summary.truncated_flows << " truncated)";
    std::cout << "\n";
    return kExitOk;
}

// -- journey run --------------------------------------------------------------

struct JourneyArgs {
    CaptureArgs proxy;
    std::string spec;
    std::string driver = "http://127.0.0.1:4444";
    int runs = 0;
    std::string browser;
    bool accept_insecure_certs = false;
    bool no_proxy = false;
};

int cmd_journey_run(const JourneyArgs& a) {
    tl::journey::JourneySpec spec;
    try {
        spec = tl::journey::load_journey_spec(a.spec);
        if (a.runs > 0) spec.repeat = a.runs;
        spec.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    tl::store::FlowStore store(store_dir(a.proxy.store));
    std::unique_ptr<tl::net::CaptureSession> session;
    if (!a.no_proxy) session = tl::net::start_proxy(proxy_config(a.proxy), &store);

    tl::journey::EngineOptions opts;
    opts.driver_endpoint = a.driver;
    if (!a.browser.empty()) opts.session.browser_name = a.browser;
    opts.session.accept_insecure_certs = a.accept_insecure_certs;
    opts.on_run = [&](const tl::journey::JourneyResult& r, int index) {
        std::uint64_t bytes = 0;
        for (const auto& f : r.flows) bytes += f.total_bytes();
        std::cout << "run " << index + 1 << "/" << spec.repeat << " " << r.run.run_id << ": " << r.flows.size()
                  << " flows, " << bytes << " bytes, " << r.run.duration().count() / 1000.0 << " s"
                  << (r.run.complete ? "" : " (incomplete)") << "\n";
    };
    tl::journey::RealPacer pacer;
    try {
        tl::journey::run_journey(spec, opts, session.get(), &store, pacer);
    } catch (...) {
        if (session) session->stop();
        throw;
    }
    if (session) session->stop();
    return kExitOk;
}

// -- ingest -------------------------------------------------------------------

int cmd_ingest(const std::vector<std::string>& files, const std::string& store_flag, const std::string& platform,
               const std::string& journey, bool drop_bodies) {
    tl::store::FlowStore store(store_dir(store_flag));
    for (const auto& file : files) {
        tl::har::IngestOptions opts;
        opts.platform_id = platform;
        opts.journey_name = journey;
        opts.keep_request_bodies = !drop_bodies;
        tl::RunRecord rec;
        try {
            rec = tl::har::parse_har(read_file(file), opts);
        } catch (const std::exception& e) {
            throw DataError(file + ": " + e.what());
        }
        const auto receipt = store.append_run(rec.run, rec.flows);
        std::cout << file << ": run " << receipt.run_id << ", " << receipt.flow_count << " flows, "
                  << receipt.total_bytes << " bytes\n";
    }
    return kExitOk;
}

// -- classify -----------------------------------------------------------------

int cmd_classify(const std::string& store_flag, const std::string& rules_ref, const std::string& platform,
                 const std::string& journey, const std::string& format) {
    const auto rules = rules_or_config_error(rules_ref);
    tl::store::RunFilter filter;
    if (!platform.empty()) filter.platform_id = platform;
    if (!journey.empty()) filter.journey_name = journey;
    const auto records = tl::store::load_runs(store_dir(store_flag), filter);
    if (records.empty()) throw DataError("no runs found");

    tl::Json out = tl::Json::array();
    for (const auto& rec : records) {
        auto flows = rec.flows;
        const auto bd = tl::classify::classify_run(rec.run, flows, rules);
        tl::Json j = {{"run_id", rec.run.run_id},
                      {"platform_id", rec.run.platform_id},
                      {"journey_name", rec.run.journey_name},
                      {"breakdown", tl::report::to_json(bd)}};
        tl::Json beacons = tl::Json::array();
        for (const auto& f : tl::classify::detect_tracking_beacons(flows, rules.beacons())) {
            tl::Json b = {{"flow_id", f.flow_id}, {"flagged", f.flagged}, {"evidence", f.evidence}};
            if (f.note) b["note"] = *f.note;
            beacons.push_back(std::move(b));
        }
        j["beacons"] = std::move(beacons);
        if (format == "flows") {
            tl::Json fl = tl::Json::array();
            for (const auto& f : flows) {
                const auto c = tl::classify::classify_flow(f, rules);
                fl.push_back({{"flow_id", f.flow_id},
                              {"url", f.url.to_string()},
                              {"category", tl::to_string(c.category)},
                              {"rule_id", c.rule_id ? tl::Json(*c.rule_id) : tl::Json()},
                              {"bytes", f.total_bytes()}});
            }
            j["flows"] = std::move(fl);
        }
        out.push_back(std::move(j));
    }
    if (format == "table") {
        std::printf("%-34s %-10s %-20s %14s %14s %14s %14s %14s\n", "run", "platform", "journey", "total",
                    "core", "content", "tracking", "other");
        for (const auto& j : out) {
            const auto& bd = j["breakdown"];
            const auto& c = bd["categories"];
            std::printf("%-34s %-10s %-20s %14llu %14llu %14llu %14llu %14llu\n", j["run_id"].get<std::string>().c_str(),
                        j["platform_id"].get<std::string>().c_str(), j["journey_name"].get<std::string>().c_str(),
                        bd["total_bytes"].get<unsigned long long>(),
                        c["CoreNavigation"]["bytes"].get<unsigned long long>(),
                        c["UserContent"]["bytes"].get<unsigned long long>(),
                        c["SurveillanceTracking"]["bytes"].get<unsigned long long>(),
                        c["Other"]["bytes"].get<unsigned long long>());
        }
    } else {
        std::cout << out.dump(2) << "\n";
    }
    return kExitOk;
}

// -- analyze / estimate / report ----------------------------------------------

struct AnalyzeArgs {
    std::string store;
    std::string csm;
    std::string baseline;
    std::string journey;
    std::string basis = "time";
    std::uint64_t actions = 1;
    std::string csm_rules = "x-heuristic";
    std::string baseline_rules = "mastodon-default";
    std::string profile = std::string(tl::carbon::kDefaultProfile);
    std::string format = "json";
};

int cmd_analyze(const AnalyzeArgs& a) {
    tl::report::PipelineConfig cfg;
    cfg.store = store_dir(a.store);
    cfg.csm_platform = a.csm;
    cfg.baseline_platform = a.baseline;
    cfg.csm_rules = a.csm_rules;
    cfg.baseline_rules = a.baseline_rules;
    cfg.profile = a.profile;
    tl::report::JourneyConfig jc;
    jc.name = a.journey;
    try {
        jc.basis = tl::analytics::rate_basis_from_string(a.basis);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    jc.actions = a.actions;
    cfg.journeys.push_back(jc);
    std::vector<tl::RunRecord> records;
    try {
        records = tl::store::load_runs(cfg.store);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    const auto bundle = tl::report::build_report(cfg, records, cfg.store.string());
    if (a.format == "markdown") {
        std::cout << tl::report::render_markdown(bundle);
    } else if (a.format == "csv") {
        std::cout << tl::report::render_overhead_csv(bundle);
    } else {
        std::cout << tl::report::to_json(bundle)["journeys"][0].dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_estimate(double rate, const std::string& basis, const std::string& profile,
                 const std::vector<std::string>& params) {
    tl::carbon::CarbonParams p;
    tl::analytics::RateBasis b;
    try {
        b = tl::analytics::rate_basis_from_string(basis);
        p = tl::carbon::profile(profile);
        for (const auto& kv : params) {
            const auto [k, v] = parse_param(kv);
            p.set(k, v);
        }
        p.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!(rate >= 0)) throw ConfigError("--rate must be nonnegative");
    const auto e = b == tl::analytics::RateBasis::PerMinute ? tl::carbon::annual_emissions_time_basis(rate, p)
                                                           : tl::carbon::annual_emissions_action_basis(rate, p);
    std::cout << tl::report::to_json(e).dump(2) << "\n";
    std::cerr << tl::carbon::format_tonnes(e.t_co2e_per_year) << " per year (" << e.lower_bound_note << ")\n";
    if (e.reference_note) std::cerr << "note: " << *e.reference_note << "\n";
    return kExitOk;
}

int cmd_report(const std::string& config_path, const std::string& output_override) {
    auto cfg = tl::report::load_pipeline_config(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    const auto bundle = tl::report::run_pipeline(cfg);
    std::cout << "wrote";
    for (const char* f : tl::report::kOutputFiles) std::cout << " " << (cfg.output_dir / f).string();
    std::cout << "\n";
    std::cout << "combined corporate overhead: " << tl::carbon::format_tonnes(bundle.overhead_total.t_co2e_per_year)
              << " per year (lower bound)\n";
    return kExitOk;
}

int run(int argc, char** argv) {
    CLI::App app{"Measure, classify and attribute web traffic overhead, and estimate its emissions"};
    app.require_subcommand(0, 1);
    bool version = false;
    app.add_flag("--version", version, "Print tool, schema and ruleset versions");

    CaptureArgs cap;
    auto* capture = app.add_subcommand("capture", "Run the intercepting proxy and record one run until interrupted");
    auto add_proxy_opts = [](CLI::App* c, CaptureArgs& a) {
        c->add_option("--listen", a.listen, "Proxy listen address host:port")->capture_default_str();
        c->add_option("--ca-dir", a.ca_dir, "Directory holding ca.pem / ca-key.pem (created when missing)");
        c->add_option("--store", a.store, "Store directory (default: $TRAFFICLEDGER_STORE)");
        c->add_flag("--record-bodies", a.record_bodies, "Keep request payloads for beacon detection");
        c->add_flag("--keep-cookie-values", a.keep_cookie_values, "Store cookie values instead of sizes only");
        c->add_flag("--insecure-upstream", a.insecure_upstream, "Skip upstream certificate verification");
        c->add_option("--upstream-ca", a.upstream_ca, "Extra PEM trust anchors for upstream TLS");
        c->add_option("--intercept", a.intercept, "Host glob to decrypt (repeatable; default all)");
    };
    add_proxy_opts(capture, cap);
    capture->add_option("--platform", cap.platform, "Platform label for the run")->required();
    capture->add_option("--journey", cap.journey, "Journey name for the run")->required();
    capture->add_option("--duration", cap.duration, "Stop after this long (e.g. 5m)");

    JourneyArgs jr;
    auto* journey = app.add_subcommand("journey", "Scripted browser journeys");
    journey->require_subcommand(1);
    auto* journey_run = journey->add_subcommand("run", "Execute a journey spec through the proxy");
    journey_run->add_option("spec", jr.spec, "Journey spec (YAML)")->required()->check(CLI::ExistingFile);
    journey_run->add_option("--driver", jr.driver, "WebDriver endpoint")->capture_default_str();
    journey_run->add_option("--runs", jr.runs, "Override the spec's repeat count")->check(CLI::PositiveNumber);
    journey_run->add_option("--browser", jr.browser, "browserName capability");
    journey_run->add_flag("--accept-insecure-certs", jr.accept_insecure_certs,
                          "Let the browser accept the proxy's certificates without installing the root");
    journey_run->add_flag("--no-proxy", jr.no_proxy, "Drive the browser without capturing");
    add_proxy_opts(journey_run, jr.proxy);

    std::vector<std::string> har_files;
    std::string ingest_store, ingest_platform, ingest_journey;
    bool drop_bodies = false;
    auto* ingest = app.add_subcommand("ingest", "Import HAR files as runs");
    ingest->add_option("har", har_files, "HAR files")->required()->check(CLI::ExistingFile);
    ingest->add_option("--store", ingest_store, "Store directory (default: $TRAFFICLEDGER_STORE)");
    ingest->add_option("--platform", ingest_platform, "Platform label")->required();
    ingest->add_option("--journey", ingest_journey, "Journey name")->required();
    ingest->add_flag("--drop-bodies", drop_bodies, "Do not keep request payloads");

    std::string cl_store, cl_rules = "x-heuristic", cl_platform, cl_journey, cl_format = "json";
    auto* classify = app.add_subcommand("classify", "Classify stored runs and print the breakdown (store unchanged)");
    classify->add_option("--store", cl_store, "Store directory (default: $TRAFFICLEDGER_STORE)");
    classify->add_option("--rules", cl_rules, "Ruleset name or file")->capture_default_str();
    classify->add_option("--platform", cl_platform, "Only runs of this platform");
    classify->add_option("--journey", cl_journey, "Only runs of this journey");
    classify->add_option("--format", cl_format, "json, flows or table")
        ->check(CLI::IsMember({"json", "flows", "table"}))
        ->capture_default_str();

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Corporate and tracking overhead for one journey");
    analyze->add_option("--store", an.store, "Store directory (default: $TRAFFICLEDGER_STORE)");
    analyze->add_option("--csm", an.csm, "Corporate platform label")->required();
    analyze->add_option("--baseline", an.baseline, "Baseline platform label")->required();
    analyze->add_option("--journey", an.journey, "Journey name")->required();
    analyze->add_option("--basis", an.basis, "time or action")->capture_default_str();
    analyze->add_option("--actions", an.actions, "Actions per run (action basis)")->check(CLI::PositiveNumber);
    analyze->add_option("--csm-rules", an.csm_rules, "Ruleset for the corporate platform")->capture_default_str();
    analyze->add_option("--baseline-rules", an.baseline_rules, "Ruleset for the baseline")->capture_default_str();
    analyze->add_option("--profile", an.profile, "Carbon parameter profile")->capture_default_str();
    analyze->add_option("--format", an.format, "json, markdown or csv")
        ->check(CLI::IsMember({"json", "markdown", "csv"}))
        ->capture_default_str();

    double est_rate = -1;
    std::string est_basis = "time", est_profile = std::string(tl::carbon::kDefaultProfile);
    std::vector<std::string> est_params;
    auto* estimate = app.add_subcommand("estimate", "Annual CO2e for a data rate");
    estimate->add_option("--rate", est_rate, "GB per minute or GB per action")->required();
    estimate->add_option("--basis", est_basis, "time or action")->capture_default_str();
    estimate->add_option("--profile", est_profile, "Parameter profile")->capture_default_str();
    estimate->add_option("--param", est_params, "Override a parameter, key=value (repeatable)");

    std::string report_config, report_output;
    auto* report = app.add_subcommand("report", "Run the full pipeline from a config file");
    report->add_option("--config", report_config, "Pipeline config (YAML)")->required()->check(CLI::ExistingFile);
    report->add_option("--output", report_output, "Override the output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (version) {
            print_version();
            return kExitOk;
        }
        if (*capture) return cmd_capture(cap);
        if (*journey_run) return cmd_journey_run(jr);
        if (*ingest) return cmd_ingest(har_files, ingest_store, ingest_platform, ingest_journey, drop_bodies);
        if (*classify) return cmd_classify(cl_store, cl_rules, cl_platform, cl_journey, cl_format);
        if (*analyze) return cmd_analyze(an);
        if (*estimate) return cmd_estimate(est_rate, est_basis, est_profile, est_params);
        if (*report) return cmd_report(report_config, report_output);
        std::cout << app.help();
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tl::report::PipelineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.kind()) {
        case tl::report::ErrorKind::Config: return kExitConfig;
        case tl::report::ErrorKind::Data: return kExitData;
        case tl::report::ErrorKind::Comparability: return kExitComparability;
        }
        return kExitData;
    } catch (const tl::analytics::ComparabilityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitComparability;
    } catch (const tl::journey::SpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tl::net::ProxyStartError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tl::carbon::ParamsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

} // namespace

int main(int argc, char** argv) { return run(argc, argv); }
