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

#include "trafficledger/classifier.hpp"

#include "trafficledger/cookies.hpp"
#include "trafficledger/embedded_data.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace trafficledger::classify {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string regex_escape(std::string_view s) {
    static constexpr std::string_view special = "\\^$.|?*+()[]{}/";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string_view::npos) out += '\\';
        out += c;
    }
    return out;
}

std::string percent_decode(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
            std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
            i += 2;
        } else if (s[i] == '+') {
            out += ' ';
        } else {
            out += s[i];
        }
    }
    return out;
}

bool any_of_ci(const std::vector<std::string>& options, std::string_view value) {
    const std::string v = lower(value);
    return std::any_of(options.begin(), options.end(), [&](const std::string& o) { return lower(o) == v; });
}

} // namespace

bool RuleMatch::empty() const {
    return host_globs.empty() && path_globs.empty() && path_regexes.empty() && methods.empty() &&
           content_type_prefixes.empty() && extensions.empty() && !has_cookie && body_patterns.empty();
}

bool glob_match(std::string_view pattern, std::string_view text) {
    std::size_t p = 0, t = 0;
    std::size_t star = std::string_view::npos, mark = 0;
    auto eq = [](char a, char b) {
        return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
    };
    while (t < text.size()) {
        if (p < pattern.size() && (pattern[p] == '?' || (pattern[p] != '*' && eq(pattern[p], text[t])))) {
            ++p;
            ++t;
        } else if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') ++p;
    return p == pattern.size();
}

struct Ruleset::Compiled {
    std::vector<std::regex> path_regexes;
    std::vector<std::regex> body_patterns;
};

Ruleset::Ruleset(std::string name, std::string version, std::vector<ClassificationRule> rules,
                 std::vector<BeaconPattern> beacons, Category default_category)
    : name_(std::move(name)), version_(std::move(version)), beacons_(std::move(beacons)),
      default_category_(default_category) {
    if (default_category_ == Category::Unclassified || default_category_ == Category::SurveillanceTracking)
        throw RulesetError("default category must not be " + std::string(to_string(default_category_)));

    std::set<std::string> ids;
    for (const auto& r : rules) {
        if (r.rule_id.empty()) throw RulesetError("rule without an id");
        if (!ids.insert(r.rule_id).second) throw RulesetError("duplicate rule id '" + r.rule_id + "'");
        if (r.match.empty()) throw RulesetError("rule '" + r.rule_id + "' has no predicate");
        if (r.category == Category::Unclassified) throw RulesetError("rule '" + r.rule_id + "' assigns Unclassified");
    }
    for (const auto& b : beacons_) {
        if (b.key.empty() || b.values.empty()) throw RulesetError("beacon pattern needs a key and values");
    }

    ordered_ = std::move(rules);
    std::stable_sort(ordered_.begin(), ordered_.end(),
                     [](const ClassificationRule& a, const ClassificationRule& b) { return a.priority > b.priority; });

    auto compiled = std::make_shared<std::vector<Compiled>>();
    compiled->reserve(ordered_.size());
    for (const auto& r : ordered_) {
        Compiled c;
        try {
            for (const auto& re : r.match.path_regexes) c.path_regexes.emplace_back(re, std::regex::ECMAScript);
            for (const auto& re : r.match.body_patterns) c.body_patterns.emplace_back(re, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw RulesetError("rule '" + r.rule_id + "' has an invalid regex: " + e.what());
        }
        compiled->push_back(std::move(c));
    }
    compiled_ = std::move(compiled);
}

namespace {

bool rule_holds(const RuleMatch& m, const std::vector<std::regex>& path_res, const std::vector<std::regex>& body_res,
                const HttpFlow& f) {
    if (!m.host_globs.empty() &&
        std::none_of(m.host_globs.begin(), m.host_globs.end(), [&](const auto& g) { return glob_match(g, f.url.host); }))
        return false;
    if (!m.methods.empty() && !any_of_ci(m.methods, f.method)) return false;
    if (!m.path_globs.empty() &&
        std::none_of(m.path_globs.begin(), m.path_globs.end(), [&](const auto& g) { return glob_match(g, f.url.path); }))
        return false;
    if (!path_res.empty() && std::none_of(path_res.begin(), path_res.end(),
                                          [&](const std::regex& re) { return std::regex_search(f.url.path, re); }))
        return false;
    if (!m.content_type_prefixes.empty()) {
        if (!f.content_type) return false;
        const std::string ct = lower(trim(*f.content_type));
        if (std::none_of(m.content_type_prefixes.begin(), m.content_type_prefixes.end(),
                         [&](const std::string& p) { return ct.starts_with(lower(p)); }))
            return false;
    }
    if (!m.extensions.empty() && !any_of_ci(m.extensions, f.url.extension())) return false;
    if (m.has_cookie && *m.has_cookie != !f.request_cookies.empty()) return false;
    if (!body_res.empty()) {
        if (!f.request_body) return false;
        if (std::none_of(body_res.begin(), body_res.end(),
                         [&](const std::regex& re) { return std::regex_search(*f.request_body, re); }))
            return false;
    }
    return true;
}

} // namespace

Classification Ruleset::classify(const HttpFlow& flow) const {
    for (std::size_t i = 0; i < ordered_.size(); ++i) {
        const auto& r = ordered_[i];
        const auto& c = (*compiled_)[i];
        if (rule_holds(r.match, c.path_regexes, c.body_patterns, flow)) return {r.category, r.rule_id};
    }
    return {default_category_, std::nullopt};
}

Classification classify_flow(const HttpFlow& flow, const Ruleset& rules) { return rules.classify(flow); }

// --- loading ---------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const YAML::Node& n, const std::string& where) {
    std::vector<std::string> out;
    if (!n) return out;
    if (n.IsScalar()) {
        out.push_back(n.as<std::string>());
        return out;
    }
    if (!n.IsSequence()) throw RulesetError(where + ": expected a list of strings");
    for (const auto& v : n) out.push_back(v.as<std::string>());
    return out;
}

Category parse_category(const YAML::Node& n, const std::string& where) {
    if (!n || !n.IsScalar()) throw RulesetError(where + ": missing category");
    try {
        return category_from_string(n.as<std::string>());
    } catch (const std::invalid_argument& e) {
        throw RulesetError(where + ": " + e.what());
    }
}

} // namespace

Ruleset parse_ruleset(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::Exception& e) {
        throw RulesetError(std::string("ruleset does not parse: ") + e.what());
    }
    if (!root.IsMap()) throw RulesetError("ruleset must be a mapping");
    try {
        const std::string name = root["name"] ? root["name"].as<std::string>() : "";
        if (name.empty()) throw RulesetError("ruleset needs a name");
        const std::string version = root["version"] ? root["version"].as<std::string>() : "";
        if (version.empty()) throw RulesetError("ruleset needs a version");
        Category def = Category::Other;
        if (root["default_category"]) def = parse_category(root["default_category"], "default_category");

        std::vector<ClassificationRule> rules;
        if (const auto list = root["rules"]) {
            if (!list.IsSequence()) throw RulesetError("rules must be a list");
            std::size_t idx = 0;
            for (const auto& node : list) {
                const std::string where = "rules[" + std::to_string(idx++) + "]";
                ClassificationRule r;
                r.rule_id = node["id"] ? node["id"].as<std::string>() : "";
                r.priority = node["priority"] ? node["priority"].as<int>() : 0;
                r.category = parse_category(node["category"], where);
                r.rationale = node["rationale"] ? node["rationale"].as<std::string>() : "";
                const auto m = node["match"];
                if (!m || !m.IsMap()) throw RulesetError(where + ": missing match block");
                static const std::set<std::string> known{"hosts", "paths", "path_regex", "methods", "content_types",
                                                         "extensions", "has_cookie", "body"};
                for (const auto& kv : m) {
                    if (!known.contains(kv.first.as<std::string>()))
                        throw RulesetError(where + ": unknown predicate '" + kv.first.as<std::string>() + "'");
                }
                r.match.host_globs = string_list(m["hosts"], where + ".hosts");
                r.match.path_globs = string_list(m["paths"], where + ".paths");
                r.match.path_regexes = string_list(m["path_regex"], where + ".path_regex");
                r.match.methods = string_list(m["methods"], where + ".methods");
                r.match.content_type_prefixes = string_list(m["content_types"], where + ".content_types");
                r.match.extensions = string_list(m["extensions"], where + ".extensions");
                if (m["has_cookie"]) r.match.has_cookie = m["has_cookie"].as<bool>();
                r.match.body_patterns = string_list(m["body"], where + ".body");
                rules.push_back(std::move(r));
            }
        }

        std::vector<BeaconPattern> beacons;
        if (const auto list = root["beacons"]) {
            for (const auto& node : list) {
                BeaconPattern b;
                b.key = node["key"] ? node["key"].as<std::string>() : "";
                b.values = string_list(node["values"], "beacons");
                beacons.push_back(std::move(b));
            }
        }
        return Ruleset(name, version, std::move(rules), std::move(beacons), def);
    } catch (const YAML::Exception& e) {
        throw RulesetError(std::string("malformed ruleset: ") + e.what());
    }
}

Ruleset load_ruleset(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw RulesetError("cannot read ruleset " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_ruleset(ss.str());
}

std::string_view builtin_ruleset_text(std::string_view name) {
    if (auto text = embedded::find("rulesets/" + std::string(name) + ".yaml")) return *text;
    throw RulesetError("no builtin ruleset named '" + std::string(name) + "'");
}

Ruleset builtin_ruleset(std::string_view name) { return parse_ruleset(builtin_ruleset_text(name)); }

std::vector<std::string> builtin_ruleset_names() { return {"mastodon-default", "x-heuristic"}; }

Ruleset resolve_ruleset(std::string_view name_or_path) {
    const std::filesystem::path p{std::string(name_or_path)};
    std::error_code ec;
    if (std::filesystem::is_regular_file(p, ec)) return load_ruleset(p);
    return builtin_ruleset(name_or_path);
}

// --- run totals --------------------------------------------------------------

double CategoryBreakdown::share(Category c) const {
    return total_bytes == 0 ? 0.0 : static_cast<double>(bytes_in(c)) / static_cast<double>(total_bytes);
}

CategoryBreakdown& CategoryBreakdown::operator+=(const CategoryBreakdown& o) {
    for (std::size_t i = 0; i < 4; ++i) {
        bytes[i] += o.bytes[i];
        flows[i] += o.flows[i];
    }
    total_bytes += o.total_bytes;
    total_flows += o.total_flows;
    return *this;
}

CategoryBreakdown breakdown_of(const std::vector<HttpFlow>& flows) {
    CategoryBreakdown b;
    for (const auto& f : flows) {
        const std::size_t slot = category_index(f.category);
        const std::uint64_t n = f.total_bytes();
        b.bytes[slot] += n;
        b.flows[slot] += 1;
        b.total_bytes += n;
        b.total_flows += 1;
    }
    return b;
}

CategoryBreakdown classify_run(const JourneyRun& run, std::vector<HttpFlow>& flows, const Ruleset& rules) {
    for (auto& f : flows) {
        if (f.run_id != run.run_id)
            throw std::invalid_argument("flow " + f.flow_id + " does not belong to run " + run.run_id);
        f.assign_category(rules.classify(f).category);
    }
    return breakdown_of(flows);
}

// --- beacons -----------------------------------------------------------------

std::vector<BeaconFinding> detect_tracking_beacons(const std::vector<HttpFlow>& flows,
                                                   const std::vector<BeaconPattern>& patterns) {
    struct CompiledPattern {
        std::regex re;
        std::string evidence;
    };
    std::vector<CompiledPattern> compiled;
    for (const auto& p : patterns) {
        for (const auto& v : p.values) {
            // Quoted or bare key, `:` or `=`, quoted or bare value, word boundaries on both ends.
            const std::string re = "(^|[^A-Za-z0-9_])[\"']?" + regex_escape(p.key) + "[\"']?\\s*[:=]\\s*[\"']?" +
                                   regex_escape(v) + "(?![A-Za-z0-9_])";
            compiled.push_back({std::regex(re, std::regex::ECMAScript), p.key + ": \"" + v + "\""});
        }
    }

    std::vector<BeaconFinding> out;
    for (const auto& f : flows) {
        if (!iequals(f.method, "POST")) continue;
        BeaconFinding finding;
        finding.flow_id = f.flow_id;
        if (!f.request_body) {
            if (f.request_body_bytes > 0) {
                finding.note = std::string(kBodiesNotRecorded);
                out.push_back(std::move(finding));
            }
            continue;
        }
        const std::string decoded = percent_decode(*f.request_body);
        for (const auto& c : compiled) {
            if (std::regex_search(*f.request_body, c.re) || std::regex_search(decoded, c.re))
                finding.evidence.push_back(c.evidence);
        }
        if (!finding.evidence.empty()) {
            finding.flagged = true;
            out.push_back(std::move(finding));
        }
    }
    return out;
}

} // namespace trafficledger::classify
