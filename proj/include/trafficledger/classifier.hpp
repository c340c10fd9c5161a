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

#include "trafficledger/flow.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace trafficledger::classify {

class RulesetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conjunction of predicates. Unset predicates are ignored; a set predicate
/// holds when any of its alternatives matches.
struct RuleMatch {
    std::vector<std::string> host_globs;
    std::vector<std::string> path_globs;
    std::vector<std::string> path_regexes;
    std::vector<std::string> methods;
    std::vector<std::string> content_type_prefixes;
    std::vector<std::string> extensions;
    std::optional<bool> has_cookie;
    /// ECMAScript regexes searched in the recorded request payload. A flow
    /// without a recorded payload never satisfies this predicate.
    std::vector<std::string> body_patterns;

    bool empty() const;
};

struct ClassificationRule {
    std::string rule_id;
    int priority = 0;
    RuleMatch match;
    Category category = Category::Other;
    std::string rationale;
};

/// Key/value pair searched for in beacon payloads, e.g. `action: "impression"`.
struct BeaconPattern {
    std::string key;
    std::vector<std::string> values;
};

struct Classification {
    Category category = Category::Other;
    std::optional<std::string> rule_id;

    bool operator==(const Classification&) const = default;
};

/// Immutable, validated rule list. Rules are evaluated by priority
/// (descending) and then declaration order.
class Ruleset {
public:
    Ruleset(std::string name, std::string version, std::vector<ClassificationRule> rules,
            std::vector<BeaconPattern> beacons = {}, Category default_category = Category::Other);

    const std::string& name() const { return name_; }
    const std::string& version() const { return version_; }
    Category default_category() const { return default_category_; }
    /// Rules in evaluation order.
    const std::vector<ClassificationRule>& rules() const { return ordered_; }
    const std::vector<BeaconPattern>& beacons() const { return beacons_; }

    Classification classify(const HttpFlow& flow) const;

private:
    struct Compiled;

    std::string name_;
    std::string version_;
    std::vector<ClassificationRule> ordered_;
    std::vector<BeaconPattern> beacons_;
    Category default_category_;
    std::shared_ptr<const std::vector<Compiled>> compiled_;
};

/// Parses a YAML or JSON ruleset document.
Ruleset parse_ruleset(std::string_view text);
Ruleset load_ruleset(const std::filesystem::path& file);

/// Shipped rulesets: `x-heuristic` and `mastodon-default`.
Ruleset builtin_ruleset(std::string_view name);
std::vector<std::string> builtin_ruleset_names();
/// Source text of a shipped ruleset.
std::string_view builtin_ruleset_text(std::string_view name);

/// A path naming an existing file is loaded; otherwise a builtin name.
Ruleset resolve_ruleset(std::string_view name_or_path);

/// `*` matches any run (including `/`), `?` one character. Case-insensitive.
bool glob_match(std::string_view pattern, std::string_view text);

Classification classify_flow(const HttpFlow& flow, const Ruleset& rules);

struct CategoryBreakdown {
    std::array<std::uint64_t, 4> bytes{};
    std::array<std::size_t, 4> flows{};
    std::uint64_t total_bytes = 0;
    std::size_t total_flows = 0;

    std::uint64_t bytes_in(Category c) const { return bytes[category_index(c)]; }
    std::size_t flows_in(Category c) const { return flows[category_index(c)]; }
    /// Fraction of total bytes; 0 when the run carried no bytes.
    double share(Category c) const;

    CategoryBreakdown& operator+=(const CategoryBreakdown& other);
};

/// Classifies every flow in place and returns per-category totals. The
/// totals partition run bytes exactly.
CategoryBreakdown classify_run(const JourneyRun& run, std::vector<HttpFlow>& flows, const Ruleset& rules);

/// Totals over already-classified flows. Throws std::invalid_argument on an
/// Unclassified flow.
CategoryBreakdown breakdown_of(const std::vector<HttpFlow>& flows);

inline constexpr std::string_view kBodiesNotRecorded = "bodies not recorded";

struct BeaconFinding {
    std::string flow_id;
    bool flagged = false;
    /// Matched patterns, rendered `key: "value"`.
    std::vector<std::string> evidence;
    std::optional<std::string> note;
};

/// Scans POST flows for configured key/value patterns. Flagged flows and
/// POSTs lacking a recorded payload (with a note) are returned.
std::vector<BeaconFinding> detect_tracking_beacons(const std::vector<HttpFlow>& flows,
                                                   const std::vector<BeaconPattern>& patterns);

} // namespace trafficledger::classify
