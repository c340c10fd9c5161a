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

#include "trafficledger/journey/journey_spec.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace trafficledger::journey {

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::string at(std::size_t index) { return "step " + std::to_string(index + 1) + ": "; }

Millis duration_node(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) throw SpecError(where + "expected a duration such as 500ms or 2s");
    return parse_duration(n.Scalar());
}

Selector parse_selector(const YAML::Node& n, const std::string& where) {
    if (!n.IsMap()) throw SpecError(where + "selector must be a mapping with css, role or text");
    Selector s;
    int kinds = 0;
    if (n["css"]) {
        s.kind = Selector::Kind::Css;
        s.value = n["css"].as<std::string>();
        ++kinds;
    }
    if (n["role"]) {
        s.kind = Selector::Kind::Role;
        s.value = n["role"].as<std::string>();
        s.name = n["name"] ? n["name"].as<std::string>() : "";
        ++kinds;
    }
    if (n["text"]) {
        s.kind = Selector::Kind::Text;
        s.value = n["text"].as<std::string>();
        ++kinds;
    }
    if (kinds != 1) throw SpecError(where + "selector needs exactly one of css, role or text");
    if (s.value.empty()) throw SpecError(where + "empty selector");
    if (n["name"] && s.kind != Selector::Kind::Role) throw SpecError(where + "'name' applies to role selectors only");
    return s;
}

Step parse_step(const YAML::Node& n, std::size_t index) {
    const std::string where = at(index);
    if (!n.IsMap() || n.size() != 1) throw SpecError(where + "each step is a single-key mapping");
    const std::string kind = n.begin()->first.as<std::string>();
    const YAML::Node v = n.begin()->second;

    if (kind == "goto") {
        if (v.IsScalar()) return Goto{v.Scalar()};
        if (v.IsMap() && v["url"]) return Goto{v["url"].as<std::string>()};
        throw SpecError(where + "goto needs a url");
    }
    if (kind == "click") return Click{parse_selector(v, where)};
    if (kind == "assert_visible") return AssertVisible{parse_selector(v, where)};
    if (kind == "type_text") {
        if (!v.IsMap() || !v["target"] || !v["text"]) throw SpecError(where + "type_text needs target and text");
        TypeText t;
        t.target = parse_selector(v["target"], where);
        t.text = v["text"].as<std::string>();
        if (v["delay"]) t.per_key_delay = duration_node(v["delay"], where);
        return t;
    }
    if (kind == "scroll") {
        if (!v.IsMap()) throw SpecError(where + "scroll needs duration or times");
        Scroll s;
        if (v["duration"]) s.duration = duration_node(v["duration"], where);
        if (v["times"]) s.times = v["times"].as<int>();
        if (v["interval"]) s.interval = duration_node(v["interval"], where);
        if (v["pixels"]) s.pixels = v["pixels"].as<int>();
        if (v["duration"] && v["times"]) throw SpecError(where + "scroll takes duration or times, not both");
        if (!v["duration"] && !v["times"]) throw SpecError(where + "scroll needs duration or times");
        return s;
    }
    if (kind == "wait") {
        if (v.IsMap() && v["duration"]) return WaitFixed{duration_node(v["duration"], where)};
        return WaitFixed{duration_node(v, where)};
    }
    if (kind == "wait_network_idle") {
        WaitNetworkIdle w;
        if (v.IsMap()) {
            if (v["quiet"]) w.quiet_period = duration_node(v["quiet"], where);
            if (v["timeout"]) w.hard_timeout = duration_node(v["timeout"], where);
        } else if (v.IsScalar() && !v.Scalar().empty()) {
            w.quiet_period = duration_node(v, where);
        }
        return w;
    }
    throw SpecError(where + "unknown step '" + kind + "'");
}

} // namespace

std::pair<std::string, std::string> Selector::locator() const {
    switch (kind) {
    case Kind::Css:
        return {"css selector", value};
    case Kind::Role: {
        // explicit role attribute, or the native element carrying that role implicitly
        std::string role_test = "@role=" + xpath_literal(value);
        if (value == "button")
            role_test += " or self::button or (self::input and (@type='button' or @type='submit'))";
        else if (value == "link")
            role_test += " or (self::a and @href)";
        else if (value == "textbox")
            role_test += " or self::textarea or (self::input and (not(@type) or @type='text'))";
        else if (value == "checkbox")
            role_test += " or (self::input and @type='checkbox')";
        std::string xp = "//*[(" + role_test + ")";
        if (!name.empty()) {
            const std::string lit = xpath_literal(name);
            xp += " and (normalize-space(.)=" + lit + " or @aria-label=" + lit + " or @value=" + lit + ")";
        }
        xp += "]";
        return {"xpath", xp};
    }
    case Kind::Text: {
        // innermost element whose text contains the string
        const std::string lit = xpath_literal(value);
        return {"xpath", "//*[contains(normalize-space(.), " + lit + ")][not(.//*[contains(normalize-space(.), " +
                             lit + ")])]"};
    }
    }
    return {"css selector", value};
}

std::string Selector::describe() const {
    switch (kind) {
    case Kind::Css: return "css '" + value + "'";
    case Kind::Role: return "role " + value + (name.empty() ? "" : " named '" + name + "'");
    case Kind::Text: return "text '" + value + "'";
    }
    return value;
}

std::string_view step_kind(const Step& s) {
    return std::visit(overloaded{[](const Goto&) { return std::string_view("goto"); },
                                 [](const Click&) { return std::string_view("click"); },
                                 [](const TypeText&) { return std::string_view("type_text"); },
                                 [](const Scroll&) { return std::string_view("scroll"); },
                                 [](const WaitFixed&) { return std::string_view("wait"); },
                                 [](const WaitNetworkIdle&) { return std::string_view("wait_network_idle"); },
                                 [](const AssertVisible&) { return std::string_view("assert_visible"); }},
                      s);
}

void JourneySpec::validate() const {
    if (name.empty()) throw SpecError("journey needs a name");
    if (platform_id.empty()) throw SpecError("journey needs a platform");
    if (steps.empty()) throw SpecError("journey needs at least one step");
    if (!std::holds_alternative<Goto>(steps.front())) throw SpecError("the first step must be goto");
    if (repeat < 1) throw SpecError("repeat must be a positive integer");
    if (action_count < 1) throw SpecError("actions must be a positive integer");
    if (element_timeout.count() <= 0) throw SpecError("element timeout must be positive");
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const std::string where = at(i);
        std::visit(overloaded{
                       [&](const Goto& g) {
                           if (g.url.empty()) throw SpecError(where + "empty url");
                       },
                       [&](const Click&) {},
                       [&](const TypeText& t) {
                           if (t.text.empty()) throw SpecError(where + "type_text needs nonempty text");
                           if (t.per_key_delay.count() < 0) throw SpecError(where + "negative key delay");
                       },
                       [&](const Scroll& s) {
                           if (s.interval.count() <= 0) throw SpecError(where + "scroll interval must be positive");
                           if (s.times ? *s.times <= 0 : s.duration.count() <= 0)
                               throw SpecError(where + "scroll amount must be positive");
                       },
                       [&](const WaitFixed& w) {
                           if (w.duration.count() <= 0) throw SpecError(where + "wait must be positive");
                       },
                       [&](const WaitNetworkIdle& w) {
                           if (w.quiet_period.count() <= 0 || w.hard_timeout.count() <= 0)
                               throw SpecError(where + "network idle periods must be positive");
                       },
                       [&](const AssertVisible&) {},
                   },
                   steps[i]);
    }
}

Millis parse_duration(std::string_view text) {
    std::string s(text);
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw SpecError("bad duration '" + s + "'");
    }
    const std::string unit = s.substr(pos);
    double ms = 0;
    if (unit == "ms") ms = v;
    else if (unit == "s") ms = v * 1000;
    else if (unit == "m" || unit == "min") ms = v * 60'000;
    else if (unit == "h") ms = v * 3'600'000;
    else throw SpecError("duration '" + s + "' needs a unit (ms, s, m, h)");
    if (!std::isfinite(ms) || ms < 0) throw SpecError("bad duration '" + s + "'");
    return Millis(static_cast<Millis::rep>(std::llround(ms)));
}

JourneySpec parse_journey_spec(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw SpecError(std::string("malformed journey file: ") + e.what());
    }
    if (!root.IsMap()) throw SpecError("journey file must be a mapping");
    try {
        JourneySpec spec;
        for (const auto& kv : root) {
            const std::string key = kv.first.as<std::string>();
            static const char* known[] = {"name", "platform", "steps", "repeat", "basis", "actions",
                                          "element_timeout", "browser", "accept_insecure_certs"};
            if (std::find(std::begin(known), std::end(known), key) == std::end(known))
                throw SpecError("unknown key '" + key + "'");
        }
        if (root["name"]) spec.name = root["name"].as<std::string>();
        if (root["platform"]) spec.platform_id = root["platform"].as<std::string>();
        if (root["repeat"]) spec.repeat = root["repeat"].as<int>();
        if (root["actions"]) spec.action_count = root["actions"].as<int>();
        if (root["basis"]) {
            try {
                spec.basis = analytics::rate_basis_from_string(root["basis"].as<std::string>());
            } catch (const std::exception& e) {
                throw SpecError(e.what());
            }
        }
        if (root["element_timeout"]) spec.element_timeout = duration_node(root["element_timeout"], "");
        if (root["browser"]) spec.browser = root["browser"].as<std::string>();
        if (root["accept_insecure_certs"]) spec.accept_insecure_certs = root["accept_insecure_certs"].as<bool>();
        const YAML::Node steps = root["steps"];
        if (steps && !steps.IsSequence()) throw SpecError("steps must be a list");
        if (steps) {
            for (std::size_t i = 0; i < steps.size(); ++i) spec.steps.push_back(parse_step(steps[i], i));
        }
        spec.validate();
        return spec;
    } catch (const YAML::Exception& e) {
        throw SpecError(std::string("bad journey file: ") + e.what());
    }
}

JourneySpec load_journey_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_journey_spec(ss.str());
    } catch (const SpecError& e) {
        throw SpecError(path.string() + ": " + e.what());
    }
}

std::string xpath_literal(std::string_view text) {
    if (text.find('\'') == std::string_view::npos) return "'" + std::string(text) + "'";
    if (text.find('"') == std::string_view::npos) return "\"" + std::string(text) + "\"";
    std::string out = "concat(";
    std::size_t start = 0;
    bool first = true;
    while (start <= text.size()) {
        const auto q = text.find('\'', start);
        const auto piece = text.substr(start, q == std::string_view::npos ? std::string_view::npos : q - start);
        if (!piece.empty()) {
            out += (first ? "" : ", ") + std::string("'") + std::string(piece) + "'";
            first = false;
        }
        if (q == std::string_view::npos) break;
        out += (first ? "" : ", ") + std::string("\"'\"");
        first = false;
        start = q + 1;
    }
    return out + ")";
}

} // namespace trafficledger::journey
