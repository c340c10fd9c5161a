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

#include <json.hpp>

#include <string>
#include <string_view>

namespace trafficledger {

using Json = nlohmann::json;

// Record encoders for the store format. Field names are part of schema "1".
Json to_json(const Url& url);
Json to_json(const Cookie& cookie);
Json to_json(const HttpFlow& flow);
Json to_json(const JourneyRun& run);

Url url_from_json(const Json& j);
Cookie cookie_from_json(const Json& j);
HttpFlow flow_from_json(const Json& j);
JourneyRun run_from_json(const Json& j);

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

} // namespace trafficledger
