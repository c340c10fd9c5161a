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
#include <string_view>
#include <vector>

namespace trafficledger::embedded {

/// Data files compiled into the binary, keyed by path relative to data/
/// (e.g. `rulesets/x-heuristic.yaml`).
std::optional<std::string_view> find(std::string_view key);
std::vector<std::string_view> keys();

} // namespace trafficledger::embedded
