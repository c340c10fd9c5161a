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
#include "trafficledger/json_codec.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tltest {

/// Byte total of one raw HAR entry, computed from the JSON alone.
std::uint64_t brute_force_entry_bytes(const trafficledger::Json& entry);

/// Random flows over hosts, paths and types that exercise every shipped rule.
std::vector<trafficledger::HttpFlow> fuzz_flows(std::size_t n, std::uint64_t seed);

/// Mean and population standard deviation, two-pass.
std::pair<double, double> mean_and_std(const std::vector<double>& xs);

} // namespace tltest
