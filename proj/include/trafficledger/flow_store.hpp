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

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace trafficledger::store {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kRunsFile = "runs.jsonl";
inline constexpr const char* kFlowsFile = "flows.jsonl";

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateRun : public StoreError {
public:
    explicit DuplicateRun(const std::string& run_id) : StoreError("run already stored: " + run_id) {}
};

class CorruptStore : public StoreError {
public:
    CorruptStore(std::filesystem::path file, std::uint64_t offset, const std::string& what)
        : StoreError("corrupt record in " + file.string() + " at byte " + std::to_string(offset) + ": " + what),
          file_(std::move(file)),
          offset_(offset) {}

    const std::filesystem::path& file() const { return file_; }
    std::uint64_t offset() const { return offset_; }

private:
    std::filesystem::path file_;
    std::uint64_t offset_;
};

struct CommitReceipt {
    std::string run_id;
    std::size_t flow_count = 0;
    std::uint64_t total_bytes = 0;
    /// Byte offset of the run record in the runs file.
    std::uint64_t run_offset = 0;
};

struct RunFilter {
    std::optional<std::string> platform_id;
    std::optional<std::string> journey_name;

    bool matches(const JourneyRun& run) const {
        return (!platform_id || run.platform_id == *platform_id) &&
               (!journey_name || run.journey_name == *journey_name);
    }
};

/// Append-only store: a directory holding runs.jsonl and flows.jsonl, one
/// JSON record per line, each carrying `"schema": 1`.
///
/// Flows may be staged ahead of their run (live capture appends each exchange
/// as it completes). A flow becomes visible only once a run record listing
/// its id is committed. Trailing bytes without a newline are an interrupted
/// write and are ignored by readers; the next writer truncates them.
///
/// One writer at a time: appends take an exclusive lock on the directory and
/// are serialized within the process.
class FlowStore {
public:
    /// Creates the directory and empty record files when missing.
    explicit FlowStore(std::filesystem::path dir);

    const std::filesystem::path& path() const { return dir_; }

    /// Writes flows then the run record. Throws DuplicateRun or StoreError.
    CommitReceipt append_run(const JourneyRun& run, const std::vector<HttpFlow>& flows);

    /// Stages one flow; invisible until commit_run lists it.
    void append_flow(const HttpFlow& flow);

    /// Commits a run whose flows were staged through append_flow.
    CommitReceipt commit_run(const JourneyRun& run);

    std::vector<RunRecord> load_runs(const RunFilter& filter = {}) const;

private:
    std::uint64_t write_locked(const std::filesystem::path& file, const std::string& payload);
    CommitReceipt commit_locked(const JourneyRun& run, std::uint64_t total_bytes);

    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::uint64_t> staged_; // flow_id -> total bytes
};

/// Opens (or creates) the store at `dir` and appends.
CommitReceipt append_run(const std::filesystem::path& dir, const JourneyRun& run,
                         const std::vector<HttpFlow>& flows);

/// Reads an existing store; a missing directory is a StoreError.
std::vector<RunRecord> load_runs(const std::filesystem::path& dir, const RunFilter& filter = {});

} // namespace trafficledger::store
