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

#include "trafficledger/flow_store.hpp"

#include "trafficledger/json_codec.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

namespace trafficledger::store {

namespace fs = std::filesystem;

namespace {

std::string errno_text(const std::string& what, const fs::path& p) {
    return what + " " + p.string() + ": " + std::strerror(errno);
}

class Fd {
public:
    explicit Fd(int fd) : fd_(fd) {}
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    int get() const { return fd_; }

private:
    int fd_;
};

/// Exclusive advisory lock over the whole store directory.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : fd_(::open((dir / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644)) {
        if (fd_.get() < 0) throw StoreError(errno_text("cannot open lock file in", dir));
        while (::flock(fd_.get(), LOCK_EX) != 0) {
            if (errno != EINTR) throw StoreError(errno_text("cannot lock", dir));
        }
    }
    ~DirLock() { ::flock(fd_.get(), LOCK_UN); }

private:
    Fd fd_;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw StoreError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Line {
    std::string_view text;
    std::uint64_t offset;
};

/// Complete, non-empty lines only; a torn tail is dropped.
std::vector<Line> split_lines(std::string_view data) {
    std::vector<Line> lines;
    std::size_t pos = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        if (nl == std::string_view::npos) break;
        if (nl > pos) lines.push_back({data.substr(pos, nl - pos), pos});
        pos = nl + 1;
    }
    return lines;
}

Json parse_record(const fs::path& file, const Line& line, std::string_view kind) {
    Json j;
    try {
        j = Json::parse(line.text);
    } catch (const Json::exception& e) {
        throw CorruptStore(file, line.offset, e.what());
    }
    if (!j.is_object()) throw CorruptStore(file, line.offset, "record is not an object");
    auto schema = j.find("schema");
    if (schema == j.end() || !schema->is_number_integer() || schema->get<int>() != kSchemaVersion)
        throw CorruptStore(file, line.offset, "unsupported or missing schema version");
    auto k = j.find("kind");
    if (k == j.end() || !k->is_string() || k->get<std::string>() != kind)
        throw CorruptStore(file, line.offset, "expected record kind '" + std::string(kind) + "'");
    return j;
}

std::string encode_record(Json body, const char* kind) {
    body["schema"] = kSchemaVersion;
    body["kind"] = kind;
    return body.dump(-1, ' ', false, Json::error_handler_t::replace) + "\n";
}

void validate_flow(const HttpFlow& f) {
    if (f.flow_id.empty()) throw StoreError("flow without id");
    if (f.completed_at < f.started_at) throw StoreError("flow " + f.flow_id + " completes before it starts");
}

void ensure_files(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StoreError("cannot create store directory " + dir.string() + ": " + ec.message());
    for (const char* name : {kRunsFile, kFlowsFile}) {
        Fd fd(::open((dir / name).c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644));
        if (fd.get() < 0) throw StoreError(errno_text("cannot create", dir / name));
    }
}

std::unordered_set<std::string> committed_run_ids(const fs::path& dir) {
    const fs::path file = dir / kRunsFile;
    const std::string data = read_file(file);
    std::unordered_set<std::string> ids;
    for (const auto& line : split_lines(data)) {
        const Json j = parse_record(file, line, "run");
        ids.insert(j.at("run_id").get<std::string>());
    }
    return ids;
}

} // namespace

FlowStore::FlowStore(fs::path dir) : dir_(std::move(dir)) { ensure_files(dir_); }

std::uint64_t FlowStore::write_locked(const fs::path& file, const std::string& payload) {
    Fd fd(::open(file.c_str(), O_RDWR | O_CLOEXEC));
    if (fd.get() < 0) throw StoreError(errno_text("cannot open", file));

    struct stat st {};
    if (::fstat(fd.get(), &st) != 0) throw StoreError(errno_text("cannot stat", file));
    off_t size = st.st_size;

    // Drop a torn tail left by an interrupted writer.
    if (size > 0) {
        char last = 0;
        if (::pread(fd.get(), &last, 1, size - 1) != 1) throw StoreError(errno_text("cannot read", file));
        if (last != '\n') {
            const std::string data = read_file(file);
            const auto nl = data.rfind('\n');
            size = nl == std::string::npos ? 0 : static_cast<off_t>(nl + 1);
            if (::ftruncate(fd.get(), size) != 0) throw StoreError(errno_text("cannot truncate", file));
        }
    }

    const char* p = payload.data();
    std::size_t left = payload.size();
    off_t at = size;
    while (left > 0) {
        const ssize_t n = ::pwrite(fd.get(), p, left, at);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            const std::string msg = errno_text("write failed on", file);
            [[maybe_unused]] int rc = ::ftruncate(fd.get(), size);
            throw StoreError(msg);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
        at += n;
    }
    if (::fsync(fd.get()) != 0) {
        const std::string msg = errno_text("fsync failed on", file);
        [[maybe_unused]] int rc = ::ftruncate(fd.get(), size);
        throw StoreError(msg);
    }
    return static_cast<std::uint64_t>(size);
}

namespace {

void validate_run(const JourneyRun& run) {
    if (run.run_id.empty()) throw StoreError("run without id");
    if (run.ended_at < run.started_at) throw StoreError("run " + run.run_id + " ends before it starts");
}

} // namespace

CommitReceipt FlowStore::commit_locked(const JourneyRun& run, std::uint64_t total_bytes) {
    validate_run(run);
    CommitReceipt receipt;
    receipt.run_id = run.run_id;
    receipt.flow_count = run.flow_ids.size();
    receipt.total_bytes = total_bytes;
    receipt.run_offset = write_locked(dir_ / kRunsFile, encode_record(to_json(run), "run"));
    return receipt;
}

CommitReceipt FlowStore::append_run(const JourneyRun& run, const std::vector<HttpFlow>& flows) {
    validate_run(run);
    JourneyRun normalized = run;
    std::vector<std::string> ids;
    ids.reserve(flows.size());
    std::string payload;
    std::uint64_t total = 0;
    for (const auto& f : flows) {
        validate_flow(f);
        if (f.run_id != run.run_id)
            throw StoreError("flow " + f.flow_id + " belongs to run " + f.run_id + ", not " + run.run_id);
        ids.push_back(f.flow_id);
        total += f.total_bytes();
        payload += encode_record(to_json(f), "flow");
    }
    if (!normalized.flow_ids.empty() && normalized.flow_ids != ids)
        throw StoreError("run " + run.run_id + " lists flow ids that do not match the supplied flows");
    normalized.flow_ids = std::move(ids);

    std::lock_guard guard(mu_);
    DirLock lock(dir_);
    if (committed_run_ids(dir_).contains(run.run_id)) throw DuplicateRun(run.run_id);
    if (!payload.empty()) write_locked(dir_ / kFlowsFile, payload);
    return commit_locked(normalized, total);
}

void FlowStore::append_flow(const HttpFlow& flow) {
    validate_flow(flow);
    const std::string payload = encode_record(to_json(flow), "flow");
    std::lock_guard guard(mu_);
    DirLock lock(dir_);
    write_locked(dir_ / kFlowsFile, payload);
    staged_[flow.flow_id] = flow.total_bytes();
}

CommitReceipt FlowStore::commit_run(const JourneyRun& run) {
    std::lock_guard guard(mu_);
    std::uint64_t total = 0;
    for (const auto& id : run.flow_ids) {
        auto it = staged_.find(id);
        if (it == staged_.end()) throw StoreError("flow " + id + " was not staged in this store");
        total += it->second;
    }
    DirLock lock(dir_);
    if (committed_run_ids(dir_).contains(run.run_id)) throw DuplicateRun(run.run_id);
    auto receipt = commit_locked(run, total);
    for (const auto& id : run.flow_ids) staged_.erase(id);
    return receipt;
}

namespace {

std::vector<RunRecord> load_impl(const fs::path& dir, const RunFilter& filter) {
    const fs::path runs_file = dir / kRunsFile;
    const fs::path flows_file = dir / kFlowsFile;
    if (!fs::exists(runs_file)) return {};

    // Runs first: any flow a committed run names was written before that run.
    const std::string runs_data = read_file(runs_file);
    std::vector<std::pair<JourneyRun, std::uint64_t>> runs;
    std::unordered_set<std::string> wanted;
    for (const auto& line : split_lines(runs_data)) {
        const Json j = parse_record(runs_file, line, "run");
        JourneyRun run;
        try {
            run = run_from_json(j);
        } catch (const std::exception& e) {
            throw CorruptStore(runs_file, line.offset, e.what());
        }
        if (!filter.matches(run)) continue;
        wanted.insert(run.flow_ids.begin(), run.flow_ids.end());
        runs.emplace_back(std::move(run), line.offset);
    }
    if (runs.empty()) return {};

    const std::string flows_data = read_file(flows_file);
    std::unordered_map<std::string, HttpFlow> by_id;
    for (const auto& line : split_lines(flows_data)) {
        const Json j = parse_record(flows_file, line, "flow");
        auto id = j.find("flow_id");
        if (id == j.end() || !id->is_string()) throw CorruptStore(flows_file, line.offset, "flow without id");
        if (!wanted.contains(id->get<std::string>())) continue;
        try {
            HttpFlow f = flow_from_json(j);
            by_id.insert_or_assign(f.flow_id, std::move(f));
        } catch (const std::exception& e) {
            throw CorruptStore(flows_file, line.offset, e.what());
        }
    }

    std::vector<RunRecord> out;
    out.reserve(runs.size());
    for (auto& [run, offset] : runs) {
        RunRecord rec;
        rec.flows.reserve(run.flow_ids.size());
        for (const auto& id : run.flow_ids) {
            auto it = by_id.find(id);
            if (it == by_id.end()) throw CorruptStore(runs_file, offset, "run references missing flow " + id);
            rec.flows.push_back(it->second);
        }
        rec.run = std::move(run);
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace

std::vector<RunRecord> FlowStore::load_runs(const RunFilter& filter) const { return load_impl(dir_, filter); }

CommitReceipt append_run(const fs::path& dir, const JourneyRun& run, const std::vector<HttpFlow>& flows) {
    return FlowStore(dir).append_run(run, flows);
}

std::vector<RunRecord> load_runs(const fs::path& dir, const RunFilter& filter) {
    if (!fs::is_directory(dir)) throw StoreError("no store at " + dir.string());
    return load_impl(dir, filter);
}

} // namespace trafficledger::store
