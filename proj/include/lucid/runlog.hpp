#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lucid/detail/util.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"

// JSONL persistence for run records. A log starts with a single header line
// {"header": {...}} echoing the effective configuration, followed by one
// record object per line. Appends flush immediately, so the worst a crash can
// leave behind is one truncated final line, which the loader drops with a
// note. Any other malformed line is treated as corruption and refused.

namespace lucid {

struct RunLogData {
    json header;  // header payload; empty object when the file had none
    std::vector<RunRecord> records;
    std::optional<std::string> recovery_note;  // set when a truncated tail was dropped

    std::map<std::int64_t, const RunRecord*> index_by_id() const {
        std::map<std::int64_t, const RunRecord*> m;
        for (const auto& r : records) m[r.config.run_id] = &r;
        return m;
    }
};

namespace detail_runlog {

inline json make_header_line(const json& payload) { return json{{"header", payload}}; }

}  // namespace detail_runlog

class RunLogWriter {
public:
    // Opens for append. A fresh (or empty) file gets the header line first.
    // An existing file must carry a header whose "config" payload matches, so
    // two differently-configured sweeps can never interleave in one log.
    static RunLogWriter open(const std::filesystem::path& path, const json& header_payload) {
        namespace fs = std::filesystem;
        bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
        if (!fresh) {
            std::ifstream in(path);
            std::string first_line;
            std::getline(in, first_line);
            json first = json::parse(first_line, nullptr, false);
            if (first.is_discarded() || !first.is_object() || !first.contains("header"))
                throw IoError("run log " + path.string() + " has no header line");
            const json& existing = first["header"];
            if (existing.contains("config") && header_payload.contains("config") &&
                existing["config"] != header_payload["config"])
                throw ConfigError("run log " + path.string() +
                                  " was created with a different configuration");
        }
        RunLogWriter w;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        w.out_.open(path, std::ios::app);
        if (!w.out_) throw IoError("cannot open run log for append: " + path.string());
        if (fresh) w.write_line(detail_runlog::make_header_line(header_payload));
        return w;
    }

    void append(const RunRecord& record) { write_line(json(record)); }

private:
    void write_line(const json& j) {
        out_ << j.dump() << '\n';
        out_.flush();
        if (!out_) throw IoError("write to run log failed");
    }

    std::ofstream out_;
};

// Loads a whole log. `path` must exist; use load_run_log_or_empty when a
// missing file simply means "nothing ran yet".
inline RunLogData load_run_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run log: " + path.string());

    RunLogData data;
    data.header = json::object();

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!std::string(detail::trim(line)).empty()) lines.push_back(line);

    std::map<std::int64_t, std::size_t> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json j = json::parse(lines[i], nullptr, false);
        if (j.is_discarded()) {
            if (i + 1 == lines.size()) {
                data.recovery_note = "dropped truncated final line";
                break;
            }
            throw IoError("corrupt line " + std::to_string(i + 1) + " in " + path.string());
        }
        if (i == 0 && j.is_object() && j.contains("header")) {
            data.header = j["header"];
            continue;
        }
        RunRecord rec;
        try {
            rec = j.get<RunRecord>();
        } catch (const json::exception& e) {
            throw IoError("line " + std::to_string(i + 1) + " in " + path.string() +
                          " is not a run record: " + e.what());
        }
        auto [it, inserted] = seen.emplace(rec.config.run_id, i);
        if (!inserted)
            throw IoError("duplicate run id " + std::to_string(rec.config.run_id) + " in " +
                          path.string());
        data.records.push_back(std::move(rec));
    }
    return data;
}

inline RunLogData load_run_log_or_empty(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        RunLogData d;
        d.header = json::object();
        return d;
    }
    return load_run_log(path);
}

// Atomically replaces the log: writes header plus records to a sibling temp
// file, then renames over the original. Used by the retry pass so a crash
// mid-rewrite can never destroy the previous log.
inline void rewrite_run_log(const std::filesystem::path& path, const json& header_payload,
                            const std::vector<RunRecord>& records) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot open temp file: " + tmp.string());
        out << detail_runlog::make_header_line(header_payload).dump() << '\n';
        for (const auto& r : records) out << json(r).dump() << '\n';
        out.flush();
        if (!out) throw IoError("write to temp file failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("atomic rename failed: " + ec.message());
}

}  // namespace lucid
