#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "lucid/domain.hpp"
#include "lucid/errors.hpp"
#include "lucid/pipeline.hpp"
#include "lucid/runlog.hpp"

// Grid sweep harness. Enumerates the Cartesian product of sweep dimensions in
// a fixed order, executes whatever the log does not already hold, and appends
// results in run-id order no matter how many workers run. Failed runs are
// persisted and count as done for resume purposes; retry_failed() re-executes
// just those, rewriting the log atomically.

namespace lucid {

struct SweepPair {
    ConceptPair pair;
    std::optional<std::int64_t> run_id_base;  // overrides the running counter

    bool operator==(const SweepPair&) const = default;
};

struct SweepSpec {
    std::vector<SweepPair> pairs;
    std::vector<int> template_ids{1, 2, 3};
    std::vector<int> word_limits{75, 150, 300};
    std::vector<double> temperatures{1.0, 3.0, 10.0};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::int64_t run_id_base = 0;
    double wake_temperature = 0.6;
    double judge_temperature = 0.0;

    bool operator==(const SweepSpec&) const = default;
};

inline void validate_spec(const SweepSpec& spec) {
    if (spec.pairs.empty()) throw ConfigError("sweep needs at least one concept pair");
    if (spec.template_ids.empty()) throw ConfigError("sweep needs at least one template id");
    if (spec.word_limits.empty()) throw ConfigError("sweep needs at least one word limit");
    if (spec.temperatures.empty()) throw ConfigError("sweep needs at least one temperature");
    if (spec.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    for (int t : spec.template_ids)
        if (t < 1 || t > 3) throw ConfigError("template id outside {1,2,3}");
    for (int w : spec.word_limits)
        if (w <= 0) throw ConfigError("word limit must be positive");
    for (double t : spec.temperatures)
        if (!(t > 0)) throw ConfigError("temperature must be positive");
    if (spec.run_id_base < 0) throw ConfigError("run_id_base negative");
}

// Pair-major enumeration: pair, then template, word limit, temperature, seed.
// Run ids count up sequentially; a pair-level base restarts the counter.
inline std::vector<RunConfig> enumerate_configs(const SweepSpec& spec) {
    validate_spec(spec);
    std::vector<RunConfig> out;
    std::int64_t next_id = spec.run_id_base;
    for (const auto& sp : spec.pairs) {
        if (sp.run_id_base) next_id = *sp.run_id_base;
        for (int tmpl : spec.template_ids)
            for (int words : spec.word_limits)
                for (double temp : spec.temperatures)
                    for (std::uint64_t seed : spec.seeds) {
                        RunConfig c;
                        c.run_id = next_id++;
                        c.pair = sp.pair;
                        if (c.pair.id.empty()) c.pair.id = make_pair_id(c.pair.x, c.pair.y);
                        c.template_id = tmpl;
                        c.word_limit = words;
                        c.dream_temperature = temp;
                        c.seed = seed;
                        c.wake_temperature = spec.wake_temperature;
                        c.judge_temperature = spec.judge_temperature;
                        out.push_back(std::move(c));
                    }
    }
    return out;
}

struct SweepSummary {
    int completed = 0;
    int failed = 0;
    int skipped = 0;
};

namespace detail_sweep {

// Runs `configs` through the pipeline with a worker pool, delivering results
// to `sink` strictly in enumeration order regardless of completion order.
template <typename Sink>
inline void run_ordered(Pipeline& pipeline, const std::vector<RunConfig>& configs, int jobs,
                        Sink sink) {
    if (jobs <= 1) {
        for (const auto& c : configs) sink(pipeline.run(c));
        return;
    }
    std::mutex mutex;
    std::condition_variable cv;
    std::map<std::size_t, RunRecord> ready;
    std::atomic<std::size_t> next_claim{0};

    auto worker = [&] {
        for (;;) {
            std::size_t i = next_claim.fetch_add(1);
            if (i >= configs.size()) return;
            RunRecord rec = pipeline.run(configs[i]);
            {
                std::lock_guard<std::mutex> lock(mutex);
                ready.emplace(i, std::move(rec));
            }
            cv.notify_one();
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);

    std::size_t next_emit = 0;
    while (next_emit < configs.size()) {
        std::unique_lock<std::mutex> lock(mutex);
        cv.wait(lock, [&] { return ready.count(next_emit) > 0; });
        RunRecord rec = std::move(ready.at(next_emit));
        ready.erase(next_emit);
        lock.unlock();
        sink(rec);
        ++next_emit;
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail_sweep

// Executes (or resumes) the grid against the log at `log_path`. A record
// already present under the same run id is skipped only when its stored
// config hash matches the current fingerprint; any mismatch aborts rather
// than mixing two different experiments in one file.
inline SweepSummary execute_sweep(const SweepSpec& spec, Pipeline& pipeline,
                                  const std::filesystem::path& log_path,
                                  const json& header_payload, int jobs = 1) {
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    const std::vector<RunConfig> configs = enumerate_configs(spec);
    const auto& opts = pipeline.options();

    RunLogData existing = load_run_log_or_empty(log_path);
    auto index = existing.index_by_id();

    SweepSummary summary;
    std::vector<RunConfig> todo;
    for (const auto& c : configs) {
        auto it = index.find(c.run_id);
        if (it == index.end()) {
            todo.push_back(c);
            continue;
        }
        std::string fingerprint = config_fingerprint(c, opts.gate_threshold, opts.dream_context,
                                                     pipeline.prompts().version);
        if (it->second->config_hash != fingerprint)
            throw ConfigError("run " + std::to_string(c.run_id) +
                              " in the log was produced by a different configuration; "
                              "refusing to resume");
        ++summary.skipped;
    }

    if (todo.empty()) return summary;

    RunLogWriter writer = RunLogWriter::open(log_path, header_payload);
    detail_sweep::run_ordered(pipeline, todo, jobs, [&](const RunRecord& rec) {
        writer.append(rec);
        if (rec.failed_stage)
            ++summary.failed;
        else
            ++summary.completed;
    });
    return summary;
}

struct RetrySummary {
    int retried = 0;
    int still_failed = 0;
};

// Re-executes every failed record in the log, atomically rewriting the whole
// file. Succeeding records are untouched. A failed record whose fingerprint
// no longer matches the current engine settings aborts the pass.
inline RetrySummary retry_failed(Pipeline& pipeline, const std::filesystem::path& log_path,
                                 int jobs = 1) {
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    RunLogData data = load_run_log(log_path);
    const auto& opts = pipeline.options();

    std::vector<std::size_t> failed_idx;
    std::vector<RunConfig> failed_configs;
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        const RunRecord& r = data.records[i];
        if (!r.failed_stage) continue;
        std::string fingerprint = config_fingerprint(r.config, opts.gate_threshold,
                                                     opts.dream_context,
                                                     pipeline.prompts().version);
        if (r.config_hash != fingerprint)
            throw ConfigError("failed run " + std::to_string(r.config.run_id) +
                              " was produced by a different configuration; refusing to retry");
        failed_idx.push_back(i);
        failed_configs.push_back(r.config);
    }

    RetrySummary summary;
    if (failed_idx.empty()) return summary;

    std::size_t cursor = 0;
    detail_sweep::run_ordered(pipeline, failed_configs, jobs, [&](const RunRecord& rec) {
        data.records[failed_idx[cursor++]] = rec;
        ++summary.retried;
        if (rec.failed_stage) ++summary.still_failed;
    });
    rewrite_run_log(log_path, data.header, data.records);
    return summary;
}

}  // namespace lucid
