#pragma once

#include <algorithm>
#include <atomic>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "lucid/backends.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"
#include "lucid/prompts.hpp"
#include "lucid/protocol.hpp"

// External review pass: a separate sweep over a finished log that scores each
// final output on alignment, coherence and novelty. The reviewer sees exactly
// two things, the original ideation prompt and the re-wake output; wake and
// dream intermediates never reach it.

namespace lucid {

struct ReviewOptions {
    double temperature = 0.0;  // repeatability first; no seed is sent
    int max_reasks = 2;
    bool overwrite = false;  // re-score records that already carry a review
};

enum class ReviewOutcome { reviewed, skipped_no_rewake, skipped_existing, failed };

inline ReviewOutcome review_record(RunRecord& record, BackendRegistry& registry,
                                   const PromptPack& pack, const ReviewOptions& opts = {}) {
    if (!record.rewake_out) return ReviewOutcome::skipped_no_rewake;
    if (record.review && !opts.overwrite) return ReviewOutcome::skipped_existing;

    const std::string ideation = make_ideation_prompt(pack, record.config.template_id,
                                                      record.config.pair,
                                                      record.config.word_limit);
    const std::string prompt = make_review_prompt(pack, ideation, *record.rewake_out);
    try {
        record.review = ask_structured(registry, Role::review, prompt, opts.temperature,
                                       std::nullopt, opts.max_reasks, try_parse_review);
        return ReviewOutcome::reviewed;
    } catch (const Error& e) {
        std::string note = std::string("review failed: ") + e.what();
        if (std::find(record.annotations.begin(), record.annotations.end(), note) ==
            record.annotations.end())
            record.annotations.push_back(note);
        return ReviewOutcome::failed;
    }
}

struct ReviewSummary {
    int reviewed = 0;
    int skipped = 0;
    int failed = 0;
};

// Reviews every eligible record, optionally with a small worker pool.
// Records are independent, so workers just claim indices; results live in the
// records themselves and order is untouched.
inline ReviewSummary review_records(std::vector<RunRecord>& records, BackendRegistry& registry,
                                    const PromptPack& pack, const ReviewOptions& opts = {},
                                    int jobs = 1) {
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    ReviewSummary summary;
    std::mutex summary_mutex;
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= records.size()) return;
            ReviewOutcome outcome = review_record(records[i], registry, pack, opts);
            std::lock_guard<std::mutex> lock(summary_mutex);
            switch (outcome) {
                case ReviewOutcome::reviewed: ++summary.reviewed; break;
                case ReviewOutcome::failed: ++summary.failed; break;
                default: ++summary.skipped; break;
            }
        }
    };

    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < jobs; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return summary;
}

}  // namespace lucid
