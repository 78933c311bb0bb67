#pragma once

#include <optional>
#include <string>
#include <utility>

#include "lucid/analysis.hpp"
#include "lucid/backends.hpp"
#include "lucid/detail/util.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"
#include "lucid/prompts.hpp"
#include "lucid/protocol.hpp"

// The four-stage engine. One run() call walks a single configuration through
// wake -> dream -> judge -> re-wake and returns the full record, never
// throwing for stage-level trouble: failures are written into the record
// (failed_stage / failure) so a sweep can keep going and a later retry pass
// can find them.
//
// Stage contract:
//   wake     baseline answer to the ideation prompt at the wake temperature
//   dream    exploratory answer at the sweep temperature; sees the wake output
//            as context unless configured prompt_only
//   judge    deterministic strict-JSON verdict on the dream text; the same
//            protocol also extracts the wake idea right after the wake stage
//   re-wake  only when the gate passes: elaborate the judged idea with a
//            budget of word_limit + rewake_extra_words

namespace lucid {

struct PipelineOptions {
    int gate_threshold = 4;
    DreamContext dream_context = DreamContext::with_wake;
    int rewake_extra_words = 100;
    int judge_max_reasks = 2;
};

class Pipeline {
public:
    Pipeline(BackendRegistry& registry, PromptPack pack, PipelineOptions opts = {})
        : registry_(registry), pack_(std::move(pack)), opts_(opts) {
        if (opts_.gate_threshold < 1 || opts_.gate_threshold > 5)
            throw ConfigError("gate_threshold outside [1,5]");
        if (opts_.rewake_extra_words < 0)
            throw ConfigError("rewake_extra_words negative");
        if (opts_.judge_max_reasks < 0)
            throw ConfigError("judge_max_reasks negative");
    }

    const PromptPack& prompts() const { return pack_; }
    const PipelineOptions& options() const { return opts_; }

    // Judge protocol on an arbitrary candidate text.
    JudgeVerdict judge_text(const std::string& candidate, double judge_temperature,
                            std::optional<std::uint64_t> seed) {
        std::string prompt = make_judge_prompt(pack_, candidate);
        return ask_structured(registry_, Role::judge, std::move(prompt), judge_temperature, seed,
                              opts_.judge_max_reasks, try_parse_judge);
    }

    RunRecord run(const RunConfig& config) {
        RunRecord rec;
        rec.config = config;
        rec.gate_threshold = opts_.gate_threshold;
        rec.dream_context = opts_.dream_context;
        rec.prompt_version = pack_.version;
        rec.config_hash =
            config_fingerprint(config, opts_.gate_threshold, opts_.dream_context, pack_.version);
        rec.started_at = detail::iso8601_utc_now();
        try {
            return run_stages(rec);
        } catch (const std::exception& e) {
            // run() must never throw: sweep workers rely on every config
            // producing a record. Anything a stage handler did not classify
            // lands here.
            return fail(rec, "internal", e.what());
        }
    }

private:
    RunRecord run_stages(RunRecord& rec) {
        const RunConfig& config = rec.config;
        const std::string ideation =
            make_ideation_prompt(pack_, config.template_id, config.pair, config.word_limit);

        // Wake.
        try {
            rec.wake_out = registry_.generate(Role::wake, ideation, config.wake_temperature,
                                              config.seed);
        } catch (const Error& e) {
            return fail(rec, "wake", e.what());
        }

        // Wake idea extraction is best-effort: without it the run loses its
        // similarity measurement but the dream path is still worth having.
        try {
            JudgeVerdict wake_verdict =
                judge_text(rec.wake_out, config.judge_temperature, config.seed);
            rec.idea_wake = wake_verdict.idea;
        } catch (const Error& e) {
            rec.annotations.push_back(std::string("idea_wake extraction failed: ") + e.what());
        }

        // Dream.
        const std::string dream_prompt =
            make_dream_prompt(pack_, ideation, rec.wake_out, opts_.dream_context);
        try {
            rec.dream_out = registry_.generate(Role::dream, dream_prompt,
                                               config.dream_temperature, config.seed);
        } catch (const Error& e) {
            return fail(rec, "dream", e.what());
        }

        // Judge.
        try {
            rec.judge = judge_text(rec.dream_out, config.judge_temperature, config.seed);
        } catch (const Error& e) {
            return fail(rec, "judge", e.what());
        }

        rec.gated = rec.judge->consistency >= opts_.gate_threshold && rec.judge->idea.has_value();

        // Similarity is measured whenever both ideas exist, gated or not. An
        // unbound embedder just defers the measurement to the analyze pass.
        if (registry_.has_embedder() && rec.idea_wake && rec.judge->idea) {
            try {
                attach_similarity(rec, registry_);
            } catch (const std::exception& e) {
                rec.annotations.push_back(std::string("embedding failed: ") + e.what());
            }
        }

        if (!rec.gated) {
            rec.finished_at = detail::iso8601_utc_now();
            return rec;
        }

        // Re-wake.
        const int budget = config.word_limit + opts_.rewake_extra_words;
        const std::string rewake_prompt =
            make_rewake_prompt(pack_, ideation, *rec.judge->idea, budget);
        try {
            rec.rewake_out = registry_.generate(Role::rewake, rewake_prompt,
                                                config.wake_temperature, config.seed);
        } catch (const Error& e) {
            return fail(rec, "rewake", e.what());
        }

        rec.finished_at = detail::iso8601_utc_now();
        return rec;
    }

    static RunRecord fail(RunRecord& rec, const char* stage, const std::string& message) {
        rec.failed_stage = stage;
        rec.failure = message;
        rec.finished_at = detail::iso8601_utc_now();
        return rec;
    }

    BackendRegistry& registry_;
    PromptPack pack_;
    PipelineOptions opts_;
};

}  // namespace lucid
