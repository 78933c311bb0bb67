#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lucid/detail/util.hpp"
#include "lucid/errors.hpp"

// Shared vocabulary for the whole engine: one run's configuration, the texts and
// verdicts it produces, and the record that lands in the run log. Field names in
// the JSON form match the run-table schema (id, template, word, temperature,
// seed, similarity, alignment, coherence, novelty, sum, rewake_out, ...).

namespace lucid {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Core value types
// ---------------------------------------------------------------------------

struct ConceptPair {
    std::string x;
    std::string y;
    std::string id;  // short identifier used in reports, e.g. "time_space"

    bool operator==(const ConceptPair&) const = default;
};

// Derives a report-friendly slug from the two concept labels.
inline std::string make_pair_id(std::string_view x, std::string_view y) {
    std::string out;
    auto push = [&out](std::string_view s) {
        for (char c : s) {
            if (std::isalnum(static_cast<unsigned char>(c)))
                out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            else if (!out.empty() && out.back() != '_')
                out.push_back('_');
        }
        while (!out.empty() && out.back() == '_') out.pop_back();
    };
    push(x);
    out.push_back('_');
    push(y);
    return out;
}

struct RunConfig {
    std::int64_t run_id = 0;
    ConceptPair pair;
    int template_id = 1;        // 1..3
    int word_limit = 150;       // Z, words, embedded in the prompt text only
    double dream_temperature = 1.0;
    std::uint64_t seed = 0;
    double wake_temperature = 0.6;
    double judge_temperature = 0.0;

    bool operator==(const RunConfig&) const = default;
};

enum class Stage { wake, dream, rewake };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::wake: return "wake";
        case Stage::dream: return "dream";
        case Stage::rewake: return "rewake";
    }
    return "?";
}

struct StageOutput {
    Stage stage = Stage::wake;
    std::string text;
    std::optional<std::string> idea;  // single extracted sentence, when available

    bool operator==(const StageOutput&) const = default;
};

struct JudgeVerdict {
    int consistency = 1;              // 1..5
    std::optional<std::string> idea;  // absent when the judge reports no novel idea
    std::string raw;                  // verbatim judge reply, kept for audit

    bool operator==(const JudgeVerdict&) const = default;
};

struct ReviewScores {
    int alignment = 1;
    int coherence = 1;
    int novelty = 1;
    int sum = 3;

    // The only sanctioned constructor path: sum is computed, never supplied.
    static ReviewScores of(int alignment, int coherence, int novelty) {
        return ReviewScores{alignment, coherence, novelty, alignment + coherence + novelty};
    }

    bool operator==(const ReviewScores&) const = default;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }

    bool operator==(const EmbeddingVector&) const = default;
};

enum class DreamContext { with_wake, prompt_only };

inline const char* dream_context_name(DreamContext c) {
    return c == DreamContext::with_wake ? "with_wake" : "prompt_only";
}

inline DreamContext dream_context_from(std::string_view name) {
    if (name == "with_wake") return DreamContext::with_wake;
    if (name == "prompt_only") return DreamContext::prompt_only;
    throw ConfigError("unknown dream_context: " + std::string(name));
}

// ---------------------------------------------------------------------------
// RunRecord
// ---------------------------------------------------------------------------

// The persisted outcome of one pipeline run. One JSONL line per record.
struct RunRecord {
    RunConfig config;
    int gate_threshold = 4;
    DreamContext dream_context = DreamContext::with_wake;
    std::string prompt_version;  // empty when unknown (externally produced data)
    std::string config_hash;     // resume key; empty when not computed

    std::string wake_out;
    std::optional<std::string> idea_wake;
    std::string dream_out;
    std::optional<JudgeVerdict> judge;  // absent when the judge never produced a verdict
    bool gated = false;
    std::optional<std::string> rewake_out;
    std::optional<double> similarity;  // cosine(idea_wake, idea_dream)
    std::optional<ReviewScores> review;

    std::optional<std::string> failed_stage;  // wake|dream|judge|rewake|review|internal
    std::optional<std::string> failure;       // message for the failed stage
    std::vector<std::string> annotations;     // non-fatal notes

    std::string started_at;   // ISO 8601 UTC; empty for imported data
    std::string finished_at;
    std::optional<std::string> comment;  // free-text note column

    std::optional<std::string> idea_dream() const {
        return judge ? judge->idea : std::nullopt;
    }

    bool operator==(const RunRecord&) const = default;
};

// Stable fingerprint of everything that determines a run's outputs. Resume
// compares this against the stored record so a changed sweep never silently
// reuses stale results.
inline std::string config_fingerprint(const RunConfig& c, int gate_threshold,
                                      DreamContext dream_context,
                                      const std::string& prompt_version) {
    json j{
        {"x", c.pair.x},
        {"y", c.pair.y},
        {"pair_id", c.pair.id},
        {"template", c.template_id},
        {"word", c.word_limit},
        {"temperature", c.dream_temperature},
        {"seed", c.seed},
        {"wake_temperature", c.wake_temperature},
        {"judge_temperature", c.judge_temperature},
        {"gate_threshold", gate_threshold},
        {"dream_context", dream_context_name(dream_context)},
        {"prompt_version", prompt_version},
    };
    return detail::to_hex16(detail::fnv1a64(j.dump()));
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline void to_json(json& j, const ConceptPair& p) {
    j = json{{"x", p.x}, {"y", p.y}, {"id", p.id}};
}

inline void from_json(const json& j, ConceptPair& p) {
    j.at("x").get_to(p.x);
    j.at("y").get_to(p.y);
    p.id = j.value("id", "");
    if (p.id.empty()) p.id = make_pair_id(p.x, p.y);
}

inline void to_json(json& j, const RunRecord& r) {
    j = json{
        {"id", r.config.run_id},
        {"pair", r.config.pair},
        {"template", r.config.template_id},
        {"word", r.config.word_limit},
        {"temperature", r.config.dream_temperature},
        {"seed", r.config.seed},
        {"wake_temperature", r.config.wake_temperature},
        {"judge_temperature", r.config.judge_temperature},
        {"gate_threshold", r.gate_threshold},
        {"dream_context", dream_context_name(r.dream_context)},
        {"wake_out", r.wake_out},
        {"dream_out", r.dream_out},
        {"gated", r.gated},
    };
    auto set_opt = [&j](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    set_opt("idea_wake", r.idea_wake);
    if (r.judge) {
        j["consistency"] = r.judge->consistency;
        set_opt("idea_dream", r.judge->idea);
        if (!r.judge->raw.empty()) j["judge_raw"] = r.judge->raw;
    }
    set_opt("rewake_out", r.rewake_out);
    set_opt("similarity", r.similarity);
    if (r.review) {
        j["alignment"] = r.review->alignment;
        j["coherence"] = r.review->coherence;
        j["novelty"] = r.review->novelty;
        j["sum"] = r.review->sum;
    }
    set_opt("failed_stage", r.failed_stage);
    set_opt("failure", r.failure);
    if (!r.annotations.empty()) j["annotations"] = r.annotations;
    if (!r.prompt_version.empty()) j["prompt_version"] = r.prompt_version;
    if (!r.config_hash.empty()) j["config_hash"] = r.config_hash;
    if (!r.started_at.empty()) j["started_at"] = r.started_at;
    if (!r.finished_at.empty()) j["finished_at"] = r.finished_at;
    set_opt("comment", r.comment);
}

inline void from_json(const json& j, RunRecord& r) {
    r = RunRecord{};
    j.at("id").get_to(r.config.run_id);
    j.at("pair").get_to(r.config.pair);
    j.at("template").get_to(r.config.template_id);
    j.at("word").get_to(r.config.word_limit);
    j.at("temperature").get_to(r.config.dream_temperature);
    j.at("seed").get_to(r.config.seed);
    r.config.wake_temperature = j.value("wake_temperature", 0.6);
    r.config.judge_temperature = j.value("judge_temperature", 0.0);
    r.gate_threshold = j.value("gate_threshold", 4);
    r.dream_context = dream_context_from(j.value("dream_context", "with_wake"));
    r.wake_out = j.value("wake_out", "");
    r.dream_out = j.value("dream_out", "");
    r.gated = j.value("gated", false);
    auto get_opt_str = [&j](const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        return it->get<std::string>();
    };
    r.idea_wake = get_opt_str("idea_wake");
    if (j.contains("consistency") && !j["consistency"].is_null()) {
        JudgeVerdict v;
        v.consistency = j["consistency"].get<int>();
        v.idea = get_opt_str("idea_dream");
        v.raw = j.value("judge_raw", "");
        r.judge = std::move(v);
    }
    r.rewake_out = get_opt_str("rewake_out");
    if (j.contains("similarity") && !j["similarity"].is_null())
        r.similarity = j["similarity"].get<double>();
    if (j.contains("sum") && !j["sum"].is_null()) {
        ReviewScores s;
        s.alignment = j.at("alignment").get<int>();
        s.coherence = j.at("coherence").get<int>();
        s.novelty = j.at("novelty").get<int>();
        s.sum = j.at("sum").get<int>();  // kept as stored; validate() flags mismatches
        r.review = s;
    }
    r.failed_stage = get_opt_str("failed_stage");
    r.failure = get_opt_str("failure");
    if (j.contains("annotations")) j["annotations"].get_to(r.annotations);
    r.prompt_version = j.value("prompt_version", "");
    r.config_hash = j.value("config_hash", "");
    r.started_at = j.value("started_at", "");
    r.finished_at = j.value("finished_at", "");
    r.comment = get_opt_str("comment");
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Returns human-readable descriptions of every invariant the record breaks.
// Violations are data, not failures: an empty list means the record is sound.
inline std::vector<std::string> validate_record(const RunRecord& r) {
    std::vector<std::string> out;
    const auto& c = r.config;

    if (c.pair.x.empty() || c.pair.y.empty())
        out.push_back("concept pair has an empty label");
    else if (c.pair.x == c.pair.y)
        out.push_back("concept pair labels are not distinct");
    if (c.template_id < 1 || c.template_id > 3)
        out.push_back("template_id outside {1,2,3}");
    if (c.word_limit <= 0) out.push_back("word_limit not positive");
    if (!(c.dream_temperature > 0)) out.push_back("dream_temperature not positive");
    if (c.wake_temperature < 0) out.push_back("wake_temperature negative");
    if (c.judge_temperature < 0) out.push_back("judge_temperature negative");
    if (c.run_id < 0) out.push_back("run_id negative");
    if (r.gate_threshold < 1 || r.gate_threshold > 5)
        out.push_back("gate_threshold outside [1,5]");

    static const char* known_stages[] = {"wake", "dream", "judge", "rewake", "review", "internal"};
    if (r.failed_stage) {
        bool known = false;
        for (const char* s : known_stages) known = known || (*r.failed_stage == s);
        if (!known) out.push_back("unknown failed_stage: " + *r.failed_stage);
    }

    // Completed-prefix requirements: stages before the failure point must have output.
    const std::string failed = r.failed_stage.value_or("");
    const bool wake_required = failed.empty() || (failed != "wake" && failed != "internal");
    const bool dream_required = wake_required && failed != "dream";
    const bool judge_required = dream_required && failed != "judge";
    if (wake_required && r.wake_out.empty()) out.push_back("missing wake_out");
    if (dream_required && r.dream_out.empty()) out.push_back("missing dream_out");
    if (judge_required && !r.judge) out.push_back("missing judge verdict");

    if (r.judge && (r.judge->consistency < 1 || r.judge->consistency > 5))
        out.push_back("consistency outside [1,5]");
    if (r.judge && r.judge->idea && r.judge->idea->empty())
        out.push_back("idea_dream present but empty");
    if (r.idea_wake && r.idea_wake->empty()) out.push_back("idea_wake present but empty");

    const bool should_gate =
        r.judge && r.judge->consistency >= r.gate_threshold && r.judge->idea.has_value();
    if (r.gated != should_gate) out.push_back("gate inconsistency");
    if (r.rewake_out && !r.gated) out.push_back("rewake_out present without a passing gate");
    if (r.rewake_out && r.rewake_out->empty()) out.push_back("rewake_out present but empty");

    if (r.similarity) {
        if (!(r.idea_wake && r.idea_dream()))
            out.push_back("similarity present without both ideas");
        if (!std::isfinite(*r.similarity) || *r.similarity < -1.0 || *r.similarity > 1.0)
            out.push_back("similarity outside [-1,1]");
    }

    if (r.review) {
        const auto& s = *r.review;
        for (int v : {s.alignment, s.coherence, s.novelty})
            if (v < 1 || v > 5) {
                out.push_back("review score outside [1,5]");
                break;
            }
        if (s.sum != s.alignment + s.coherence + s.novelty) out.push_back("sum mismatch");
    }

    return out;
}

}  // namespace lucid
