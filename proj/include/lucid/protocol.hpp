#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "lucid/backends.hpp"
#include "lucid/detail/util.hpp"
#include "lucid/domain.hpp"
#include "lucid/errors.hpp"

// Structured-output protocol shared by the judge and the reviewer: pull the
// first JSON object out of a chatty reply, parse it against a strict schema,
// and re-ask a bounded number of times when the model ignores the format.

namespace lucid {

// Locates the first balanced {...} in free-form text, skipping code fences and
// respecting string literals and escapes. Returns nothing when no complete
// object is present.
inline std::optional<std::string> extract_json_object(const std::string& text) {
    std::string stripped;
    stripped.reserve(text.size());
    // Drop Markdown fence lines so ```json wrappers cannot confuse parsing.
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::size_t len = (eol == std::string::npos ? text.size() : eol) - pos;
        std::string_view line(text.data() + pos, len);
        auto t = detail::trim(line);
        if (!detail::starts_with(t, "```")) {
            stripped.append(line);
            stripped.push_back('\n');
        }
        pos = (eol == std::string::npos) ? text.size() : eol + 1;
    }

    std::size_t start = stripped.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < stripped.size(); ++i) {
            char c = stripped[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (--depth == 0) return stripped.substr(start, i - start + 1);
            }
        }
        start = stripped.find('{', start + 1);
    }
    return std::nullopt;
}

// Strict judge schema: {"consistency": <integer 1..5>, "idea": <string|null>}.
// A missing, null or empty idea means "no idea"; unknown extra keys are
// tolerated. On failure the reason lands in `error`.
inline std::optional<JudgeVerdict> try_parse_judge(const std::string& raw, std::string& error) {
    auto obj = extract_json_object(raw);
    if (!obj) {
        error = "no JSON object in reply";
        return std::nullopt;
    }
    nlohmann::json j = nlohmann::json::parse(*obj, nullptr, false);
    if (j.is_discarded()) {
        error = "invalid JSON";
        return std::nullopt;
    }
    auto it = j.find("consistency");
    if (it == j.end() || !it->is_number_integer()) {
        error = "consistency missing or not an integer";
        return std::nullopt;
    }
    int consistency = it->get<int>();
    if (consistency < 1 || consistency > 5) {
        error = "consistency outside [1,5]";
        return std::nullopt;
    }
    JudgeVerdict v;
    v.consistency = consistency;
    v.raw = raw;
    auto idea_it = j.find("idea");
    if (idea_it != j.end() && !idea_it->is_null()) {
        if (!idea_it->is_string()) {
            error = "idea is neither string nor null";
            return std::nullopt;
        }
        std::string idea = idea_it->get<std::string>();
        if (!std::string(detail::trim(idea)).empty()) v.idea = std::move(idea);
    }
    return v;
}

// Strict review schema: three integer scores in 1..5. The sum is always
// recomputed here, never trusted from the reply.
inline std::optional<ReviewScores> try_parse_review(const std::string& raw, std::string& error) {
    auto obj = extract_json_object(raw);
    if (!obj) {
        error = "no JSON object in reply";
        return std::nullopt;
    }
    nlohmann::json j = nlohmann::json::parse(*obj, nullptr, false);
    if (j.is_discarded()) {
        error = "invalid JSON";
        return std::nullopt;
    }
    int scores[3];
    const char* keys[3] = {"alignment", "coherence", "novelty"};
    for (int i = 0; i < 3; ++i) {
        auto it = j.find(keys[i]);
        if (it == j.end() || !it->is_number_integer()) {
            error = std::string(keys[i]) + " missing or not an integer";
            return std::nullopt;
        }
        scores[i] = it->get<int>();
        if (scores[i] < 1 || scores[i] > 5) {
            error = std::string(keys[i]) + " outside [1,5]";
            return std::nullopt;
        }
    }
    return ReviewScores::of(scores[0], scores[1], scores[2]);
}

inline constexpr const char* kFormatReminder = "Respond with only the JSON object.";

// Runs the ask/parse/re-ask loop. Each failed parse appends the format
// reminder to the prompt (cumulatively, so repeat offenders see it stacked)
// and asks again, up to max_reasks extra rounds. Exhaustion raises
// BackendError carrying the last parse failure.
template <typename Parser>
auto ask_structured(BackendRegistry& registry, Role role, std::string prompt, double temperature,
                    std::optional<std::uint64_t> seed, int max_reasks, Parser parse) {
    std::string error;
    std::string last_reply;
    for (int round = 0; round <= max_reasks; ++round) {
        if (round > 0) {
            prompt += "\n";
            prompt += kFormatReminder;
        }
        last_reply = registry.generate(role, prompt, temperature, seed);
        if (auto parsed = parse(last_reply, error)) return *parsed;
    }
    std::string snippet = last_reply.substr(0, 120);
    throw BackendError(std::string(role_name(role)) + " protocol failure after " +
                       std::to_string(max_reasks + 1) + " asks: " + error +
                       "; last reply: " + snippet);
}

}  // namespace lucid
