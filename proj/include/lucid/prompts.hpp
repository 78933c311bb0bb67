#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "lucid/domain.hpp"
#include "lucid/errors.hpp"

// Prompt templates for every stage. Templates are plain text with {name}
// placeholders; render() substitutes each placeholder exactly once and never
// rescans substituted values, so braces inside model-produced text cannot
// inject further expansion. Unknown brace groups (e.g. JSON examples inside
// the judge instructions) pass through untouched.

namespace lucid {

struct PromptPack {
    std::string version;
    std::array<std::string, 3> ideation;  // index 0 = template 1
    std::string judge;
    std::string rewake;
    std::string review;
    std::string dream_context;

    bool operator==(const PromptPack&) const = default;

    static PromptPack builtin();
    static PromptPack load_dir(const std::filesystem::path& dir);
};

// Single-pass placeholder substitution.
inline std::string render(std::string_view tmpl,
                          const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                std::string key(tmpl.substr(i + 1, close - i - 1));
                auto it = values.find(key);
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

inline PromptPack PromptPack::builtin() {
    PromptPack p;
    p.version = "v1";
    p.ideation = {
        "Compare the meaning of {x} and {y} within {z} words.",
        "Describe the unexpected relationship between {x} and {y} within {z} words.",
        "Propose a new idea about the relationship between {x} and {y} within {z} words.",
    };
    p.judge =
        "You are a strict evaluator. The candidate text appears between <<< and >>>.\n"
        "Rate its logical consistency on a scale from 1 (incoherent) to 5 (fully"
        " consistent).\n"
        "Then pick the one sentence that states its most novel idea; if no idea"
        " stands out, use null.\n"
        "Respond with only a JSON object of the form"
        " {\"consistency\": <1-5>, \"idea\": <sentence or null>}.\n"
        "<<<\n"
        "{text}\n"
        ">>>";
    p.rewake =
        "The original task was: {prompt}\n"
        "A promising idea emerged from exploration: {idea}\n"
        "Elaborate this idea into a complete response to the original task"
        " within {budget} words.";
    p.review =
        "You are reviewing a response to a writing task.\n"
        "Task: {prompt}\n"
        "Response: {output}\n"
        "Score the response from 1 to 5 on each axis: alignment with the task,"
        " internal coherence, and novelty.\n"
        "Respond with only a JSON object of the form"
        " {\"alignment\": <1-5>, \"coherence\": <1-5>, \"novelty\": <1-5>}.";
    p.dream_context =
        "Earlier response, for context:\n"
        "{context}\n"
        "\n"
        "Now answer freshly: {prompt}";
    return p;
}

namespace detail_prompts {

inline std::string read_template_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read prompt file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string s = ss.str();
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

}  // namespace detail_prompts

inline PromptPack PromptPack::load_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ConfigError("prompt directory not found: " + dir.string());
    PromptPack p;
    p.version = detail_prompts::read_template_file(dir / "VERSION");
    for (int i = 0; i < 3; ++i)
        p.ideation[static_cast<std::size_t>(i)] = detail_prompts::read_template_file(
            dir / ("ideation_" + std::to_string(i + 1) + ".txt"));
    p.judge = detail_prompts::read_template_file(dir / "judge.txt");
    p.rewake = detail_prompts::read_template_file(dir / "rewake.txt");
    p.review = detail_prompts::read_template_file(dir / "review.txt");
    p.dream_context = detail_prompts::read_template_file(dir / "dream_context.txt");
    if (p.version.empty()) throw ConfigError("prompt pack VERSION is empty");
    return p;
}

// ---------------------------------------------------------------------------
// Stage prompt builders
// ---------------------------------------------------------------------------

inline std::string make_ideation_prompt(const PromptPack& pack, int template_id,
                                        const ConceptPair& pair, int word_limit) {
    if (template_id < 1 || template_id > 3)
        throw ConfigError("template_id outside {1,2,3}");
    return render(pack.ideation[static_cast<std::size_t>(template_id - 1)],
                  {{"x", pair.x}, {"y", pair.y}, {"z", std::to_string(word_limit)}});
}

// Dream sees the wake output as context by default; the prompt_only variant
// reuses the bare ideation prompt for ablation runs.
inline std::string make_dream_prompt(const PromptPack& pack, const std::string& ideation_prompt,
                                     const std::string& wake_out, DreamContext mode) {
    if (mode == DreamContext::prompt_only) return ideation_prompt;
    return render(pack.dream_context, {{"context", wake_out}, {"prompt", ideation_prompt}});
}

inline std::string make_judge_prompt(const PromptPack& pack, const std::string& candidate) {
    return render(pack.judge, {{"text", candidate}});
}

inline std::string make_rewake_prompt(const PromptPack& pack, const std::string& original_prompt,
                                      const std::string& idea, int budget_words) {
    return render(pack.rewake, {{"prompt", original_prompt},
                                {"idea", idea},
                                {"budget", std::to_string(budget_words)}});
}

inline std::string make_review_prompt(const PromptPack& pack, const std::string& original_prompt,
                                      const std::string& rewake_out) {
    return render(pack.review, {{"prompt", original_prompt}, {"output", rewake_out}});
}

}  // namespace lucid
