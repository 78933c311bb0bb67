#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lucid/backends.hpp"
#include "lucid/detail/util.hpp"
#include "lucid/errors.hpp"
#include "lucid/http_backend.hpp"
#include "lucid/mock_backends.hpp"
#include "lucid/pipeline.hpp"
#include "lucid/prompts.hpp"
#include "lucid/review.hpp"
#include "lucid/sweep.hpp"

// Declarative engine configuration: one JSON file describes the per-role
// backends, sweep grid, gate settings and file locations. The effective
// (post-override) document is echoed into every run log header, so a sweep is
// reconstructible from its log alone. Credentials never appear here; a role
// declaration names the environment variable that holds its key.

namespace lucid {

struct EngineConfig {
    json raw;  // effective config document, echoed into log headers

    std::filesystem::path log_path;
    std::filesystem::path report_dir = "reports";
    std::optional<std::filesystem::path> prompt_dir;

    PipelineOptions pipeline;
    ReviewOptions review;
    int high_quality_threshold = kDefaultQualityThreshold;
    int jobs = 1;
    int max_retries = 3;
    int backoff_ms = 100;

    SweepSpec sweep;
    bool has_sweep = false;

    json roles;      // per-role declarations, by role name
    json embedding;  // embedder declaration; null when absent
};

namespace detail_config {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& context) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key \"" + key + "\" in " + context);
}

inline const json& require(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(context + " is missing \"" + key + "\"");
    return *it;
}

}  // namespace detail_config

// ---------------------------------------------------------------------------
// Backend construction
// ---------------------------------------------------------------------------

inline HttpOptions parse_http_options(const json& decl, const std::string& context) {
    HttpOptions opts;
    opts.base_url = detail_config::require(decl, "base_url", context).get<std::string>();
    opts.model = detail_config::require(decl, "model", context).get<std::string>();
    opts.api_key_env = decl.value("api_key_env", "");
    if (decl.contains("profile"))
        opts.caps = capability_profile(decl["profile"].get<std::string>());
    opts.caps.max_temperature = decl.value("max_temperature", opts.caps.max_temperature);
    opts.caps.supports_seed = decl.value("supports_seed", opts.caps.supports_seed);
    opts.timeout_s = decl.value("timeout_s", 120);
    return opts;
}

inline std::shared_ptr<GenerationBackend> make_generation_backend(const json& decl,
                                                                  const std::string& context) {
    if (!decl.is_object()) throw ConfigError(context + " must be an object");
    const std::string type = detail_config::require(decl, "type", context).get<std::string>();
    if (type == "openai") {
        detail_config::check_keys(decl,
                                  {"type", "base_url", "model", "api_key_env", "profile",
                                   "max_temperature", "supports_seed", "timeout_s"},
                                  context);
        return std::make_shared<OpenAiHttpBackend>(parse_http_options(decl, context));
    }
    if (type == "stochastic") {
        detail_config::check_keys(decl, {"type", "model", "max_temperature", "supports_seed"},
                                  context);
        return std::make_shared<SeededStochasticBackend>(
            decl.value("model", "stochastic-mock"), decl.value("max_temperature", 100.0),
            decl.value("supports_seed", true));
    }
    if (type == "mock-judge") {
        detail_config::check_keys(decl, {"type", "model"}, context);
        return std::make_shared<MockJudgeBackend>(decl.value("model", "mock-judge"));
    }
    if (type == "mock-review") {
        detail_config::check_keys(decl, {"type", "model"}, context);
        return std::make_shared<MockReviewBackend>(decl.value("model", "mock-review"));
    }
    throw ConfigError(context + " has unknown backend type \"" + type + "\"");
}

inline std::shared_ptr<EmbeddingBackend> make_embedding_backend(const json& decl,
                                                                const std::string& context) {
    if (!decl.is_object()) throw ConfigError(context + " must be an object");
    const std::string type = detail_config::require(decl, "type", context).get<std::string>();
    if (type == "openai") {
        detail_config::check_keys(decl, {"type", "base_url", "model", "api_key_env", "timeout_s"},
                                  context);
        return std::make_shared<OpenAiEmbeddingBackend>(parse_http_options(decl, context));
    }
    if (type == "hash") {
        detail_config::check_keys(decl, {"type", "dim", "model"}, context);
        return std::make_shared<HashEmbeddingBackend>(decl.value("dim", std::size_t{64}),
                                                      decl.value("model", "hash-embed"));
    }
    throw ConfigError(context + " has unknown embedding type \"" + type + "\"");
}

// Instantiates every declared backend and binds it. An {"alias": "<role>"}
// declaration shares the target role's instance, the usual way to give
// re-wake the wake model.
inline void build_registry(const EngineConfig& cfg, BackendRegistry& registry) {
    static const char* kRoles[] = {"wake", "dream", "judge", "rewake", "review"};

    std::map<std::string, std::shared_ptr<GenerationBackend>> direct;
    for (const char* role : kRoles) {
        auto it = cfg.roles.find(role);
        if (it == cfg.roles.end())
            throw ConfigError(std::string("config declares no backend for role ") + role);
        if (!it->contains("alias"))
            direct[role] = make_generation_backend(*it, std::string("roles.") + role);
    }
    // Aliases resolve only against directly declared roles: no alias chains.
    std::map<std::string, std::shared_ptr<GenerationBackend>> bound = direct;
    for (const char* role : kRoles) {
        const json& decl = cfg.roles.at(role);
        if (!decl.contains("alias")) continue;
        detail_config::check_keys(decl, {"alias"}, std::string("roles.") + role);
        const std::string target = decl["alias"].get<std::string>();
        auto it = direct.find(target);
        if (it == direct.end())
            throw ConfigError(std::string("roles.") + role + " aliases \"" + target +
                              "\", which is not a directly declared role");
        bound[role] = it->second;
    }
    for (const char* role : kRoles) registry.bind(role_from(role), bound.at(role));

    if (!cfg.embedding.is_null())
        registry.bind_embedder(make_embedding_backend(cfg.embedding, "embedding"));

    registry.set_retry(cfg.max_retries, std::chrono::milliseconds(cfg.backoff_ms));
}

inline PromptPack load_prompts(const EngineConfig& cfg) {
    return cfg.prompt_dir ? PromptPack::load_dir(*cfg.prompt_dir) : PromptPack::builtin();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline SweepSpec parse_sweep_spec(const json& j) {
    detail_config::check_keys(j,
                              {"pairs", "template_ids", "word_limits", "temperatures", "seeds",
                               "run_id_base", "wake_temperature", "judge_temperature"},
                              "sweep");
    SweepSpec spec;
    for (const json& p : detail_config::require(j, "pairs", "sweep")) {
        detail_config::check_keys(p, {"x", "y", "id", "run_id_base"}, "sweep.pairs entry");
        SweepPair sp;
        sp.pair.x = detail_config::require(p, "x", "sweep pair").get<std::string>();
        sp.pair.y = detail_config::require(p, "y", "sweep pair").get<std::string>();
        sp.pair.id = p.value("id", make_pair_id(sp.pair.x, sp.pair.y));
        if (p.contains("run_id_base")) sp.run_id_base = p["run_id_base"].get<std::int64_t>();
        spec.pairs.push_back(std::move(sp));
    }
    if (j.contains("template_ids")) spec.template_ids = j["template_ids"].get<std::vector<int>>();
    if (j.contains("word_limits")) spec.word_limits = j["word_limits"].get<std::vector<int>>();
    if (j.contains("temperatures"))
        spec.temperatures = j["temperatures"].get<std::vector<double>>();
    if (j.contains("seeds")) spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    spec.run_id_base = j.value("run_id_base", std::int64_t{0});
    spec.wake_temperature = j.value("wake_temperature", 0.6);
    spec.judge_temperature = j.value("judge_temperature", 0.0);
    validate_spec(spec);
    return spec;
}

inline EngineConfig parse_engine_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    detail_config::check_keys(doc,
                              {"log", "report_dir", "prompt_dir", "gate_threshold",
                               "dream_context", "rewake_extra_words", "judge_max_reasks",
                               "review_temperature", "review_max_reasks",
                               "high_quality_threshold", "jobs", "max_retries", "backoff_ms",
                               "roles", "embedding", "sweep"},
                              "config");
    EngineConfig cfg;
    cfg.raw = doc;
    cfg.log_path = detail_config::require(doc, "log", "config").get<std::string>();
    cfg.report_dir = doc.value("report_dir", std::string("reports"));
    if (doc.contains("prompt_dir"))
        cfg.prompt_dir = std::filesystem::path(doc["prompt_dir"].get<std::string>());

    cfg.pipeline.gate_threshold = doc.value("gate_threshold", 4);
    cfg.pipeline.dream_context = dream_context_from(doc.value("dream_context", "with_wake"));
    cfg.pipeline.rewake_extra_words = doc.value("rewake_extra_words", 100);
    cfg.pipeline.judge_max_reasks = doc.value("judge_max_reasks", 2);

    cfg.review.temperature = doc.value("review_temperature", 0.0);
    cfg.review.max_reasks = doc.value("review_max_reasks", 2);

    cfg.high_quality_threshold = doc.value("high_quality_threshold", kDefaultQualityThreshold);
    cfg.jobs = doc.value("jobs", 1);
    if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");
    cfg.max_retries = doc.value("max_retries", 3);
    cfg.backoff_ms = doc.value("backoff_ms", 100);

    cfg.roles = detail_config::require(doc, "roles", "config");
    if (!cfg.roles.is_object()) throw ConfigError("roles must be an object");
    detail_config::check_keys(cfg.roles, {"wake", "dream", "judge", "rewake", "review"}, "roles");
    cfg.embedding = doc.value("embedding", json());

    if (doc.contains("sweep")) {
        cfg.sweep = parse_sweep_spec(doc["sweep"]);
        cfg.has_sweep = true;
    }
    return cfg;
}

inline EngineConfig load_engine_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    return parse_engine_config(doc);
}

// Applies a dotted-path override like "roles.wake.model=gemma" or
// "sweep.temperatures=[1,3]". The value is parsed as JSON when possible and
// falls back to a plain string.
inline void apply_override(json& doc, const std::string& dotted_key, const std::string& value) {
    json* cur = &doc;
    std::size_t pos = 0;
    while (true) {
        std::size_t dot = dotted_key.find('.', pos);
        std::string part = dotted_key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) throw ConfigError("bad override path: " + dotted_key);
        if (!cur->is_object() && !cur->is_null())
            throw ConfigError("override path " + dotted_key + " crosses a non-object");
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*cur)[part] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        cur = &(*cur)[part];
        pos = dot + 1;
    }
}

// Header payload stored in each log. The "config" member is what resume
// compares, so it carries the full effective document and nothing volatile.
inline json make_header_payload(const EngineConfig& cfg) {
    return json{{"format", "runlog/1"},
                {"created_at", detail::iso8601_utc_now()},
                {"config", cfg.raw}};
}

}  // namespace lucid
