#pragma once

// Shared test scaffolding: repo paths, a temp-dir guard, independently coded
// statistical oracles, and scripted-registry builders for pipeline tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include <lucid/backends.hpp>
#include <lucid/domain.hpp>
#include <lucid/mock_backends.hpp>

namespace support {

inline std::filesystem::path source_dir() { return LUCID_SOURCE_DIR; }
inline std::filesystem::path fixture_path() {
    return source_dir() / "data" / "fixtures" / "reference_runs.jsonl";
}
inline std::filesystem::path prompts_dir() { return source_dir() / "prompts"; }

class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::mt19937_64 rng(std::random_device{}());
        path_ = base / ("lucid_test_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

// ---------------------------------------------------------------------------
// Oracles, written independently of the library implementations
// ---------------------------------------------------------------------------

inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Ranks by counting: rank(x_i) = #smaller + (#equal + 1) / 2.
inline std::vector<double> oracle_ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double smaller = 0, equal = 0;
        for (double v : x) {
            if (v < x[i]) ++smaller;
            if (v == x[i]) ++equal;
        }
        r[i] = smaller + (equal + 1.0) / 2.0;
    }
    return r;
}

inline double oracle_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        dx += (x[i] - mx) * (x[i] - mx);
        dy += (y[i] - my) * (y[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

inline double oracle_spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    return oracle_pearson(oracle_ranks(x), oracle_ranks(y));
}

// U by direct pair counting.
inline double oracle_u(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double av : a)
        for (double bv : b) {
            if (av > bv) u += 1.0;
            else if (av == bv) u += 0.5;
        }
    return u;
}

// Exact two-sided p over every assignment of group labels to the pooled
// sample, with U recomputed by pair counting each time.
inline double oracle_mwu_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled(a);
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), n1 = a.size();
    const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n - n1);
    const double target = std::abs(oracle_u(a, b) - mu);

    std::uint64_t extreme = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::size_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) bits += (mask >> i) & 1;
        if (bits != n1) continue;
        std::vector<double> ga, gb;
        for (std::size_t i = 0; i < n; ++i)
            ((mask >> i) & 1 ? ga : gb).push_back(pooled[i]);
        ++total;
        if (std::abs(oracle_u(ga, gb) - mu) >= target - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Scripted registry builders
// ---------------------------------------------------------------------------

inline std::string judge_json(int consistency, const char* idea) {
    nlohmann::json j;
    j["consistency"] = consistency;
    if (idea)
        j["idea"] = idea;
    else
        j["idea"] = nullptr;
    return j.dump();
}

inline std::string review_json(int a, int c, int n) {
    return nlohmann::json{{"alignment", a}, {"coherence", c}, {"novelty", n}}.dump();
}

// A registry whose wake/dream/rewake backends echo fixed sentinel texts and
// whose judge recognizes them. Tests adjust the scripts before running. The
// registry lives behind a pointer (it holds a mutex) so worlds stay movable.
struct ScriptedWorld {
    std::shared_ptr<lucid::ScriptedBackend> wake =
        std::make_shared<lucid::ScriptedBackend>("scripted-wake");
    std::shared_ptr<lucid::ScriptedBackend> dream =
        std::make_shared<lucid::ScriptedBackend>("scripted-dream");
    std::shared_ptr<lucid::ScriptedBackend> judge =
        std::make_shared<lucid::ScriptedBackend>("scripted-judge");
    std::shared_ptr<lucid::ScriptedBackend> rewake =
        std::make_shared<lucid::ScriptedBackend>("scripted-rewake");
    std::shared_ptr<lucid::ScriptedBackend> review =
        std::make_shared<lucid::ScriptedBackend>("scripted-review");
    std::unique_ptr<lucid::BackendRegistry> registry_ptr =
        std::make_unique<lucid::BackendRegistry>();
    lucid::BackendRegistry& registry = *registry_ptr;

    ScriptedWorld() {
        registry.bind(lucid::Role::wake, wake);
        registry.bind(lucid::Role::dream, dream);
        registry.bind(lucid::Role::judge, judge);
        registry.bind(lucid::Role::rewake, rewake);
        registry.bind(lucid::Role::review, review);
        registry.set_retry(3, std::chrono::milliseconds(0));
    }
    ScriptedWorld(ScriptedWorld&&) = default;
};

// Happy-path scripts: wake answers WAKE_SENTINEL, dream answers
// DREAM_SENTINEL, the judge extracts ideas from both, re-wake consolidates.
inline constexpr const char* kWakeSentinel = "WAKE_SENTINEL stable baseline answer.";
inline constexpr const char* kDreamSentinel = "DREAM_SENTINEL exploratory answer.";
inline constexpr const char* kRewakeSentinel = "REWAKE_SENTINEL consolidated answer.";
inline constexpr const char* kWakeIdea = "WAKE_SENTINEL idea sentence.";
inline constexpr const char* kDreamIdea = "DREAM_SENTINEL idea sentence.";

// Sentinel texts scripted, judge left untouched: tests add their own judge
// replies (the scripted judge queues entries per key, so layering replies on
// top of an already-scripted key would not override it).
inline ScriptedWorld world_without_judge() {
    ScriptedWorld w;
    w.wake->otherwise(kWakeSentinel);
    w.dream->otherwise(kDreamSentinel);
    w.rewake->otherwise(kRewakeSentinel);
    w.review->otherwise(review_json(5, 5, 4));
    return w;
}

// As above plus wake-idea extraction; only the dream verdict is left open.
inline ScriptedWorld world_without_verdict() {
    auto w = world_without_judge();
    w.judge->reply("WAKE_SENTINEL", judge_json(5, kWakeIdea));
    return w;
}

inline ScriptedWorld happy_world() {
    auto w = world_without_verdict();
    w.judge->reply("DREAM_SENTINEL", judge_json(5, kDreamIdea));
    return w;
}

inline lucid::RunConfig basic_config(std::int64_t id = 1) {
    lucid::RunConfig c;
    c.run_id = id;
    c.pair = {"time", "space", "time_space"};
    c.template_id = 3;
    c.word_limit = 150;
    c.dream_temperature = 1.0;
    c.seed = 0;
    return c;
}

}  // namespace support
