#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lucid/backends.hpp"
#include "lucid/detail/util.hpp"
#include "lucid/errors.hpp"

// Offline backends. ScriptedBackend drives protocol-level tests; the seeded
// stochastic generator plus the mock judge, reviewer and hash embedder form a
// fully deterministic profile that exercises the whole pipeline without any
// network access.

namespace lucid {

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

// Replays canned replies. Keys are matched as substrings of the incoming
// prompt, in the order they were registered; each key holds a queue of
// entries consumed one per call (the last entry repeats once exhausted).
class ScriptedBackend : public GenerationBackend {
public:
    explicit ScriptedBackend(std::string model = "scripted", double max_temp = 100.0,
                             bool seeded = true)
        : model_(std::move(model)), max_temperature_(max_temp), supports_seed_(seeded) {}

    ScriptedBackend& reply(std::string key, std::string text) {
        push(std::move(key), Entry{Entry::kReply, std::move(text)});
        return *this;
    }

    ScriptedBackend& fail_transport(std::string key, std::string message = "scripted outage") {
        push(std::move(key), Entry{Entry::kTransport, std::move(message)});
        return *this;
    }

    ScriptedBackend& reply_empty(std::string key) {
        push(std::move(key), Entry{Entry::kEmpty, ""});
        return *this;
    }

    ScriptedBackend& otherwise(std::string text) {
        std::lock_guard<std::mutex> lock(mutex_);
        fallback_ = std::move(text);
        return *this;
    }

    std::string generate(const GenerationRequest& req) override {
        std::lock_guard<std::mutex> lock(mutex_);
        for (auto& key : key_order_) {
            if (req.prompt.find(key) == std::string::npos) continue;
            auto& queue = scripts_[key];
            Entry e = queue.front();
            if (queue.size() > 1) queue.pop_front();
            switch (e.kind) {
                case Entry::kReply: return e.text;
                case Entry::kTransport: throw TransportError(e.text);
                case Entry::kEmpty: return "";
            }
        }
        if (fallback_) return *fallback_;
        throw BackendError("no scripted reply matches prompt");
    }

    std::string model_name() const override { return model_; }
    double max_temperature() const override { return max_temperature_; }
    bool supports_seed() const override { return supports_seed_; }

private:
    struct Entry {
        enum Kind { kReply, kTransport, kEmpty } kind;
        std::string text;
    };

    void push(std::string key, Entry e) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!scripts_.count(key)) key_order_.push_back(key);
        scripts_[key].push_back(std::move(e));
    }

    std::string model_;
    double max_temperature_;
    bool supports_seed_;
    std::mutex mutex_;
    std::vector<std::string> key_order_;
    std::map<std::string, std::deque<Entry>> scripts_;
    std::optional<std::string> fallback_;
};

// ---------------------------------------------------------------------------
// SeededStochasticBackend
// ---------------------------------------------------------------------------

namespace detail_mock {

inline const std::vector<std::string>& base_vocab() {
    static const std::vector<std::string> v = {
        "the",     "a",      "of",      "and",   "to",      "in",    "is",    "that",
        "it",      "as",     "with",    "for",   "on",      "by",    "this",  "between",
        "are",     "from",   "or",      "an",    "at",      "its",   "into",  "about",
        "through", "over",   "under",   "each",  "their",   "while", "when",  "where",
        "which",   "both",   "more",    "most",  "some",    "such",  "than",  "then",
        "so",      "if",     "not",     "also",  "can",     "may",   "often", "still",
        "shapes",  "shares", "carries", "holds", "becomes", "links", "forms", "meets",
    };
    return v;
}

inline const std::vector<std::string>& extended_vocab() {
    static const std::vector<std::string> v = {
        "pattern",   "structure",    "boundary",  "symmetry",  "memory",    "horizon",
        "lattice",   "ritual",       "threshold", "echo",      "fracture",  "order",
        "chaos",     "signal",       "texture",   "rhythm",    "mirror",    "cycle",
        "drift",     "field",        "grain",     "layer",     "margin",    "vector",
        "pulse",     "web",          "seam",      "knot",      "twist",     "fold",
        "spiral",    "glyph",        "cipher",    "mosaic",    "tessera",   "orbit",
        "flux",      "resonance",    "gradient",  "contour",   "vestige",   "relic",
        "scaffold",  "filament",     "strata",    "prism",     "facet",     "quanta",
        "myth",      "augury",       "omen",      "totem",     "loom",      "weave",
        "thread",    "shuttle",      "tile",      "quasicrystal", "period", "interval",
        "divination","archetype",    "catalyst",  "element",   "affinity",  "valence",
        "symbol",    "arcana",       "emergence", "recursion", "entropy",   "infinity",
        "continuum", "duration",     "instant",   "expanse",   "locus",     "coordinate",
        "metric",    "curvature",    "tempo",     "cadence",   "syntax",    "lexicon",
        "grammar",   "dialect",      "artifact",  "patina",    "kiln",      "forge",
        "anvil",     "chisel",       "gesture",   "trace",     "imprint",   "residue",
    };
    return v;
}

inline std::vector<std::string> prompt_words(const std::string& prompt) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 4 && out.size() < 20 && seen.insert(cur).second) out.push_back(cur);
        cur.clear();
    };
    for (char c : prompt) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            flush();
    }
    flush();
    return out;
}

}  // namespace detail_mock

// Deterministic text generator: the output is a pure function of prompt,
// temperature, seed and role. Temperature widens the working vocabulary, so
// hotter samples share fewer n-grams with cooler ones; words lifted from the
// prompt keep every stage loosely on topic.
class SeededStochasticBackend : public GenerationBackend {
public:
    explicit SeededStochasticBackend(std::string model = "stochastic-mock",
                                     double max_temp = 100.0, bool seeded = true)
        : model_(std::move(model)), max_temperature_(max_temp), supports_seed_(seeded) {}

    std::string generate(const GenerationRequest& req) override {
        std::uint64_t h = detail::fnv1a64(req.prompt);
        h = detail::fnv1a64(role_name(req.role), h);
        char temp_buf[32];
        std::snprintf(temp_buf, sizeof(temp_buf), "%.6g", req.temperature);
        h = detail::fnv1a64(temp_buf, h);
        if (req.seed) h ^= 0x9e3779b97f4a7c15ull * (*req.seed + 1);
        std::mt19937_64 rng(h);

        const auto& base = detail_mock::base_vocab();
        const auto& extended = detail_mock::extended_vocab();
        const auto topical = detail_mock::prompt_words(req.prompt);

        double frac = std::min(1.0, req.temperature / 10.0);
        std::size_t extended_allowed =
            static_cast<std::size_t>(frac * static_cast<double>(extended.size()));

        auto pick = [&]() -> const std::string& {
            std::uint64_t roll = rng() % 100;
            if (!topical.empty() && roll < 30) return topical[rng() % topical.size()];
            if (extended_allowed > 0 && roll < 60) return extended[rng() % extended_allowed];
            return base[rng() % base.size()];
        };

        std::string out;
        std::size_t sentences = 4 + rng() % 3;
        for (std::size_t s = 0; s < sentences; ++s) {
            std::size_t words = 8 + rng() % 7;
            for (std::size_t w = 0; w < words; ++w) {
                std::string word = pick();
                if (w == 0 && !word.empty())
                    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
                if (w > 0) out.push_back(' ');
                out += word;
            }
            out += ". ";
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    std::string model_name() const override { return model_; }
    double max_temperature() const override { return max_temperature_; }
    bool supports_seed() const override { return supports_seed_; }

private:
    std::string model_;
    double max_temperature_;
    bool supports_seed_;
};

// ---------------------------------------------------------------------------
// MockJudgeBackend
// ---------------------------------------------------------------------------

// Parses the candidate text out of the judge prompt (between the <<< >>>
// markers the judge template uses), answers with schema-correct JSON, and
// derives a deterministic verdict from a hash of the candidate so a small,
// repeatable fraction of runs scores below the gate or reports no idea.
class MockJudgeBackend : public GenerationBackend {
public:
    explicit MockJudgeBackend(std::string model = "mock-judge") : model_(std::move(model)) {}

    std::string generate(const GenerationRequest& req) override {
        std::string candidate = extract_candidate(req.prompt);
        std::uint64_t h = detail::fnv1a64(candidate);
        nlohmann::json reply;
        if (h % 17 == 0) {
            reply = {{"consistency", 3}, {"idea", nullptr}};
        } else {
            reply["consistency"] = (h % 5 == 0) ? 4 : 5;
            reply["idea"] = first_sentence(candidate);
        }
        return reply.dump();
    }

    std::string model_name() const override { return model_; }
    double max_temperature() const override { return 100.0; }

    static std::string extract_candidate(const std::string& prompt) {
        std::size_t open = prompt.find("<<<");
        std::size_t close = prompt.rfind(">>>");
        if (open == std::string::npos || close == std::string::npos || close <= open)
            return std::string(detail::trim(prompt));
        return std::string(detail::trim(prompt.substr(open + 3, close - open - 3)));
    }

    static std::string first_sentence(const std::string& text) {
        std::size_t dot = text.find('.');
        std::string s = dot == std::string::npos ? text : text.substr(0, dot + 1);
        return std::string(detail::trim(s));
    }

private:
    std::string model_;
};

// ---------------------------------------------------------------------------
// MockReviewBackend
// ---------------------------------------------------------------------------

// Deterministic reviewer: scores hash out of the prompt into the 3..5 band so
// sweeps produce a realistic mix of records above and below typical quality
// thresholds.
class MockReviewBackend : public GenerationBackend {
public:
    explicit MockReviewBackend(std::string model = "mock-review") : model_(std::move(model)) {}

    std::string generate(const GenerationRequest& req) override {
        std::uint64_t h = detail::fnv1a64(req.prompt);
        nlohmann::json reply = {
            {"alignment", 3 + static_cast<int>((h >> 8) % 3)},
            {"coherence", 3 + static_cast<int>((h >> 24) % 3)},
            {"novelty", 3 + static_cast<int>((h >> 40) % 3)},
        };
        return reply.dump();
    }

    std::string model_name() const override { return model_; }
    double max_temperature() const override { return 100.0; }

private:
    std::string model_;
};

// ---------------------------------------------------------------------------
// HashEmbeddingBackend
// ---------------------------------------------------------------------------

// Character-trigram hashing embedder. Texts sharing surface vocabulary land
// near each other, identical texts map to identical vectors, and no model is
// needed. Vectors are L2-normalized.
class HashEmbeddingBackend : public EmbeddingBackend {
public:
    explicit HashEmbeddingBackend(std::size_t dim = 64, std::string model = "hash-embed")
        : dim_(dim), model_(std::move(model)) {
        if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
    }

    EmbeddingVector embed(const std::string& text) override {
        if (text.empty()) throw std::invalid_argument("cannot embed empty text");
        std::string lowered;
        lowered.reserve(text.size());
        for (char c : text)
            lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

        EmbeddingVector v;
        v.values.assign(dim_, 0.0);
        auto bump = [&](std::string_view gram) {
            std::uint64_t h = detail::fnv1a64(gram);
            double sign = ((h >> 32) & 1) ? 1.0 : -1.0;
            v.values[h % dim_] += sign;
        };
        if (lowered.size() < 3) {
            bump(lowered);
        } else {
            for (std::size_t i = 0; i + 3 <= lowered.size(); ++i)
                bump(std::string_view(lowered).substr(i, 3));
        }

        double norm = 0.0;
        for (double x : v.values) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            // Pathological collision: fall back to a unit vector keyed on the text.
            v.values[detail::fnv1a64(lowered) % dim_] = 1.0;
        } else {
            for (double& x : v.values) x /= norm;
        }
        return v;
    }

    std::string model_name() const override { return model_; }

private:
    std::size_t dim_;
    std::string model_;
};

}  // namespace lucid
