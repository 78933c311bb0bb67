#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lucid/domain.hpp"
#include "lucid/errors.hpp"

// Backend abstraction. The pipeline talks to models only through the registry,
// which owns per-role bindings, enforces each backend's declared capabilities,
// retries transient faults, and keeps an audit trail of every logical call.

namespace lucid {

enum class Role { wake, dream, judge, rewake, review };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::wake: return "wake";
        case Role::dream: return "dream";
        case Role::judge: return "judge";
        case Role::rewake: return "rewake";
        case Role::review: return "review";
    }
    return "?";
}

inline Role role_from(std::string_view name) {
    if (name == "wake") return Role::wake;
    if (name == "dream") return Role::dream;
    if (name == "judge") return Role::judge;
    if (name == "rewake") return Role::rewake;
    if (name == "review") return Role::review;
    throw ConfigError("unknown role: " + std::string(name));
}

struct GenerationRequest {
    Role role = Role::wake;
    std::string prompt;
    double temperature = 1.0;
    std::optional<std::uint64_t> seed;
};

class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual std::string generate(const GenerationRequest& req) = 0;
    virtual std::string model_name() const = 0;
    virtual double max_temperature() const = 0;
    virtual bool supports_seed() const { return true; }
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual EmbeddingVector embed(const std::string& text) = 0;
    virtual std::string model_name() const = 0;
};

// One entry per logical generate() call, regardless of how many attempts it took.
struct CallRecord {
    Role role = Role::wake;
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    bool ok = false;
    int attempts = 0;
    std::string error;  // empty when ok
};

class BackendRegistry {
public:
    void bind(Role role, std::shared_ptr<GenerationBackend> backend) {
        if (!backend) throw ConfigError("cannot bind null backend");
        generation_[role] = std::move(backend);
    }

    void bind_embedder(std::shared_ptr<EmbeddingBackend> backend) {
        if (!backend) throw ConfigError("cannot bind null embedder");
        embedder_ = std::move(backend);
    }

    bool has(Role role) const { return generation_.count(role) > 0; }
    bool has_embedder() const { return embedder_ != nullptr; }

    GenerationBackend& generation(Role role) const {
        auto it = generation_.find(role);
        if (it == generation_.end())
            throw ConfigError(std::string("no backend bound for role ") + role_name(role));
        return *it->second;
    }

    // max_retries transient re-attempts after the first try; backoff doubles
    // each attempt starting from backoff_ms.
    void set_retry(int max_retries, std::chrono::milliseconds backoff_ms) {
        if (max_retries < 0) throw ConfigError("max_retries negative");
        max_retries_ = max_retries;
        backoff_ = backoff_ms;
    }

    std::string generate(Role role, const std::string& prompt, double temperature,
                         std::optional<std::uint64_t> seed) {
        GenerationBackend& backend = generation(role);

        CallRecord rec;
        rec.role = role;
        rec.model = backend.model_name();
        rec.prompt = prompt;
        rec.temperature = temperature;
        rec.seed = seed;

        if (temperature > backend.max_temperature()) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "backend %s for role %s caps temperature at %g, requested %g",
                          rec.model.c_str(), role_name(role), backend.max_temperature(),
                          temperature);
            rec.error = buf;
            record(rec);
            throw CapabilityError(buf);
        }

        GenerationRequest req;
        req.role = role;
        req.prompt = prompt;
        req.temperature = temperature;
        req.seed = backend.supports_seed() ? seed : std::nullopt;

        std::string last_error;
        for (int attempt = 0; attempt <= max_retries_; ++attempt) {
            rec.attempts = attempt + 1;
            if (attempt > 0 && backoff_.count() > 0)
                std::this_thread::sleep_for(backoff_ * (1 << (attempt - 1)));
            try {
                std::string out = backend.generate(req);
                if (out.empty()) {
                    last_error = "empty completion";
                    continue;
                }
                rec.ok = true;
                record(rec);
                return out;
            } catch (const TransportError& e) {
                last_error = e.what();
            }
        }
        rec.error = "gave up after " + std::to_string(rec.attempts) +
                    " attempts: " + last_error;
        record(rec);
        throw BackendError(rec.error);
    }

    EmbeddingVector embed(const std::string& text) {
        if (!embedder_) throw ConfigError("no embedding backend bound");
        EmbeddingVector v = embedder_->embed(text);
        if (v.values.empty()) throw BackendError("embedding backend returned empty vector");
        std::lock_guard<std::mutex> lock(mutex_);
        if (embed_dim_ == 0) {
            embed_dim_ = v.dim();
        } else if (v.dim() != embed_dim_) {
            throw BackendError("embedding dimension drifted from " +
                               std::to_string(embed_dim_) + " to " + std::to_string(v.dim()));
        }
        return v;
    }

    std::vector<CallRecord> audit() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return audit_;
    }

    void clear_audit() {
        std::lock_guard<std::mutex> lock(mutex_);
        audit_.clear();
    }

private:
    void record(const CallRecord& rec) {
        std::lock_guard<std::mutex> lock(mutex_);
        audit_.push_back(rec);
    }

    std::map<Role, std::shared_ptr<GenerationBackend>> generation_;
    std::shared_ptr<EmbeddingBackend> embedder_;
    int max_retries_ = 3;
    std::chrono::milliseconds backoff_{100};
    std::size_t embed_dim_ = 0;
    mutable std::mutex mutex_;
    std::vector<CallRecord> audit_;
};

}  // namespace lucid
