#pragma once

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "lucid/backends.hpp"
#include "lucid/detail/util.hpp"
#include "lucid/errors.hpp"

// Backends speaking the OpenAI-compatible HTTP protocol: POST
// /v1/chat/completions for generation and POST /v1/embeddings for vectors.
// Works against a local llama.cpp server as well as hosted endpoints; the
// capability profile tells the registry what the server actually honors.
// API keys are read from an environment variable whose *name* comes from the
// config, so no credential ever lands in a file.

namespace lucid {

struct CapabilityProfile {
    double max_temperature = 2.0;
    bool supports_seed = false;
};

inline CapabilityProfile capability_profile(std::string_view name) {
    if (name == "llama-server") return {100.0, true};
    if (name == "hosted-api") return {2.0, false};
    throw ConfigError("unknown capability profile: " + std::string(name));
}

struct HttpOptions {
    std::string base_url;     // e.g. "http://127.0.0.1:8080"
    std::string model;
    std::string api_key_env;  // name of the env var holding the bearer token; may be empty
    CapabilityProfile caps;
    int timeout_s = 120;
};

namespace detail_http {

inline std::string bearer_from_env(const std::string& env_name) {
    if (env_name.empty()) return "";
    const char* v = std::getenv(env_name.c_str());
    if (!v || !*v)
        throw ConfigError("environment variable " + env_name + " is not set");
    return v;
}

inline void check_scheme(const std::string& base_url) {
    if (!detail::starts_with(base_url, "http://") && !detail::starts_with(base_url, "https://"))
        throw ConfigError("base_url must start with http:// or https://: " + base_url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (detail::starts_with(base_url, "https://"))
        throw ConfigError("https endpoints need a TLS-enabled build");
#endif
}

// Shared POST with the error taxonomy the registry's retry loop expects:
// connection faults and overload statuses are transient, everything else is a
// hard protocol error.
inline nlohmann::json post_json(const HttpOptions& opts, const std::string& path,
                                const nlohmann::json& body) {
    httplib::Client client(opts.base_url);
    client.set_connection_timeout(opts.timeout_s);
    client.set_read_timeout(opts.timeout_s);
    client.set_write_timeout(opts.timeout_s);

    httplib::Headers headers;
    std::string token = bearer_from_env(opts.api_key_env);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("request to " + opts.base_url + path + " failed: " +
                             httplib::to_string(res.error()));
    if (res->status >= 500 || res->status == 429)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + path);
    if (res->status != 200)
        throw BackendError("HTTP " + std::to_string(res->status) + " from " + path + ": " +
                           res->body.substr(0, 200));
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unparseable response body: ") + e.what());
    }
}

}  // namespace detail_http

class OpenAiHttpBackend : public GenerationBackend {
public:
    explicit OpenAiHttpBackend(HttpOptions opts) : opts_(std::move(opts)) {
        detail_http::check_scheme(opts_.base_url);
        detail_http::bearer_from_env(opts_.api_key_env);  // fail fast if unset
    }

    std::string generate(const GenerationRequest& req) override {
        nlohmann::json body{
            {"model", opts_.model},
            {"messages", nlohmann::json::array({nlohmann::json{
                             {"role", "user"}, {"content", req.prompt}}})},
            {"temperature", req.temperature},
        };
        if (opts_.caps.supports_seed && req.seed)
            body["seed"] = *req.seed;
        nlohmann::json res = detail_http::post_json(opts_, "/v1/chat/completions", body);
        try {
            return res.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
    }

    std::string model_name() const override { return opts_.model; }
    double max_temperature() const override { return opts_.caps.max_temperature; }
    bool supports_seed() const override { return opts_.caps.supports_seed; }

private:
    HttpOptions opts_;
};

class OpenAiEmbeddingBackend : public EmbeddingBackend {
public:
    explicit OpenAiEmbeddingBackend(HttpOptions opts) : opts_(std::move(opts)) {
        detail_http::check_scheme(opts_.base_url);
        detail_http::bearer_from_env(opts_.api_key_env);
    }

    EmbeddingVector embed(const std::string& text) override {
        if (text.empty()) throw std::invalid_argument("cannot embed empty text");
        nlohmann::json body{{"model", opts_.model}, {"input", text}};
        nlohmann::json res = detail_http::post_json(opts_, "/v1/embeddings", body);
        try {
            EmbeddingVector v;
            res.at("data").at(0).at("embedding").get_to(v.values);
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed embedding response: ") + e.what());
        }
    }

    std::string model_name() const override { return opts_.model; }

private:
    HttpOptions opts_;
};

}  // namespace lucid
