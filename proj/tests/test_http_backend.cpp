#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include <lucid/http_backend.hpp>

#include "support.hpp"

using namespace lucid;

namespace {

// In-process OpenAI-compatible endpoint under full test control.
struct TestServer {
    httplib::Server svr;
    int port = 0;
    std::thread thread;

    void start() {
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    ~TestServer() {
        svr.stop();
        if (thread.joinable()) thread.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

HttpOptions llama_opts(const std::string& base_url, const std::string& key_env = "") {
    HttpOptions o;
    o.base_url = base_url;
    o.model = "test-model";
    o.api_key_env = key_env;
    o.caps = capability_profile("llama-server");
    o.timeout_s = 5;
    return o;
}

std::string completion_body(const std::string& text) {
    return nlohmann::json{
        {"choices",
         nlohmann::json::array(
             {nlohmann::json{{"message", nlohmann::json{{"content", text}}}}})}}
        .dump();
}

}  // namespace

TEST_CASE("capability profiles describe known server classes") {
    auto llama = capability_profile("llama-server");
    REQUIRE(llama.max_temperature == 100.0);
    REQUIRE(llama.supports_seed);
    auto hosted = capability_profile("hosted-api");
    REQUIRE(hosted.max_temperature == 2.0);
    REQUIRE_FALSE(hosted.supports_seed);
    REQUIRE_THROWS_AS(capability_profile("mystery-cloud"), ConfigError);
}

TEST_CASE("constructor validates scheme and key environment variable") {
    REQUIRE_THROWS_AS(OpenAiHttpBackend(llama_opts("ftp://example")), ConfigError);
    REQUIRE_THROWS_AS(OpenAiHttpBackend(llama_opts("localhost:8080")), ConfigError);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    REQUIRE_THROWS_AS(OpenAiHttpBackend(llama_opts("https://example")), ConfigError);
#endif
    // A named but unset key variable fails at construction, before any request.
    ::unsetenv("LUCID_TEST_MISSING_KEY");
    REQUIRE_THROWS_WITH(OpenAiHttpBackend(llama_opts("http://example", "LUCID_TEST_MISSING_KEY")),
                        Catch::Matchers::ContainsSubstring("LUCID_TEST_MISSING_KEY"));
    // An empty env name means "no auth" and is fine.
    REQUIRE_NOTHROW(OpenAiHttpBackend(llama_opts("http://example")));
}

TEST_CASE("generate posts an OpenAI chat completion request") {
    TestServer server;
    nlohmann::json seen_body;
    std::string seen_auth = "<none>";
    server.svr.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                        seen_body = nlohmann::json::parse(req.body);
                        if (req.has_header("Authorization"))
                            seen_auth = req.get_header_value("Authorization");
                        res.set_content(completion_body("generated text"), "application/json");
                    });
    server.start();

    SECTION("request shape, seed honored under llama profile") {
        OpenAiHttpBackend backend(llama_opts(server.url()));
        GenerationRequest req;
        req.role = Role::dream;
        req.prompt = "the prompt";
        req.temperature = 10.0;
        req.seed = 7;
        REQUIRE(backend.generate(req) == "generated text");
        REQUIRE(seen_body["model"] == "test-model");
        REQUIRE(seen_body["temperature"] == 10.0);
        REQUIRE(seen_body["messages"][0]["role"] == "user");
        REQUIRE(seen_body["messages"][0]["content"] == "the prompt");
        REQUIRE(seen_body["seed"] == 7);
        REQUIRE(seen_auth == "<none>");  // no key env configured
        REQUIRE(backend.model_name() == "test-model");
        REQUIRE(backend.max_temperature() == 100.0);
        REQUIRE(backend.supports_seed());
    }
    SECTION("hosted profile never sends a seed") {
        auto opts = llama_opts(server.url());
        opts.caps = capability_profile("hosted-api");
        OpenAiHttpBackend backend(opts);
        GenerationRequest req;
        req.prompt = "p";
        req.temperature = 1.0;
        req.seed = 7;
        backend.generate(req);
        REQUIRE_FALSE(seen_body.contains("seed"));
        REQUIRE_FALSE(backend.supports_seed());
    }
    SECTION("bearer token from the named environment variable") {
        ::setenv("LUCID_TEST_KEY", "sekrit-token", 1);
        OpenAiHttpBackend backend(llama_opts(server.url(), "LUCID_TEST_KEY"));
        GenerationRequest req;
        req.prompt = "p";
        req.temperature = 1.0;
        backend.generate(req);
        REQUIRE(seen_auth == "Bearer sekrit-token");
        ::unsetenv("LUCID_TEST_KEY");
    }
}

TEST_CASE("http error taxonomy maps onto the retry loop") {
    TestServer server;
    int hits_500 = 0;
    server.svr.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                        auto body = nlohmann::json::parse(req.body);
                        std::string prompt = body["messages"][0]["content"];
                        if (prompt == "want-500") {
                            ++hits_500;
                            res.status = 500;
                        } else if (prompt == "want-429") {
                            res.status = 429;
                        } else if (prompt == "want-404") {
                            res.status = 404;
                            res.set_content("nope", "text/plain");
                        } else if (prompt == "want-bad-json") {
                            res.set_content("{not json", "application/json");
                        } else if (prompt == "want-bad-shape") {
                            res.set_content("{\"choices\": []}", "application/json");
                        } else if (prompt == "flaky-then-fine") {
                            if (hits_500++ < 2)
                                res.status = 503;
                            else
                                res.set_content(completion_body("eventually"),
                                                "application/json");
                        } else {
                            res.set_content(completion_body("ok"), "application/json");
                        }
                    });
    server.start();

    OpenAiHttpBackend backend(llama_opts(server.url()));
    GenerationRequest req;
    req.temperature = 1.0;

    SECTION("5xx and 429 are transient") {
        req.prompt = "want-500";
        REQUIRE_THROWS_AS(backend.generate(req), TransportError);
        req.prompt = "want-429";
        REQUIRE_THROWS_AS(backend.generate(req), TransportError);
    }
    SECTION("other non-200 statuses are hard errors") {
        req.prompt = "want-404";
        REQUIRE_THROWS_AS(backend.generate(req), BackendError);
        REQUIRE_THROWS_WITH(backend.generate(req),
                            Catch::Matchers::ContainsSubstring("404"));
    }
    SECTION("unparseable and malformed bodies are hard errors") {
        req.prompt = "want-bad-json";
        REQUIRE_THROWS_AS(backend.generate(req), BackendError);
        req.prompt = "want-bad-shape";
        REQUIRE_THROWS_WITH(backend.generate(req),
                            Catch::Matchers::ContainsSubstring("malformed completion response"));
    }
    SECTION("the registry retries transient faults through to success") {
        hits_500 = 0;
        BackendRegistry reg;
        reg.bind(Role::wake, std::make_shared<OpenAiHttpBackend>(llama_opts(server.url())));
        reg.set_retry(3, std::chrono::milliseconds(0));
        REQUIRE(reg.generate(Role::wake, "flaky-then-fine", 1.0, std::nullopt) == "eventually");
        REQUIRE(reg.audit()[0].attempts == 3);
    }
    SECTION("a connection that cannot be made is transient") {
        TestServer closed;
        closed.start();
        auto dead_url = closed.url();
        closed.svr.stop();
        if (closed.thread.joinable()) closed.thread.join();
        OpenAiHttpBackend unreachable(llama_opts(dead_url));
        req.prompt = "p";
        REQUIRE_THROWS_AS(unreachable.generate(req), TransportError);
    }
}

TEST_CASE("embedding backend posts to /v1/embeddings") {
    TestServer server;
    nlohmann::json seen_body;
    server.svr.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        nlohmann::json out{
            {"data", nlohmann::json::array({nlohmann::json{
                         {"embedding", std::vector<double>{0.6, 0.8}}}})}};
        res.set_content(out.dump(), "application/json");
    });
    server.start();

    OpenAiEmbeddingBackend backend(llama_opts(server.url()));
    auto v = backend.embed("some text");
    REQUIRE(v.values == std::vector<double>{0.6, 0.8});
    REQUIRE(seen_body["model"] == "test-model");
    REQUIRE(seen_body["input"] == "some text");
    REQUIRE(backend.model_name() == "test-model");
    REQUIRE_THROWS_AS(backend.embed(""), std::invalid_argument);

    SECTION("missing data array is a hard error") {
        TestServer empty;
        empty.svr.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"data\": []}", "application/json");
        });
        empty.start();
        OpenAiEmbeddingBackend bad(llama_opts(empty.url()));
        REQUIRE_THROWS_WITH(bad.embed("text"),
                            Catch::Matchers::ContainsSubstring("malformed embedding response"));
    }
    SECTION("registry dimension guard applies to http embeddings too") {
        BackendRegistry reg;
        reg.bind_embedder(std::make_shared<OpenAiEmbeddingBackend>(llama_opts(server.url())));
        REQUIRE(reg.embed("a").dim() == 2);
        REQUIRE(reg.embed("b").dim() == 2);
    }
}
