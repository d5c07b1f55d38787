#include <doctest.h>

#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/http_gateway.hpp"
#include "seqmem/util.hpp"

using namespace seqmem;
using doctest::Contains;
using nlohmann::json;

namespace {

struct RecordedRequest {
    std::string path;
    std::string body;
    std::string authorization;
    std::string content_type;
};

/// In-process OpenAI-shaped endpoint. Responses are served from a script of
/// (status, body) pairs; the last entry repeats once the script runs out.
class FakeEndpoint {
public:
    FakeEndpoint() {
        server_.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mutex_);
            RecordedRequest rec;
            rec.path = req.path;
            rec.body = req.body;
            rec.authorization = req.get_header_value("Authorization");
            rec.content_type = req.get_header_value("Content-Type");
            requests_.push_back(std::move(rec));

            const auto& [status, body] =
                script_.empty() ? fallback_
                                : script_[std::min(requests_.size() - 1, script_.size() - 1)];
            res.status = status;
            res.set_content(body, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FakeEndpoint() {
        server_.stop();
        thread_.join();
    }

    void respond(std::vector<std::pair<int, std::string>> script) {
        std::lock_guard<std::mutex> lock(mutex_);
        script_ = std::move(script);
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int port() const { return port_; }

    std::vector<RecordedRequest> requests() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return requests_;
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::vector<RecordedRequest> requests_;
    std::vector<std::pair<int, std::string>> script_;
    std::pair<int, std::string> fallback_{500, R"({"error": "unscripted"})"};
};

std::string completion_body(const std::string& text, long long prompt_tokens = 0,
                            long long completion_tokens = 0) {
    json message{{"content", text}};
    json choice{{"message", message}};
    json body;
    body["choices"] = json::array({choice});
    if (prompt_tokens || completion_tokens) {
        body["usage"] = {{"prompt_tokens", prompt_tokens},
                         {"completion_tokens", completion_tokens}};
    }
    return body.dump();
}

std::string embedding_body(const std::vector<double>& values) {
    return json{{"data", json::array({{{"embedding", values}}})}}.dump();
}

HttpGatewayConfig test_config(const std::string& endpoint) {
    HttpGatewayConfig cfg;
    cfg.endpoint = endpoint;
    cfg.model = "unit-model";
    cfg.embedding_model = "unit-embedder";
    cfg.max_attempts = 3;
    cfg.backoff_initial_ms = 1;
    cfg.timeout_s = 5;
    cfg.embedding_dimension = 4;
    return cfg;
}

struct EnvVar {
    std::string name;
    EnvVar(const std::string& n, const std::string& value) : name(n) {
        setenv(name.c_str(), value.c_str(), 1);
    }
    ~EnvVar() { unsetenv(name.c_str()); }
};

} // namespace

TEST_CASE("generation request carries model, sampling, messages, and the key") {
    FakeEndpoint server;
    server.respond({{200, completion_body("An answer.", 11, 4)}});
    EnvVar key(api_key_env_var(), "test-key-123");
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.system_text = "You are terse.";
    req.user_text = "What is 2+2?";
    req.temperature = 0.25;
    req.max_tokens = 77;
    req.reasoning = Reasoning::on;
    const GenerationResult result = gw.generate(req);

    CHECK(result.text == "An answer.");
    CHECK(result.prompt_tokens == 11);
    CHECK(result.completion_tokens == 4);
    CHECK(result.latency_ms >= 0.0);

    const auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].path == "/v1/chat/completions");
    CHECK(reqs[0].authorization == "Bearer test-key-123");
    CHECK(reqs[0].content_type == "application/json");

    const json body = json::parse(reqs[0].body);
    CHECK(body.at("model") == "unit-model");
    CHECK(body.at("temperature") == 0.25);
    CHECK(body.at("max_tokens") == 77);
    CHECK(body.at("reasoning_effort") == "high");
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body.at("messages")[0].at("role") == "system");
    CHECK(body.at("messages")[0].at("content") == "You are terse.");
    CHECK(body.at("messages")[1].at("role") == "user");
    CHECK(body.at("messages")[1].at("content") == "What is 2+2?");

    const UsageLedger ledger = gw.ledger();
    CHECK(ledger.call_count == 1);
    CHECK(ledger.retry_count == 0);
    CHECK(ledger.prompt_tokens_total == 11);
    CHECK(ledger.completion_tokens_total == 4);
}

TEST_CASE("reasoning maps to the effort field only when enabled") {
    FakeEndpoint server;
    server.respond({{200, completion_body("ok", 1, 1)}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.user_text = "q";

    req.reasoning = Reasoning::off;
    gw.generate(req);
    req.reasoning = Reasoning::low;
    gw.generate(req);

    const auto reqs = server.requests();
    REQUIRE(reqs.size() == 2);
    CHECK_FALSE(json::parse(reqs[0].body).contains("reasoning_effort"));
    CHECK(json::parse(reqs[1].body).at("reasoning_effort") == "low");

    SUBCASE("a system-less request sends a single message") {
        CHECK(json::parse(reqs[0].body).at("messages").size() == 1);
    }
}

TEST_CASE("missing usage falls back to whitespace token counts") {
    FakeEndpoint server;
    server.respond({{200, completion_body("three word reply")}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.system_text = "a b";
    req.user_text = "c d e";
    const GenerationResult result = gw.generate(req);
    CHECK(result.prompt_tokens == 5);
    CHECK(result.completion_tokens == 3);
    CHECK(gw.ledger().prompt_tokens_total == 5);
    CHECK(gw.ledger().completion_tokens_total == 3);
}

TEST_CASE("server errors are retried with backoff until they heal") {
    FakeEndpoint server;
    server.respond({{500, "boom"}, {500, "boom"}, {200, completion_body("recovered", 2, 1)}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.user_text = "q";
    const GenerationResult result = gw.generate(req);
    CHECK(result.text == "recovered");
    CHECK(server.requests().size() == 3);
    CHECK(gw.ledger().retry_count == 2);
    CHECK(gw.ledger().call_count == 1);
}

TEST_CASE("rate limiting is retryable") {
    FakeEndpoint server;
    server.respond({{429, R"({"error": "slow down"})"}, {200, completion_body("ok", 1, 1)}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.user_text = "q";
    CHECK(gw.generate(req).text == "ok");
    CHECK(server.requests().size() == 2);
    CHECK(gw.ledger().retry_count == 1);
}

TEST_CASE("attempts are bounded") {
    FakeEndpoint server;
    server.respond({{503, "down"}});
    HttpGatewayConfig cfg = test_config(server.base_url());
    cfg.max_attempts = 2;
    HttpGateway gw(cfg);

    GenerationRequest req;
    req.user_text = "q";
    try {
        gw.generate(req);
        FAIL("expected a gateway error");
    } catch (const GatewayError& e) {
        CHECK(std::string(e.what()).find("gave up after 2 attempts") != std::string::npos);
        CHECK(e.retryable());
    }
    CHECK(server.requests().size() == 2);
    CHECK(gw.ledger().call_count == 0);
    CHECK(gw.ledger().retry_count == 1);
}

TEST_CASE("client errors other than 429 fail immediately") {
    FakeEndpoint server;
    server.respond({{400, R"({"error": "bad request"})"}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.user_text = "q";
    try {
        gw.generate(req);
        FAIL("expected a gateway error");
    } catch (const GatewayError& e) {
        const std::string what = e.what();
        CHECK(what.find("endpoint rejected request") != std::string::npos);
        CHECK(what.find("HTTP 400") != std::string::npos);
        CHECK_FALSE(e.retryable());
    }
    CHECK(server.requests().size() == 1);
    CHECK(gw.ledger().call_count == 0);
    CHECK(gw.ledger().retry_count == 0);
}

TEST_CASE("malformed completion bodies are reported") {
    FakeEndpoint server;
    HttpGateway gw(test_config(server.base_url()));
    GenerationRequest req;
    req.user_text = "q";

    SUBCASE("not json") {
        server.respond({{200, "definitely not json"}});
        CHECK_THROWS_WITH_AS((void)gw.generate(req), Contains("unparsable completion"),
                             GatewayError);
    }
    SUBCASE("no content field") {
        server.respond({{200, R"({"choices": [{"message": {}}]})"}});
        CHECK_THROWS_WITH_AS((void)gw.generate(req),
                             Contains("completion response missing content"), GatewayError);
    }
}

TEST_CASE("embedding requests round trip") {
    FakeEndpoint server;
    server.respond({{200, embedding_body({0.5, -0.5, 0.25, 0.0})}});
    HttpGateway gw(test_config(server.base_url()));
    CHECK(gw.embedding_dimension() == 4);

    const EmbeddingVector vec = gw.embed("two words");
    CHECK(vec.values == std::vector<double>{0.5, -0.5, 0.25, 0.0});

    const auto reqs = server.requests();
    REQUIRE(reqs.size() == 1);
    CHECK(reqs[0].path == "/v1/embeddings");
    const json body = json::parse(reqs[0].body);
    CHECK(body.at("model") == "unit-embedder");
    CHECK(body.at("input") == "two words");

    CHECK(gw.ledger().call_count == 1);
    CHECK(gw.ledger().prompt_tokens_total == 2);

    SUBCASE("a vector of the wrong width is rejected for good") {
        server.respond({{200, embedding_body({1.0, 2.0, 3.0})}});
        try {
            gw.embed("again");
            FAIL("expected a gateway error");
        } catch (const GatewayError& e) {
            CHECK(std::string(e.what()).find("does not match the configured 4") !=
                  std::string::npos);
            CHECK_FALSE(e.retryable());
        }
    }
    SUBCASE("a body without a vector is reported") {
        server.respond({{200, R"({"data": []})"}});
        CHECK_THROWS_WITH_AS((void)gw.embed("again"),
                             Contains("embedding response missing vector"), GatewayError);
    }
}

TEST_CASE("requests without a configured key omit the header") {
    unsetenv(api_key_env_var().c_str());
    FakeEndpoint server;
    server.respond({{200, completion_body("ok", 1, 1)}});
    HttpGateway gw(test_config(server.base_url()));

    GenerationRequest req;
    req.user_text = "q";
    gw.generate(req);
    REQUIRE(server.requests().size() == 1);
    CHECK(server.requests()[0].authorization.empty());
}

TEST_CASE("path prefixes from the endpoint are preserved") {
    FakeEndpoint server;
    server.respond({{200, completion_body("ok", 1, 1)}});
    const std::string base = "http://127.0.0.1:" + std::to_string(server.port());
    HttpGatewayConfig cfg = test_config(base);

    SUBCASE("deep prefix with trailing slash") {
        cfg.endpoint = base + "/serve/openai/v1/";
        HttpGateway gw(cfg);
        GenerationRequest req;
        req.user_text = "q";
        gw.generate(req);
        CHECK(server.requests()[0].path == "/serve/openai/v1/chat/completions");
    }
    SUBCASE("no prefix at all") {
        HttpGateway gw(cfg);
        GenerationRequest req;
        req.user_text = "q";
        gw.generate(req);
        CHECK(server.requests()[0].path == "/chat/completions");
    }
}

TEST_CASE("endpoint strings are validated up front") {
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("https://api.example.com/v1")),
                         Contains("use http"), ConfigError);
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("ftp://api.example.com")),
                         Contains("endpoint must start with http://"), ConfigError);
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("")),
                         Contains("endpoint must start with http://"), ConfigError);
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("http://:8080/v1")),
                         Contains("has no host"), ConfigError);
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("http://host:notaport/v1")),
                         Contains("bad port"), ConfigError);
    CHECK_THROWS_WITH_AS((void)HttpGateway(test_config("http://host:99999/v1")),
                         Contains("port out of range"), ConfigError);

    HttpGatewayConfig cfg = test_config("http://host:80/v1");
    cfg.max_attempts = 0;
    CHECK_THROWS_WITH_AS((void)HttpGateway(cfg), Contains("max_attempts"), ConfigError);
    cfg = test_config("http://host:80/v1");
    cfg.embedding_dimension = 0;
    CHECK_THROWS_WITH_AS((void)HttpGateway(cfg), Contains("embedding_dimension"), ConfigError);
}
