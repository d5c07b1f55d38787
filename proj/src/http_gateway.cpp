#include "seqmem/http_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {
namespace {

using nlohmann::json;

struct ParsedEndpoint {
    std::string host;
    int port = 80;
    std::string path_prefix;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    std::string rest;
    if (endpoint.rfind("http://", 0) == 0) {
        rest = endpoint.substr(7);
    } else if (endpoint.rfind("https://", 0) == 0) {
        throw ConfigError("https endpoints are not supported by this build; use http");
    } else {
        throw ConfigError("endpoint must start with http:// (got '" + endpoint + "')");
    }
    ParsedEndpoint out;
    const auto slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    out.path_prefix = slash == std::string::npos ? "" : rest.substr(slash);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
        out.path_prefix.pop_back();
    }
    const auto colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
    } else {
        out.host = authority.substr(0, colon);
        try {
            out.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception&) {
            throw ConfigError("bad port in endpoint '" + endpoint + "'");
        }
    }
    if (out.host.empty()) throw ConfigError("endpoint '" + endpoint + "' has no host");
    if (out.port < 1 || out.port > 65535) {
        throw ConfigError("endpoint port out of range in '" + endpoint + "'");
    }
    return out;
}

} // namespace

std::string api_key_env_var() { return "SEQMEM_API_KEY"; }

HttpGateway::HttpGateway(HttpGatewayConfig config) : config_(std::move(config)) {
    if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (config_.embedding_dimension < 1) {
        throw ConfigError("embedding_dimension must be positive");
    }
    const ParsedEndpoint ep = parse_endpoint(config_.endpoint);
    host_ = ep.host;
    port_ = ep.port;
    path_prefix_ = ep.path_prefix;
    if (const char* key = std::getenv(api_key_env_var().c_str())) {
        api_key_ = key;
    }
}

std::string HttpGateway::post_json(const std::string& path, const std::string& body) {
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            count_retry();
            const int delay = config_.backoff_initial_ms << (attempt - 2);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Client client(host_, port_);
        client.set_connection_timeout(config_.timeout_s, 0);
        client.set_read_timeout(config_.timeout_s, 0);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post((path_prefix_ + path).c_str(), headers, body,
                               "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) return res->body;
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
        // Client errors other than rate limiting will not heal on retry.
        if (res->status >= 400 && res->status < 500 && res->status != 429) {
            throw GatewayError("endpoint rejected request (" + last_error + ")", false);
        }
    }
    throw GatewayError("gave up after " + std::to_string(config_.max_attempts) +
                           " attempts (" + last_error + ")",
                       true);
}

GenerationResult HttpGateway::generate_impl(const GenerationRequest& request) {
    json body{
        {"model", config_.model},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"messages", json::array()},
    };
    if (!request.system_text.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_text}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user_text}});
    if (request.reasoning != Reasoning::off) {
        body["reasoning_effort"] = request.reasoning == Reasoning::low ? "low" : "high";
    }

    const auto start = std::chrono::steady_clock::now();
    const std::string raw = post_json("/chat/completions", body.dump());
    const auto elapsed = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();

    json reply;
    try {
        reply = json::parse(raw);
    } catch (const json::exception& e) {
        throw GatewayError(std::string("unparsable completion response: ") + e.what(), true);
    }
    GenerationResult result;
    try {
        result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw GatewayError(std::string("completion response missing content: ") + e.what(),
                           true);
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
        result.prompt_tokens = reply["usage"].value("prompt_tokens", 0LL);
        result.completion_tokens = reply["usage"].value("completion_tokens", 0LL);
    }
    if (result.prompt_tokens == 0 && result.completion_tokens == 0) {
        result.prompt_tokens =
            whitespace_token_count(request.system_text) + whitespace_token_count(request.user_text);
        result.completion_tokens = whitespace_token_count(result.text);
    }
    result.latency_ms = elapsed;
    return result;
}

EmbeddingVector HttpGateway::embed_impl(const std::string& text) {
    json body{{"model", config_.embedding_model}, {"input", text}};
    const std::string raw = post_json("/embeddings", body.dump());
    json reply;
    try {
        reply = json::parse(raw);
    } catch (const json::exception& e) {
        throw GatewayError(std::string("unparsable embedding response: ") + e.what(), true);
    }
    EmbeddingVector vec;
    try {
        vec.values = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw GatewayError(std::string("embedding response missing vector: ") + e.what(), true);
    }
    if (vec.values.size() != static_cast<std::size_t>(config_.embedding_dimension)) {
        throw GatewayError("embedding dimension " + std::to_string(vec.values.size()) +
                               " does not match the configured " +
                               std::to_string(config_.embedding_dimension),
                           false);
    }
    return vec;
}

} // namespace seqmem
