#pragma once

#include <string>

#include "seqmem/gateway.hpp"

namespace seqmem {

/// Connection settings for an OpenAI-compatible chat-completion endpoint.
/// The API key is read from the environment (SEQMEM_API_KEY), never from
/// configuration files.
struct HttpGatewayConfig {
    /// Base URL, e.g. "http://localhost:8089/v1". Path prefix is kept.
    std::string endpoint;
    std::string model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-small";
    int max_attempts = 3;
    /// First backoff delay; doubles per retry. Tests shrink it.
    int backoff_initial_ms = 250;
    int timeout_s = 120;
    /// Expected embedding width; responses of any other width are rejected.
    int embedding_dimension = 1536;
};

/// Name of the environment variable holding the API key.
std::string api_key_env_var();

class HttpGateway : public Gateway {
public:
    explicit HttpGateway(HttpGatewayConfig config);

    const HttpGatewayConfig& config() const { return config_; }
    std::size_t embedding_dimension() const override {
        return static_cast<std::size_t>(config_.embedding_dimension);
    }
    std::string backend_name() const override { return "http"; }

protected:
    GenerationResult generate_impl(const GenerationRequest& request) override;
    EmbeddingVector embed_impl(const std::string& text) override;

private:
    std::string post_json(const std::string& path, const std::string& body);

    HttpGatewayConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_prefix_;
    std::string api_key_;
};

} // namespace seqmem
