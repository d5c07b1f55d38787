#include "seqmem/gateway.hpp"

#include <cctype>
#include <cmath>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {

std::string to_string(Reasoning r) {
    switch (r) {
        case Reasoning::off: return "off";
        case Reasoning::low: return "low";
        case Reasoning::on: return "on";
    }
    throw ArgumentError("invalid reasoning value");
}

Reasoning reasoning_from_string(const std::string& s) {
    if (s == "off") return Reasoning::off;
    if (s == "low") return Reasoning::low;
    if (s == "on") return Reasoning::on;
    throw ConfigError("reasoning must be one of off/low/on, got '" + s + "'");
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension())
        throw ArgumentError("cosine_similarity: dimension mismatch");
    if (a.dimension() == 0)
        throw ArgumentError("cosine_similarity: empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0)
        throw ArgumentError("cosine_similarity: zero vector");
    double v = dot / (std::sqrt(na) * std::sqrt(nb));
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    return v;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ArgumentError("embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(const std::string& text) const {
    EmbeddingVector vec;
    vec.values.assign(dimension_, 0.0);
    std::string token;
    bool any = false;
    auto flush = [&]() {
        if (token.empty()) return;
        vec.values[fnv1a64(token) % dimension_] += 1.0;
        token.clear();
        any = true;
    };
    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    // Text with no alphanumeric runs still gets a stable non-zero bucket.
    if (!any) vec.values[fnv1a64(text) % dimension_] = 1.0;

    double norm = 0.0;
    for (double v : vec.values) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : vec.values) v /= norm;
    return vec;
}

GenerationResult Gateway::generate(const GenerationRequest& request) {
    if (request.user_text.empty())
        throw ArgumentError("generation request needs non-empty user_text");
    if (request.temperature < 0.0)
        throw ArgumentError("generation temperature must be >= 0");
    if (request.max_tokens < 1)
        throw ArgumentError("generation max_tokens must be >= 1");
    GenerationResult result = generate_impl(request);
    record(CallRecord{CallRecord::Kind::generation, result.prompt_tokens,
                      result.completion_tokens, result.latency_ms});
    return result;
}

EmbeddingVector Gateway::embed(const std::string& text) {
    if (text.empty()) throw ArgumentError("cannot embed empty text");
    EmbeddingVector vec = embed_impl(text);
    record(CallRecord{CallRecord::Kind::embedding, embed_prompt_tokens(text), 0, 0.0});
    return vec;
}

long long Gateway::embed_prompt_tokens(const std::string& text) const {
    return whitespace_token_count(text);
}

UsageLedger Gateway::ledger() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return ledger_;
}

void Gateway::restore_ledger(const UsageLedger& ledger) {
    std::lock_guard<std::mutex> lock(mutex_);
    ledger_ = ledger;
}

void Gateway::set_observer(std::function<void(const CallRecord&)> observer) {
    std::lock_guard<std::mutex> lock(mutex_);
    observer_ = std::move(observer);
}

void Gateway::count_retry() {
    std::lock_guard<std::mutex> lock(mutex_);
    ledger_.retry_count += 1;
}

void Gateway::record(const CallRecord& rec) {
    std::function<void(const CallRecord&)> observer;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ledger_.prompt_tokens_total += rec.prompt_tokens;
        ledger_.completion_tokens_total += rec.completion_tokens;
        ledger_.call_count += 1;
        ledger_.wall_clock_ms_total += rec.latency_ms;
        observer = observer_;
    }
    if (observer) observer(rec);
}

ScriptedGateway::ScriptedGateway(std::vector<ScriptedRule> rules,
                                 std::optional<std::string> default_response,
                                 std::size_t embedding_dim)
    : rules_(std::move(rules)),
      default_response_(std::move(default_response)),
      embedder_(embedding_dim) {}

GenerationResult ScriptedGateway::generate_impl(const GenerationRequest& request) {
    {
        std::lock_guard<std::mutex> lock(state_mutex_);
        if (fail_after_ && generation_calls_ >= *fail_after_)
            throw GatewayError("scripted backend failure injected", /*retryable=*/true);
        ++generation_calls_;
    }
    const std::string haystack = request.system_text + "\n" + request.user_text;
    const std::string* response = nullptr;
    for (const auto& rule : rules_) {
        bool all = true;
        for (const auto& needle : rule.contains) {
            if (haystack.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) {
            response = &rule.response;
            break;
        }
    }
    if (!response) {
        if (!default_response_)
            throw ConfigError("scripted backend has no rule matching the request "
                              "and no default response");
        response = &*default_response_;
    }
    GenerationResult result;
    result.text = *response;
    result.prompt_tokens =
        whitespace_token_count(request.system_text) + whitespace_token_count(request.user_text);
    result.completion_tokens = whitespace_token_count(result.text);
    result.latency_ms = 0.0;
    return result;
}

EmbeddingVector ScriptedGateway::embed_impl(const std::string& text) {
    return embedder_.embed(text);
}

GenerationResult EchoGateway::generate_impl(const GenerationRequest& request) {
    GenerationResult result;
    result.text = request.user_text;
    result.prompt_tokens =
        whitespace_token_count(request.system_text) + whitespace_token_count(request.user_text);
    result.completion_tokens = whitespace_token_count(result.text);
    result.latency_ms = 0.0;
    return result;
}

EmbeddingVector EchoGateway::embed_impl(const std::string& text) {
    return embedder_.embed(text);
}

} // namespace seqmem
