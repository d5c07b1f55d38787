#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace seqmem {

enum class Reasoning { off, low, on };

std::string to_string(Reasoning r);
Reasoning reasoning_from_string(const std::string& s);

/// One model invocation. user_text must be non-empty.
struct GenerationRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_tokens = 2048;
    Reasoning reasoning = Reasoning::off;
};

struct GenerationResult {
    std::string text;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    double latency_ms = 0.0;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::size_t dimension() const { return values.size(); }
};

/// Running totals across every call issued through a gateway. Totals only
/// grow; retries that never produced a result are tracked separately.
struct UsageLedger {
    long long prompt_tokens_total = 0;
    long long completion_tokens_total = 0;
    long long call_count = 0;
    long long retry_count = 0;
    double wall_clock_ms_total = 0.0;

    bool operator==(const UsageLedger&) const = default;
};

/// Per-call record handed to an optional observer. Useful for audits that
/// need to re-derive ledger totals independently.
struct CallRecord {
    enum class Kind { generation, embedding };
    Kind kind = Kind::generation;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    double latency_ms = 0.0;
};

/// Cosine similarity of two equal-dimension, non-zero vectors. Result is
/// clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

/// Deterministic local text embedder: hashed bag of tokens, L2-normalized.
class HashingEmbedder {
public:
    explicit HashingEmbedder(std::size_t dimension = 64);
    EmbeddingVector embed(const std::string& text) const;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

/// Model access point. Subclasses implement the raw calls; the base class
/// validates requests and folds every result into the shared ledger.
class Gateway {
public:
    virtual ~Gateway() = default;

    GenerationResult generate(const GenerationRequest& request);
    EmbeddingVector embed(const std::string& text);

    UsageLedger ledger() const;
    /// Seeds the ledger, e.g. when resuming a run from a token file.
    void restore_ledger(const UsageLedger& ledger);
    void set_observer(std::function<void(const CallRecord&)> observer);

    virtual std::size_t embedding_dimension() const = 0;
    virtual std::string backend_name() const = 0;

protected:
    virtual GenerationResult generate_impl(const GenerationRequest& request) = 0;
    virtual EmbeddingVector embed_impl(const std::string& text) = 0;
    /// Synthetic prompt-token count used by local embedding backends.
    virtual long long embed_prompt_tokens(const std::string& text) const;
    void count_retry();

private:
    void record(const CallRecord& rec);

    mutable std::mutex mutex_;
    UsageLedger ledger_;
    std::function<void(const CallRecord&)> observer_;
};

/// One response rule of the scripted backend: fires when every listed
/// substring occurs in the request text (system + user). First match wins.
struct ScriptedRule {
    std::vector<std::string> contains;
    std::string response;
};

/// Deterministic stand-in for a remote model, driven by a rule table.
/// Token counts are whitespace token counts; latency is always zero, which
/// keeps run logs byte-identical across repeats.
class ScriptedGateway : public Gateway {
public:
    ScriptedGateway(std::vector<ScriptedRule> rules,
                    std::optional<std::string> default_response,
                    std::size_t embedding_dim = 64);

    std::size_t embedding_dimension() const override { return embedder_.dimension(); }
    std::string backend_name() const override { return "scripted"; }

    /// Test hook: once this many generation calls succeeded, every further
    /// generation attempt fails as a retryable gateway error.
    void fail_generation_after(long long calls) { fail_after_ = calls; }

protected:
    GenerationResult generate_impl(const GenerationRequest& request) override;
    EmbeddingVector embed_impl(const std::string& text) override;

private:
    std::vector<ScriptedRule> rules_;
    std::optional<std::string> default_response_;
    HashingEmbedder embedder_;
    long long generation_calls_ = 0;
    std::optional<long long> fail_after_;
    std::mutex state_mutex_;
};

/// Returns the user text verbatim. Handy for inspecting exactly what a
/// policy put into a prompt.
class EchoGateway : public Gateway {
public:
    explicit EchoGateway(std::size_t embedding_dim = 64) : embedder_(embedding_dim) {}

    std::size_t embedding_dimension() const override { return embedder_.dimension(); }
    std::string backend_name() const override { return "echo"; }

protected:
    GenerationResult generate_impl(const GenerationRequest& request) override;
    EmbeddingVector embed_impl(const std::string& text) override;

private:
    HashingEmbedder embedder_;
};

} // namespace seqmem
