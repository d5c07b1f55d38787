#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "seqmem/gateway.hpp"

namespace seqmem {

/// One stored trajectory: the task as seen, what the model answered and how
/// it was graded. timestamp is a logical insertion counter, not wall time.
struct Experience {
    std::string task_id;
    std::string prompt;
    std::string prediction;
    int correct = 0;
    std::string detail;
    long long timestamp = 0;
    std::optional<EmbeddingVector> embedding;

    bool operator==(const Experience&) const;
};

struct EmptyPayload {
    bool operator==(const EmptyPayload&) const = default;
};

/// Append-only experience list; readers take the most recent k.
struct RecentBuffer {
    std::vector<Experience> entries;
    bool operator==(const RecentBuffer&) const = default;
};

/// Experience list with embeddings for similarity retrieval.
struct VectorStore {
    std::vector<Experience> entries;
    bool operator==(const VectorStore&) const = default;
};

/// Curated free-text memory plus the raw interaction history it is
/// distilled from.
struct Cheatsheet {
    std::string memory;
    std::vector<Experience> history;
    bool operator==(const Cheatsheet&) const = default;
};

struct Workflow {
    std::string text;
    std::string source_task_id;
    std::optional<EmbeddingVector> embedding;
    bool operator==(const Workflow&) const;
};

/// Workflows induced from successful tasks.
struct WorkflowSet {
    std::vector<Workflow> workflows;
    long long success_count = 0;
    bool operator==(const WorkflowSet&) const = default;
};

/// Success pool, pending success batch and the distilled insight list.
struct ExpelState {
    std::vector<Experience> pool;
    std::vector<Experience> recent_successes;
    std::vector<std::string> insights;
    bool operator==(const ExpelState&) const = default;
};

using MemoryPayload = std::variant<EmptyPayload, RecentBuffer, VectorStore,
                                   Cheatsheet, WorkflowSet, ExpelState>;

/// Snapshot-able memory of one policy run. serialize() produces canonical
/// JSON: deserializing and re-serializing is byte-identical.
class MemoryState {
public:
    MemoryState() = default;
    MemoryState(std::string policy_id, MemoryPayload payload);

    const std::string& policy_id() const { return policy_id_; }
    std::string kind() const;

    const MemoryPayload& payload() const { return payload_; }
    MemoryPayload& payload() { return payload_; }

    template <typename T>
    const T& as() const {
        return std::get<T>(payload_);
    }
    template <typename T>
    T& as() {
        return std::get<T>(payload_);
    }

    std::string serialize() const;
    static MemoryState deserialize(const std::string& text);

    nlohmann::json to_json() const;
    static MemoryState from_json(const nlohmann::json& j);

    bool operator==(const MemoryState&) const = default;

private:
    std::string policy_id_;
    MemoryPayload payload_;
};

} // namespace seqmem
