#include "seqmem/memory_state.hpp"

#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"

namespace seqmem {

using nlohmann::json;

bool Experience::operator==(const Experience& other) const {
    auto emb = [](const std::optional<EmbeddingVector>& e)
        -> std::optional<std::vector<double>> {
        if (!e) return std::nullopt;
        return e->values;
    };
    return task_id == other.task_id && prompt == other.prompt &&
           prediction == other.prediction && correct == other.correct &&
           detail == other.detail && timestamp == other.timestamp &&
           emb(embedding) == emb(other.embedding);
}

bool Workflow::operator==(const Workflow& other) const {
    auto emb = [](const std::optional<EmbeddingVector>& e)
        -> std::optional<std::vector<double>> {
        if (!e) return std::nullopt;
        return e->values;
    };
    return text == other.text && source_task_id == other.source_task_id &&
           emb(embedding) == emb(other.embedding);
}

namespace {

json experience_to_json(const Experience& e) {
    json j{{"task_id", e.task_id},
           {"prompt", e.prompt},
           {"prediction", e.prediction},
           {"correct", e.correct},
           {"detail", e.detail},
           {"timestamp", e.timestamp}};
    if (e.embedding) j["embedding"] = e.embedding->values;
    return j;
}

Experience experience_from_json(const json& j) {
    Experience e;
    e.task_id = j.at("task_id").get<std::string>();
    e.prompt = j.at("prompt").get<std::string>();
    e.prediction = j.at("prediction").get<std::string>();
    e.correct = j.at("correct").get<int>();
    e.detail = j.at("detail").get<std::string>();
    e.timestamp = j.at("timestamp").get<long long>();
    if (j.contains("embedding")) {
        EmbeddingVector v;
        v.values = j.at("embedding").get<std::vector<double>>();
        e.embedding = std::move(v);
    }
    return e;
}

json experiences_to_json(const std::vector<Experience>& list) {
    json arr = json::array();
    for (const auto& e : list) arr.push_back(experience_to_json(e));
    return arr;
}

std::vector<Experience> experiences_from_json(const json& arr) {
    std::vector<Experience> out;
    for (const auto& j : arr) out.push_back(experience_from_json(j));
    return out;
}

} // namespace

MemoryState::MemoryState(std::string policy_id, MemoryPayload payload)
    : policy_id_(std::move(policy_id)), payload_(std::move(payload)) {}

std::string MemoryState::kind() const {
    struct Visitor {
        std::string operator()(const EmptyPayload&) const { return "empty"; }
        std::string operator()(const RecentBuffer&) const { return "recent_buffer"; }
        std::string operator()(const VectorStore&) const { return "vector_store"; }
        std::string operator()(const Cheatsheet&) const { return "cheatsheet"; }
        std::string operator()(const WorkflowSet&) const { return "workflow_set"; }
        std::string operator()(const ExpelState&) const { return "expel"; }
    };
    return std::visit(Visitor{}, payload_);
}

json MemoryState::to_json() const {
    json payload;
    if (const auto* buf = std::get_if<RecentBuffer>(&payload_)) {
        payload = json{{"entries", experiences_to_json(buf->entries)}};
    } else if (const auto* store = std::get_if<VectorStore>(&payload_)) {
        payload = json{{"entries", experiences_to_json(store->entries)}};
    } else if (const auto* sheet = std::get_if<Cheatsheet>(&payload_)) {
        payload = json{{"memory", sheet->memory},
                       {"history", experiences_to_json(sheet->history)}};
    } else if (const auto* wf = std::get_if<WorkflowSet>(&payload_)) {
        json arr = json::array();
        for (const auto& w : wf->workflows) {
            json j{{"text", w.text}, {"source_task_id", w.source_task_id}};
            if (w.embedding) j["embedding"] = w.embedding->values;
            arr.push_back(j);
        }
        payload = json{{"workflows", arr}, {"success_count", wf->success_count}};
    } else if (const auto* ex = std::get_if<ExpelState>(&payload_)) {
        payload = json{{"pool", experiences_to_json(ex->pool)},
                       {"recent_successes", experiences_to_json(ex->recent_successes)},
                       {"insights", ex->insights}};
    } else {
        payload = json::object();
    }
    return json{{"policy_id", policy_id_}, {"kind", kind()}, {"payload", payload}};
}

MemoryState MemoryState::from_json(const json& j) {
    const std::string policy_id = j.at("policy_id").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    const json& payload = j.at("payload");
    if (kind == "empty") return MemoryState(policy_id, EmptyPayload{});
    if (kind == "recent_buffer") {
        RecentBuffer buf;
        buf.entries = experiences_from_json(payload.at("entries"));
        return MemoryState(policy_id, std::move(buf));
    }
    if (kind == "vector_store") {
        VectorStore store;
        store.entries = experiences_from_json(payload.at("entries"));
        return MemoryState(policy_id, std::move(store));
    }
    if (kind == "cheatsheet") {
        Cheatsheet sheet;
        sheet.memory = payload.at("memory").get<std::string>();
        sheet.history = experiences_from_json(payload.at("history"));
        return MemoryState(policy_id, std::move(sheet));
    }
    if (kind == "workflow_set") {
        WorkflowSet wf;
        wf.success_count = payload.at("success_count").get<long long>();
        for (const auto& item : payload.at("workflows")) {
            Workflow w;
            w.text = item.at("text").get<std::string>();
            w.source_task_id = item.at("source_task_id").get<std::string>();
            if (item.contains("embedding")) {
                EmbeddingVector v;
                v.values = item.at("embedding").get<std::vector<double>>();
                w.embedding = std::move(v);
            }
            wf.workflows.push_back(std::move(w));
        }
        return MemoryState(policy_id, std::move(wf));
    }
    if (kind == "expel") {
        ExpelState ex;
        ex.pool = experiences_from_json(payload.at("pool"));
        ex.recent_successes = experiences_from_json(payload.at("recent_successes"));
        ex.insights = payload.at("insights").get<std::vector<std::string>>();
        return MemoryState(policy_id, std::move(ex));
    }
    throw ParseError("unknown memory state kind: " + kind);
}

std::string MemoryState::serialize() const { return to_json().dump(); }

MemoryState MemoryState::deserialize(const std::string& text) {
    try {
        return from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid memory state: ") + e.what());
    }
}

} // namespace seqmem
