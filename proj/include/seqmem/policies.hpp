#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "seqmem/evaluator.hpp"
#include "seqmem/gateway.hpp"
#include "seqmem/memory_state.hpp"
#include "seqmem/prompts.hpp"
#include "seqmem/stream.hpp"

namespace seqmem {

/// Tunables shared by the memory policies. Names follow the conventional
/// symbols: k retrieval budget, L batch update size, Z attempt budget.
struct PolicyConfig {
    int k = 3;
    int batch_update_size = 8;
    int max_tries = 3;
    int max_num_rules = 20;
    int induce_steps = 1;
};

/// Sampling settings applied to every generation request a policy issues.
struct GenerationDefaults {
    double temperature = 0.0;
    int max_tokens = 2048;
    Reasoning reasoning = Reasoning::off;
};

/// What a policy placed in front of the task prompt, plus where each piece
/// came from: (memory entry id, retrieval score) pairs, at most k of them.
struct Context {
    std::string rendered_text;
    std::vector<std::pair<std::string, double>> provenance;
};

/// Result of processing one online task: the answer, its grade, the updated
/// memory and how many attempts were spent.
struct StepOutcome {
    std::string prediction;
    Feedback feedback;
    MemoryState next_state;
    int tries_used = 1;
    Context context;
};

/// A memory policy decides what context to build for a task and how memory
/// evolves after the task is answered. Policies are stateless; all mutable
/// state lives in the MemoryState values they consume and produce, so a
/// thrown gateway error leaves the caller's state untouched.
class MemoryPolicy {
public:
    MemoryPolicy(PolicyConfig config, PromptLibrary prompts,
                 GenerationDefaults defaults, EvaluatorKind evaluator);
    virtual ~MemoryPolicy() = default;

    virtual std::string id() const = 0;
    virtual MemoryState initial_state() const = 0;

    /// Context assembled from the given state for the given task. Read-only
    /// with respect to the state.
    virtual Context build_context(const MemoryState& state, const Task& task,
                                  Gateway& gateway) const = 0;

    /// Full online step: answer the task (including any internal model
    /// calls) and fold the experience into memory.
    virtual StepOutcome step(const MemoryState& state, const Task& task,
                             Gateway& gateway) const;

    /// Single-attempt prediction under a frozen state. Used for hold-out and
    /// retrospective evaluation; never mutates memory.
    virtual std::string predict_readonly(const MemoryState& state, const Task& task,
                                         Gateway& gateway) const;

    Feedback grade(const std::string& prediction, const Task& task) const;

    const PolicyConfig& config() const { return config_; }
    EvaluatorKind evaluator() const { return evaluator_; }

protected:
    /// Answer request for the task given an assembled context. Subclasses
    /// override to use their own generation template.
    virtual GenerationRequest answer_request(const MemoryState& state, const Task& task,
                                             const Context& context,
                                             const std::string& extra_notes) const;

    GenerationRequest make_request(std::string user_text) const;
    /// Joins context and question through the user_turn template.
    std::string compose_user_text(const std::string& context_text,
                                  const std::string& question) const;
    /// Default update: append the graded experience to the buffer-like
    /// payload held by state. Subclasses with richer payloads override step.
    virtual MemoryState update(const MemoryState& state, const Task& task,
                               const std::string& prediction, const Feedback& feedback,
                               Gateway& gateway) const;

    PolicyConfig config_;
    PromptLibrary prompts_;
    GenerationDefaults defaults_;
    EvaluatorKind evaluator_;
};

/// Renders stored experiences the way every buffer-backed policy shows them
/// to the model.
std::string render_experience(const Experience& e);
std::string render_experiences(const std::vector<Experience>& list);

/// Identity update: answers with an empty context and never stores anything.
class MemoryFreePolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "memory_free"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;

protected:
    MemoryState update(const MemoryState& state, const Task&, const std::string&,
                       const Feedback&, Gateway&) const override;
};

/// Sliding window over the k most recent experiences, oldest first.
class ExpRecentPolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "exp_recent"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;

protected:
    MemoryState update(const MemoryState&, const Task&, const std::string&,
                       const Feedback&, Gateway&) const override;
};

/// Embedding retrieval over all stored experiences: top-k by cosine
/// similarity to the task prompt, ties broken by insertion order.
class ExpRagPolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "exp_rag"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;

protected:
    MemoryState update(const MemoryState&, const Task&, const std::string&,
                       const Feedback&, Gateway&) const override;
};

/// Curated cheatsheet: before answering, a curator call rewrites the memory
/// from retrieved past cases; the generator then answers conditioned on the
/// fresh cheatsheet. The raw interaction history grows every step.
class DcRsPolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "dc_rs"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;
    StepOutcome step(const MemoryState&, const Task&, Gateway&) const override;

protected:
    GenerationRequest answer_request(const MemoryState&, const Task&, const Context&,
                                     const std::string&) const override;
};

/// Agent workflow memory: answers conditioned on retrieved workflows and
/// induces a new workflow from every induce_steps-th success.
class AwmPolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "awm"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;
    StepOutcome step(const MemoryState&, const Task&, Gateway&) const override;
};

/// Single-try experiential learner: retrieves similar past successes plus
/// the insight list; successes accumulate and every batch_update_size of
/// them refreshes the insights (capped at max_num_rules, newest kept).
class ExpelStPolicy : public MemoryPolicy {
public:
    using MemoryPolicy::MemoryPolicy;
    std::string id() const override { return "expel_st"; }
    MemoryState initial_state() const override;
    Context build_context(const MemoryState&, const Task&, Gateway&) const override;
    StepOutcome step(const MemoryState&, const Task&, Gateway&) const override;

protected:
    /// Appends a graded success to the pool and batch, refreshing insights
    /// when the batch is full. Shared with the multi-try variant.
    ExpelState absorb_success(const ExpelState& state, const Task& task,
                              const std::string& prediction, const Feedback& feedback,
                              Gateway& gateway) const;
    ExpelState refresh_insights_if_due(ExpelState state, Gateway& gateway) const;
};

/// Multi-try variant: up to max_tries attempts per task with a reflection
/// appended after every failed attempt (final failure included). A task that
/// produced both a success and a failure triggers a contrastive insight
/// update; batch updates follow the single-try rules.
class ExpelMtPolicy : public ExpelStPolicy {
public:
    using ExpelStPolicy::ExpelStPolicy;
    std::string id() const override { return "expel_mt"; }
    StepOutcome step(const MemoryState&, const Task&, Gateway&) const override;
};

/// Known policy identifiers, in presentation order.
std::vector<std::string> policy_ids();

std::unique_ptr<MemoryPolicy> make_policy(const std::string& id, PolicyConfig config,
                                          PromptLibrary prompts,
                                          GenerationDefaults defaults,
                                          EvaluatorKind evaluator);

} // namespace seqmem
