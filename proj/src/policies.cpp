#include "seqmem/policies.hpp"

#include <algorithm>
#include <cctype>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {

namespace {

template <typename T>
const T& payload_as(const MemoryState& state, const std::string& policy_id) {
    if (state.policy_id() != policy_id)
        throw ArgumentError("memory state belongs to policy '" + state.policy_id() +
                            "', expected '" + policy_id + "'");
    const T* p = std::get_if<T>(&state.payload());
    if (!p)
        throw ArgumentError("memory payload kind '" + state.kind() +
                            "' does not match policy '" + policy_id + "'");
    return *p;
}

long long next_timestamp(const std::vector<Experience>& entries) {
    return entries.empty() ? 1 : entries.back().timestamp + 1;
}

Experience make_experience(const Task& task, const std::string& prediction,
                           const Feedback& feedback, long long timestamp) {
    Experience e;
    e.task_id = task.id;
    e.prompt = task.prompt;
    e.prediction = prediction;
    e.correct = feedback.correct;
    e.detail = feedback.detail;
    e.timestamp = timestamp;
    return e;
}

struct Scored {
    std::size_t index;
    double score;
};

/// Indices of the k highest-scoring items, ties keeping insertion order.
std::vector<Scored> rank_top_k(const std::vector<double>& scores, int k) {
    std::vector<Scored> ranked(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Scored& a, const Scored& b) { return a.score > b.score; });
    if (ranked.size() > static_cast<std::size_t>(k))
        ranked.resize(static_cast<std::size_t>(k));
    return ranked;
}

std::string render_insight_list(const std::vector<std::string>& insights) {
    if (insights.empty()) return "(none)";
    std::string out;
    for (const auto& line : insights) {
        if (!out.empty()) out += "\n";
        out += "- " + line;
    }
    return out;
}

/// Parses a model-emitted insight list: one insight per non-empty line,
/// leading bullets and numbering stripped. Keeps the newest max_rules lines.
std::vector<std::string> parse_insights(const std::string& text, int max_rules) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = text.substr(
            start, end == std::string::npos ? std::string::npos : end - start);
        std::string t = trim(line);
        std::size_t i = 0;
        while (i < t.size() && (std::isdigit(static_cast<unsigned char>(t[i])))) ++i;
        if (i > 0 && i < t.size() && (t[i] == '.' || t[i] == ')')) {
            t = trim(t.substr(i + 1));
        } else if (!t.empty() && (t[0] == '-' || t[0] == '*')) {
            t = trim(t.substr(1));
        }
        if (!t.empty()) out.push_back(t);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (out.size() > static_cast<std::size_t>(max_rules))
        out.erase(out.begin(),
                  out.end() - static_cast<std::vector<std::string>::difference_type>(max_rules));
    return out;
}

} // namespace

std::string render_experience(const Experience& e) {
    return "[memory " + e.task_id + "] Q: " + e.prompt + "\nA: " + e.prediction +
           (e.correct ? " (verified)" : " (unverified)");
}

std::string render_experiences(const std::vector<Experience>& list) {
    std::string out;
    for (const auto& e : list) {
        if (!out.empty()) out += "\n\n";
        out += render_experience(e);
    }
    return out;
}

MemoryPolicy::MemoryPolicy(PolicyConfig config, PromptLibrary prompts,
                           GenerationDefaults defaults, EvaluatorKind evaluator)
    : config_(config),
      prompts_(std::move(prompts)),
      defaults_(defaults),
      evaluator_(evaluator) {
    if (config_.k < 1) throw ConfigError("policy config: k must be >= 1");
    if (config_.batch_update_size < 1)
        throw ConfigError("policy config: batch_update_size must be >= 1");
    if (config_.max_tries < 1) throw ConfigError("policy config: max_tries must be >= 1");
    if (config_.max_num_rules < 1)
        throw ConfigError("policy config: max_num_rules must be >= 1");
    if (config_.induce_steps < 1)
        throw ConfigError("policy config: induce_steps must be >= 1");
}

GenerationRequest MemoryPolicy::make_request(std::string user_text) const {
    GenerationRequest req;
    req.user_text = std::move(user_text);
    req.temperature = defaults_.temperature;
    req.max_tokens = defaults_.max_tokens;
    req.reasoning = defaults_.reasoning;
    return req;
}

std::string MemoryPolicy::compose_user_text(const std::string& context_text,
                                            const std::string& question) const {
    std::string text = prompts_.render(
        "user_turn", {{"context", context_text}, {"question", question}});
    std::size_t b = 0;
    while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    return text.substr(b);
}

GenerationRequest MemoryPolicy::answer_request(const MemoryState&, const Task& task,
                                               const Context& context,
                                               const std::string& extra_notes) const {
    std::string ctx = context.rendered_text;
    if (!extra_notes.empty()) {
        if (!ctx.empty()) ctx += "\n\n";
        ctx += extra_notes;
    }
    return make_request(compose_user_text(ctx, task.prompt));
}

StepOutcome MemoryPolicy::step(const MemoryState& state, const Task& task,
                               Gateway& gateway) const {
    Context context = build_context(state, task, gateway);
    GenerationResult result = gateway.generate(answer_request(state, task, context, ""));
    Feedback feedback = grade(result.text, task);
    StepOutcome outcome;
    outcome.prediction = result.text;
    outcome.feedback = feedback;
    outcome.next_state = update(state, task, result.text, feedback, gateway);
    outcome.tries_used = 1;
    outcome.context = std::move(context);
    return outcome;
}

std::string MemoryPolicy::predict_readonly(const MemoryState& state, const Task& task,
                                           Gateway& gateway) const {
    Context context = build_context(state, task, gateway);
    return gateway.generate(answer_request(state, task, context, "")).text;
}

Feedback MemoryPolicy::grade(const std::string& prediction, const Task& task) const {
    return evaluate_answer(prediction, task, evaluator_);
}

MemoryState MemoryPolicy::update(const MemoryState&, const Task&, const std::string&,
                                 const Feedback&, Gateway&) const {
    throw InvariantViolation("policy '" + id() + "' does not use the default update");
}

// ---------------------------------------------------------------- memory_free

MemoryState MemoryFreePolicy::initial_state() const {
    return MemoryState(id(), EmptyPayload{});
}

Context MemoryFreePolicy::build_context(const MemoryState& state, const Task&,
                                        Gateway&) const {
    payload_as<EmptyPayload>(state, id());
    return Context{};
}

MemoryState MemoryFreePolicy::update(const MemoryState& state, const Task&,
                                     const std::string&, const Feedback&,
                                     Gateway&) const {
    return state;
}

// ----------------------------------------------------------------- exp_recent

MemoryState ExpRecentPolicy::initial_state() const {
    return MemoryState(id(), RecentBuffer{});
}

Context ExpRecentPolicy::build_context(const MemoryState& state, const Task&,
                                       Gateway&) const {
    const auto& buf = payload_as<RecentBuffer>(state, id());
    Context ctx;
    std::size_t n = buf.entries.size();
    std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(config_.k));
    std::vector<Experience> window(buf.entries.end() - static_cast<long>(take),
                                   buf.entries.end());
    ctx.rendered_text = render_experiences(window);
    for (const auto& e : window) ctx.provenance.emplace_back(e.task_id, 0.0);
    return ctx;
}

MemoryState ExpRecentPolicy::update(const MemoryState& state, const Task& task,
                                    const std::string& prediction,
                                    const Feedback& feedback, Gateway&) const {
    RecentBuffer buf = payload_as<RecentBuffer>(state, id());
    buf.entries.push_back(
        make_experience(task, prediction, feedback, next_timestamp(buf.entries)));
    return MemoryState(id(), std::move(buf));
}

// -------------------------------------------------------------------- exp_rag

MemoryState ExpRagPolicy::initial_state() const {
    return MemoryState(id(), VectorStore{});
}

Context ExpRagPolicy::build_context(const MemoryState& state, const Task& task,
                                    Gateway& gateway) const {
    const auto& store = payload_as<VectorStore>(state, id());
    Context ctx;
    if (store.entries.empty()) return ctx;
    EmbeddingVector query = gateway.embed(task.prompt);
    std::vector<double> scores;
    scores.reserve(store.entries.size());
    for (const auto& e : store.entries) {
        if (!e.embedding)
            throw InvariantViolation("vector store entry without embedding");
        scores.push_back(cosine_similarity(query, *e.embedding));
    }
    std::vector<Experience> picked;
    for (const auto& s : rank_top_k(scores, config_.k)) {
        picked.push_back(store.entries[s.index]);
        ctx.provenance.emplace_back(store.entries[s.index].task_id, s.score);
    }
    ctx.rendered_text = render_experiences(picked);
    return ctx;
}

MemoryState ExpRagPolicy::update(const MemoryState& state, const Task& task,
                                 const std::string& prediction,
                                 const Feedback& feedback, Gateway& gateway) const {
    VectorStore store = payload_as<VectorStore>(state, id());
    Experience e =
        make_experience(task, prediction, feedback, next_timestamp(store.entries));
    e.embedding = gateway.embed(task.prompt);
    store.entries.push_back(std::move(e));
    return MemoryState(id(), std::move(store));
}

// --------------------------------------------------------------------- dc_rs

MemoryState DcRsPolicy::initial_state() const {
    return MemoryState(id(), Cheatsheet{});
}

Context DcRsPolicy::build_context(const MemoryState& state, const Task&,
                                  Gateway&) const {
    const auto& sheet = payload_as<Cheatsheet>(state, id());
    Context ctx;
    ctx.rendered_text = sheet.memory;
    return ctx;
}

GenerationRequest DcRsPolicy::answer_request(const MemoryState&, const Task& task,
                                             const Context& context,
                                             const std::string&) const {
    std::string memory = context.rendered_text.empty() ? "(empty)" : context.rendered_text;
    return make_request(
        prompts_.render("generator", {{"memory", memory}, {"question", task.prompt}}));
}

StepOutcome DcRsPolicy::step(const MemoryState& state, const Task& task,
                             Gateway& gateway) const {
    const auto& sheet = payload_as<Cheatsheet>(state, id());
    EmbeddingVector task_embedding = gateway.embed(task.prompt);

    // Curate the memory from retrieved cases before answering.
    Context ctx;
    std::string memory = sheet.memory;
    if (!sheet.history.empty()) {
        std::vector<double> scores;
        scores.reserve(sheet.history.size());
        for (const auto& e : sheet.history) {
            if (!e.embedding)
                throw InvariantViolation("cheatsheet history entry without embedding");
            scores.push_back(cosine_similarity(task_embedding, *e.embedding));
        }
        std::vector<Experience> picked;
        for (const auto& s : rank_top_k(scores, config_.k)) {
            picked.push_back(sheet.history[s.index]);
            ctx.provenance.emplace_back(sheet.history[s.index].task_id, s.score);
        }
        std::string retrieved = render_experiences(picked);
        GenerationResult curated = gateway.generate(make_request(prompts_.render(
            "curator", {{"memory", memory.empty() ? "(empty)" : memory},
                        {"context", retrieved},
                        {"question", task.prompt}})));
        memory = trim(curated.text);
        // A curator that produced nothing must not wipe the memory; fall back
        // to the retrieved cases verbatim.
        if (memory.empty()) memory = retrieved;
    }
    ctx.rendered_text = memory;

    GenerationResult result = gateway.generate(answer_request(state, task, ctx, ""));
    Feedback feedback = grade(result.text, task);

    Cheatsheet next = sheet;
    next.memory = memory;
    Experience e =
        make_experience(task, result.text, feedback, next_timestamp(next.history));
    e.embedding = std::move(task_embedding);
    next.history.push_back(std::move(e));

    StepOutcome outcome;
    outcome.prediction = result.text;
    outcome.feedback = feedback;
    outcome.next_state = MemoryState(id(), std::move(next));
    outcome.tries_used = 1;
    outcome.context = std::move(ctx);
    return outcome;
}

// ----------------------------------------------------------------------- awm

MemoryState AwmPolicy::initial_state() const {
    return MemoryState(id(), WorkflowSet{});
}

Context AwmPolicy::build_context(const MemoryState& state, const Task& task,
                                 Gateway& gateway) const {
    const auto& wfs = payload_as<WorkflowSet>(state, id());
    Context ctx;
    if (wfs.workflows.empty()) return ctx;
    EmbeddingVector query = gateway.embed(task.prompt);
    std::vector<double> scores;
    scores.reserve(wfs.workflows.size());
    for (const auto& w : wfs.workflows) {
        if (!w.embedding) throw InvariantViolation("workflow without embedding");
        scores.push_back(cosine_similarity(query, *w.embedding));
    }
    std::string rendered;
    for (const auto& s : rank_top_k(scores, config_.k)) {
        const Workflow& w = wfs.workflows[s.index];
        if (!rendered.empty()) rendered += "\n\n";
        rendered += "## Workflow (from " + w.source_task_id + ")\n" + w.text;
        ctx.provenance.emplace_back(w.source_task_id, s.score);
    }
    ctx.rendered_text = "Workflows:\n\n" + rendered;
    return ctx;
}

StepOutcome AwmPolicy::step(const MemoryState& state, const Task& task,
                            Gateway& gateway) const {
    const auto& wfs = payload_as<WorkflowSet>(state, id());
    Context ctx = build_context(state, task, gateway);
    GenerationResult result = gateway.generate(answer_request(state, task, ctx, ""));
    Feedback feedback = grade(result.text, task);

    WorkflowSet next = wfs;
    if (feedback.correct) {
        next.success_count += 1;
        if (next.success_count % config_.induce_steps == 0) {
            Experience e = make_experience(task, result.text, feedback,
                                           next.success_count);
            std::string induction = prompts_.text("workflow_induction") + "\n\n" +
                                    prompts_.text("workflow_one_shot") + "\n\n" +
                                    render_experience(e) + "\n\n## Summary Workflows";
            GenerationResult induced = gateway.generate(make_request(induction));
            Workflow w;
            w.text = trim(induced.text);
            w.source_task_id = task.id;
            w.embedding = gateway.embed(task.prompt);
            next.workflows.push_back(std::move(w));
        }
    }

    StepOutcome outcome;
    outcome.prediction = result.text;
    outcome.feedback = feedback;
    outcome.next_state = MemoryState(id(), std::move(next));
    outcome.tries_used = 1;
    outcome.context = std::move(ctx);
    return outcome;
}

// ------------------------------------------------------------------- expel_st

MemoryState ExpelStPolicy::initial_state() const {
    return MemoryState(id(), ExpelState{});
}

Context ExpelStPolicy::build_context(const MemoryState& state, const Task& task,
                                     Gateway& gateway) const {
    const auto& ex = payload_as<ExpelState>(state, id());
    Context ctx;
    std::string sections;
    if (!ex.insights.empty())
        sections = "Insights:\n" + render_insight_list(ex.insights);
    if (!ex.pool.empty()) {
        EmbeddingVector query = gateway.embed(task.prompt);
        std::vector<double> scores;
        scores.reserve(ex.pool.size());
        for (const auto& e : ex.pool) {
            if (!e.embedding)
                throw InvariantViolation("experience pool entry without embedding");
            scores.push_back(cosine_similarity(query, *e.embedding));
        }
        std::vector<Experience> picked;
        for (const auto& s : rank_top_k(scores, config_.k)) {
            picked.push_back(ex.pool[s.index]);
            ctx.provenance.emplace_back(ex.pool[s.index].task_id, s.score);
        }
        if (!sections.empty()) sections += "\n\n";
        sections += render_experiences(picked);
    }
    ctx.rendered_text = std::move(sections);
    return ctx;
}

ExpelState ExpelStPolicy::absorb_success(const ExpelState& state, const Task& task,
                                         const std::string& prediction,
                                         const Feedback& feedback,
                                         Gateway& gateway) const {
    ExpelState next = state;
    Experience e = make_experience(task, prediction, feedback, next_timestamp(next.pool));
    e.embedding = gateway.embed(task.prompt);
    next.pool.push_back(e);
    next.recent_successes.push_back(std::move(e));
    return next;
}

ExpelState ExpelStPolicy::refresh_insights_if_due(ExpelState state,
                                                  Gateway& gateway) const {
    if (state.recent_successes.size() <
        static_cast<std::size_t>(config_.batch_update_size))
        return state;
    GenerationResult refreshed = gateway.generate(make_request(prompts_.render(
        "insight", {{"memory", render_insight_list(state.insights)},
                    {"context", render_experiences(state.recent_successes)}})));
    state.insights = parse_insights(refreshed.text, config_.max_num_rules);
    state.recent_successes.clear();
    return state;
}

StepOutcome ExpelStPolicy::step(const MemoryState& state, const Task& task,
                                Gateway& gateway) const {
    const auto& ex = payload_as<ExpelState>(state, id());
    Context ctx = build_context(state, task, gateway);
    GenerationResult result = gateway.generate(answer_request(state, task, ctx, ""));
    Feedback feedback = grade(result.text, task);

    ExpelState next = ex;
    if (feedback.correct) {
        next = absorb_success(next, task, result.text, feedback, gateway);
        next = refresh_insights_if_due(std::move(next), gateway);
    }

    StepOutcome outcome;
    outcome.prediction = result.text;
    outcome.feedback = feedback;
    outcome.next_state = MemoryState(id(), std::move(next));
    outcome.tries_used = 1;
    outcome.context = std::move(ctx);
    return outcome;
}

// ------------------------------------------------------------------- expel_mt

StepOutcome ExpelMtPolicy::step(const MemoryState& state, const Task& task,
                                Gateway& gateway) const {
    const auto& ex = payload_as<ExpelState>(state, id());
    Context ctx = build_context(state, task, gateway);

    std::string reflections;
    std::string success_prediction, failure_prediction;
    bool succeeded = false, failed = false;
    std::string last_prediction;
    Feedback last_feedback;
    int tries = 0;

    for (int attempt = 0; attempt < config_.max_tries; ++attempt) {
        ++tries;
        std::string notes =
            reflections.empty() ? std::string{} : "Reflections:\n" + reflections;
        GenerationResult result =
            gateway.generate(answer_request(state, task, ctx, notes));
        last_prediction = result.text;
        last_feedback = grade(result.text, task);
        if (last_feedback.correct) {
            succeeded = true;
            success_prediction = result.text;
            break;
        }
        failed = true;
        failure_prediction = result.text;
        // Reflect on every failed attempt, the final one included.
        GenerationResult reflection = gateway.generate(make_request(prompts_.render(
            "reflection", {{"question", task.prompt}, {"context", result.text}})));
        if (!reflections.empty()) reflections += "\n";
        reflections += trim(reflection.text);
    }

    ExpelState next = ex;
    if (succeeded) {
        next = absorb_success(next, task, success_prediction, last_feedback, gateway);
    }
    if (succeeded && failed) {
        std::string pair_text = "Task: " + task.prompt +
                                "\n\nFailed attempt:\n" + failure_prediction +
                                "\n\nSuccessful attempt:\n" + success_prediction;
        GenerationResult refreshed = gateway.generate(make_request(prompts_.render(
            "insight_pair", {{"memory", render_insight_list(next.insights)},
                             {"context", pair_text}})));
        next.insights = parse_insights(refreshed.text, config_.max_num_rules);
    }
    next = refresh_insights_if_due(std::move(next), gateway);

    StepOutcome outcome;
    outcome.prediction = last_prediction;
    outcome.feedback = last_feedback;
    outcome.next_state = MemoryState(id(), std::move(next));
    outcome.tries_used = tries;
    outcome.context = std::move(ctx);
    return outcome;
}

// -------------------------------------------------------------------- factory

std::vector<std::string> policy_ids() {
    return {"memory_free", "exp_recent", "exp_rag", "dc_rs",
            "awm",         "expel_st",   "expel_mt"};
}

std::unique_ptr<MemoryPolicy> make_policy(const std::string& id, PolicyConfig config,
                                          PromptLibrary prompts,
                                          GenerationDefaults defaults,
                                          EvaluatorKind evaluator) {
    if (id == "memory_free")
        return std::make_unique<MemoryFreePolicy>(config, std::move(prompts), defaults,
                                                  evaluator);
    if (id == "exp_recent")
        return std::make_unique<ExpRecentPolicy>(config, std::move(prompts), defaults,
                                                 evaluator);
    if (id == "exp_rag")
        return std::make_unique<ExpRagPolicy>(config, std::move(prompts), defaults,
                                              evaluator);
    if (id == "dc_rs")
        return std::make_unique<DcRsPolicy>(config, std::move(prompts), defaults,
                                            evaluator);
    if (id == "awm")
        return std::make_unique<AwmPolicy>(config, std::move(prompts), defaults,
                                           evaluator);
    if (id == "expel_st")
        return std::make_unique<ExpelStPolicy>(config, std::move(prompts), defaults,
                                               evaluator);
    if (id == "expel_mt")
        return std::make_unique<ExpelMtPolicy>(config, std::move(prompts), defaults,
                                               evaluator);
    throw ConfigError("unknown policy id '" + id + "'");
}

} // namespace seqmem
