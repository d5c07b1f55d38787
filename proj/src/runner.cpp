#include "seqmem/runner.hpp"

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <numeric>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {
namespace {

using nlohmann::json;

constexpr std::uint64_t kReplaySalt = 0x7265706c61796bULL;

json ledger_to_json(const UsageLedger& l) {
    return json{{"prompt_tokens_total", l.prompt_tokens_total},
                {"completion_tokens_total", l.completion_tokens_total},
                {"call_count", l.call_count},
                {"retry_count", l.retry_count},
                {"wall_clock_ms_total", l.wall_clock_ms_total}};
}

UsageLedger ledger_from_json(const json& j, const std::string& origin) {
    if (!j.is_object()) throw ParseError(origin + ": ledger must be an object");
    UsageLedger l;
    try {
        l.prompt_tokens_total = j.at("prompt_tokens_total").get<long long>();
        l.completion_tokens_total = j.at("completion_tokens_total").get<long long>();
        l.call_count = j.at("call_count").get<long long>();
        l.retry_count = j.at("retry_count").get<long long>();
        l.wall_clock_ms_total = j.at("wall_clock_ms_total").get<double>();
    } catch (const json::exception& e) {
        throw ParseError(origin + ": bad ledger: " + e.what());
    }
    return l;
}

UsageLedger ledger_delta(const UsageLedger& after, const UsageLedger& before) {
    UsageLedger d;
    d.prompt_tokens_total = after.prompt_tokens_total - before.prompt_tokens_total;
    d.completion_tokens_total = after.completion_tokens_total - before.completion_tokens_total;
    d.call_count = after.call_count - before.call_count;
    d.retry_count = after.retry_count - before.retry_count;
    d.wall_clock_ms_total = after.wall_clock_ms_total - before.wall_clock_ms_total;
    return d;
}

UsageLedger ledger_sum(const UsageLedger& a, const UsageLedger& b) {
    UsageLedger s;
    s.prompt_tokens_total = a.prompt_tokens_total + b.prompt_tokens_total;
    s.completion_tokens_total = a.completion_tokens_total + b.completion_tokens_total;
    s.call_count = a.call_count + b.call_count;
    s.retry_count = a.retry_count + b.retry_count;
    s.wall_clock_ms_total = a.wall_clock_ms_total + b.wall_clock_ms_total;
    return s;
}

json event_run_start(const RunLog& log) {
    return json{{"event", "run_start"},
                {"policy", log.policy_id},
                {"dataset", log.dataset_name},
                {"T", log.T},
                {"seed", log.seed},
                {"checkpoints", log.checkpoints},
                {"horizons", log.horizons},
                {"replay_budget", log.replay_budget}};
}

json event_step(const StepRecord& r) {
    return json{{"event", "step"},
                {"step", r.step},
                {"task_id", r.task_id},
                {"prediction", r.prediction},
                {"correct", r.correct},
                {"prompt_tokens", r.prompt_tokens},
                {"completion_tokens", r.completion_tokens},
                {"latency", r.latency_ms},
                {"tries_used", r.tries_used}};
}

json event_snapshot(const Snapshot& s) {
    return json{{"event", "snapshot"},
                {"step_index", s.step_index},
                {"state", s.state},
                {"ledger_delta", ledger_to_json(s.ledger_delta)}};
}

json event_holdout(const HoldoutRecord& r) {
    return json{{"event", "holdout"},
                {"step", r.step},
                {"source_dataset", r.source_dataset},
                {"distribution_tag", to_string(r.tag)},
                {"accuracy", r.accuracy}};
}

json event_retro(const RetroRecord& r) {
    return json{{"event", "retro"},
                {"step", r.step},
                {"task_index", r.task_index},
                {"task_id", r.task_id},
                {"correct", r.correct}};
}

json event_run_end(const UsageLedger& l) {
    return json{{"event", "run_end"}, {"ledger", ledger_to_json(l)}};
}

/// Applies fn to every index in [0, n) with at most max_in_flight concurrent
/// invocations, preserving result order. The first exception wins.
std::vector<int> map_batched(std::size_t n, int max_in_flight,
                             const std::function<int(std::size_t)>& fn) {
    std::vector<int> out(n, 0);
    if (max_in_flight <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    const std::size_t width = static_cast<std::size_t>(max_in_flight);
    for (std::size_t base = 0; base < n; base += width) {
        const std::size_t end = std::min(base + width, n);
        std::vector<std::future<int>> batch;
        batch.reserve(end - base);
        for (std::size_t i = base; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, fn, i));
        }
        std::exception_ptr first;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            try {
                out[base + i] = batch[i].get();
            } catch (...) {
                if (!first) first = std::current_exception();
            }
        }
        if (first) std::rethrow_exception(first);
    }
    return out;
}

void write_resume_token(const std::string& path, int last_completed_step,
                        const MemoryState& state, const UsageLedger& ledger) {
    json token{{"last_completed_step", last_completed_step},
               {"state", state.serialize()},
               {"ledger", ledger_to_json(ledger)}};
    write_text_file_atomic(path, token.dump() + "\n");
}

struct ResumeToken {
    int last_completed_step = 0;
    std::string state;
    UsageLedger ledger;
};

ResumeToken read_resume_token(const std::string& path) {
    const std::string text = read_text_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    ResumeToken t;
    try {
        t.last_completed_step = j.at("last_completed_step").get<int>();
        t.state = j.at("state").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(path + ": bad resume token: " + e.what());
    }
    t.ledger = ledger_from_json(j.value("ledger", json::object()), path);
    return t;
}

void validate_plan(const RunPlan& plan, const MemoryPolicy& policy) {
    const int T = plan.stream.size();
    if (plan.policy_id != policy.id()) {
        throw ConfigError("plan names policy '" + plan.policy_id + "' but got '" +
                          policy.id() + "'");
    }
    if (plan.checkpoint_schedule.empty()) {
        throw ConfigError("checkpoint schedule is empty");
    }
    int prev = 0;
    for (int c : plan.checkpoint_schedule) {
        if (c <= prev) throw ConfigError("checkpoint schedule must be strictly increasing");
        if (c > T) throw ConfigError("checkpoint " + std::to_string(c) + " exceeds stream length " +
                                     std::to_string(T));
        prev = c;
    }
    if (plan.checkpoint_schedule.back() != T) {
        throw ConfigError("checkpoint schedule must end at the final step " + std::to_string(T));
    }
    for (int t : plan.horizons) {
        if (t < 1 || t >= T) {
            throw ConfigError("horizon " + std::to_string(t) + " must lie in [1, " +
                              std::to_string(T - 1) + "]");
        }
    }
    if (plan.replay_budget < 0) throw ConfigError("replay budget must be non-negative");
    if (plan.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
    for (const HoldoutSet& hs : plan.holdouts) {
        if (hs.tasks.empty()) throw ConfigError("hold-out set from '" + hs.source_dataset +
                                                "' is empty");
        for (const Task& t : hs.tasks) {
            for (int i = 1; i <= T; ++i) {
                if (plan.stream.at(i).id == t.id) {
                    throw ValidationError("hold-out task '" + t.id +
                                          "' also appears in the online stream");
                }
            }
        }
    }
}

/// Runs steps [start_step, T], appending to log/state. Events stream to
/// *events when present; the resume token tracks the last completed step.
RunLog run_loop(const RunPlan& plan, const MemoryPolicy& policy, Gateway& gateway,
                RunLog log, MemoryState state, int start_step, std::ofstream* events,
                const std::string& token_path) {
    const int T = plan.stream.size();
    const std::vector<int> fixed_replay =
        replay_tasks(T, plan.checkpoint_schedule, plan.replay_budget, plan.seed);

    UsageLedger at_last_snapshot;
    for (const Snapshot& s : log.snapshots) {
        at_last_snapshot = ledger_sum(at_last_snapshot, s.ledger_delta);
    }

    auto emit = [&](const json& ev) {
        if (events != nullptr) {
            *events << ev.dump() << '\n';
            events->flush();
        }
    };
    auto abort_run = [&](int step, const GatewayError& e) -> RunAborted {
        return RunAborted("gateway failure at step " + std::to_string(step) + ": " + e.what(),
                          step - 1);
    };

    for (int step = start_step; step <= T; ++step) {
        const Task& task = plan.stream.at(step);
        const UsageLedger before = gateway.ledger();
        StepOutcome outcome;
        try {
            outcome = policy.step(state, task, gateway);
        } catch (const GatewayError& e) {
            throw abort_run(step, e);
        }
        const UsageLedger after = gateway.ledger();

        StepRecord rec;
        rec.step = step;
        rec.task_id = task.id;
        rec.prediction = outcome.prediction;
        rec.correct = outcome.feedback.correct ? 1 : 0;
        rec.prompt_tokens = after.prompt_tokens_total - before.prompt_tokens_total;
        rec.completion_tokens = after.completion_tokens_total - before.completion_tokens_total;
        rec.latency_ms = after.wall_clock_ms_total - before.wall_clock_ms_total;
        rec.tries_used = outcome.tries_used;
        state = std::move(outcome.next_state);
        log.steps.push_back(rec);
        emit(event_step(rec));

        const bool at_checkpoint =
            std::binary_search(plan.checkpoint_schedule.begin(),
                               plan.checkpoint_schedule.end(), step);
        if (at_checkpoint) {
            const std::string frozen = state.serialize();
            const UsageLedger now = gateway.ledger();
            Snapshot snap{step, frozen, ledger_delta(now, at_last_snapshot)};
            at_last_snapshot = now;
            log.snapshots.push_back(snap);
            emit(event_snapshot(snap));

            try {
                for (const HoldoutSet& hs : plan.holdouts) {
                    HoldoutRecord hr;
                    hr.step = step;
                    hr.source_dataset = hs.source_dataset;
                    hr.tag = hs.tag;
                    hr.accuracy = evaluate_holdout_at(state, hs, policy, gateway,
                                                      plan.max_in_flight);
                    log.holdouts.push_back(hr);
                    emit(event_holdout(hr));
                }

                std::vector<int> replayed;
                if (static_cast<long long>(step) <= plan.replay_budget) {
                    replayed.resize(static_cast<std::size_t>(step));
                    std::iota(replayed.begin(), replayed.end(), 1);
                } else {
                    replayed = fixed_replay;
                }
                std::vector<int> outcomes = map_batched(
                    replayed.size(), plan.max_in_flight, [&](std::size_t i) {
                        const Task& past = plan.stream.at(replayed[i]);
                        const std::string pred = policy.predict_readonly(state, past, gateway);
                        return policy.grade(pred, past).correct ? 1 : 0;
                    });
                for (std::size_t i = 0; i < replayed.size(); ++i) {
                    RetroRecord rr;
                    rr.step = step;
                    rr.task_index = replayed[i];
                    rr.task_id = plan.stream.at(replayed[i]).id;
                    rr.correct = outcomes[i];
                    log.retro.push_back(rr);
                    emit(event_retro(rr));
                }
            } catch (const GatewayError& e) {
                throw abort_run(step, e);
            }

            if (state.serialize() != frozen) {
                throw InvariantViolation("memory state changed during checkpoint evaluation at step " +
                                         std::to_string(step));
            }
        }

        if (!token_path.empty()) {
            write_resume_token(token_path, step, state, gateway.ledger());
        }
    }

    log.ledger = gateway.ledger();
    log.completed = true;
    emit(event_run_end(log.ledger));
    if (!token_path.empty()) {
        std::error_code ec;
        std::filesystem::remove(token_path, ec);
    }
    return log;
}

RunLog header_log(const RunPlan& plan) {
    RunLog log;
    log.policy_id = plan.policy_id;
    log.dataset_name = plan.dataset_name;
    log.T = plan.stream.size();
    log.seed = plan.seed;
    log.checkpoints = plan.checkpoint_schedule;
    log.horizons = plan.horizons;
    log.replay_budget = plan.replay_budget;
    return log;
}

} // namespace

std::vector<int> make_schedule(int T, int n_checkpoints) {
    if (T < 1) throw ArgumentError("stream length must be positive");
    if (n_checkpoints < 1 || n_checkpoints > T) {
        throw ArgumentError("checkpoint count must lie in [1, " + std::to_string(T) + "]");
    }
    std::vector<int> schedule;
    schedule.reserve(static_cast<std::size_t>(n_checkpoints));
    for (int i = 1; i <= n_checkpoints; ++i) {
        schedule.push_back(static_cast<int>((static_cast<long long>(i) * T) / n_checkpoints));
    }
    return schedule;
}

std::vector<int> default_horizons(int T, int n_checkpoints) {
    const std::vector<int> schedule = make_schedule(T, n_checkpoints);
    const int base = schedule.front();
    std::vector<int> horizons;
    for (int t : {base, 2 * base, 4 * base}) {
        if (t >= 1 && t <= T - 1 && (horizons.empty() || horizons.back() != t)) {
            horizons.push_back(t);
        }
    }
    if (horizons.empty() && T > 1) horizons.push_back(1);
    return horizons;
}

std::vector<int> replay_tasks(int T, const std::vector<int>& checkpoints,
                              long long replay_budget, std::uint64_t seed) {
    if (checkpoints.empty()) return {};
    const int first = checkpoints.front();
    if (first < 1 || first > T) throw ArgumentError("first checkpoint out of range");
    std::vector<int> pool(static_cast<std::size_t>(first));
    std::iota(pool.begin(), pool.end(), 1);
    if (static_cast<long long>(pool.size()) <= replay_budget) return pool;
    return sample_without_replacement(pool, static_cast<std::size_t>(replay_budget),
                                      seed ^ kReplaySalt);
}

std::string run_log_filename() { return "runlog.jsonl"; }
std::string resume_token_filename() { return "resume.json"; }

std::vector<int> RunLog::online_trace() const {
    std::vector<int> trace(static_cast<std::size_t>(T), 0);
    if (static_cast<int>(steps.size()) != T) {
        throw ValidationError("run log holds " + std::to_string(steps.size()) +
                              " steps for a stream of length " + std::to_string(T));
    }
    for (const StepRecord& r : steps) {
        if (r.step < 1 || r.step > T) throw ValidationError("step record out of range");
        trace[static_cast<std::size_t>(r.step - 1)] = r.correct;
    }
    return trace;
}

EvalMatrix RunLog::eval_matrix(bool alternative_baseline) const {
    EvalMatrix m;
    m.T = T;
    m.column_steps = checkpoints;
    for (const RetroRecord& r : retro) {
        m.set_entry(r.task_index, r.step, r.correct);
    }
    if (alternative_baseline) {
        for (int c : checkpoints) {
            if (m.has_entry(c, c)) m.set_baseline(c, m.entry(c, c));
        }
    } else {
        std::vector<int> trace = online_trace();
        for (const RetroRecord& r : retro) {
            if (!m.has_baseline(r.task_index)) {
                m.set_baseline(r.task_index,
                               trace[static_cast<std::size_t>(r.task_index - 1)]);
            }
        }
    }
    m.validate();
    return m;
}

std::vector<std::pair<int, double>> RunLog::holdout_points(const std::string& source,
                                                           DistributionTag tag) const {
    std::vector<std::pair<int, double>> points;
    for (const HoldoutRecord& r : holdouts) {
        if (r.source_dataset == source && r.tag == tag) {
            points.emplace_back(r.step, r.accuracy);
        }
    }
    return points;
}

std::vector<std::pair<std::string, DistributionTag>> RunLog::holdout_groups() const {
    std::vector<std::pair<std::string, DistributionTag>> groups;
    for (const HoldoutRecord& r : holdouts) {
        std::pair<std::string, DistributionTag> key{r.source_dataset, r.tag};
        if (std::find(groups.begin(), groups.end(), key) == groups.end()) {
            groups.push_back(key);
        }
    }
    return groups;
}

std::string RunLog::to_jsonl() const {
    std::ostringstream out;
    out << event_run_start(*this).dump() << '\n';
    std::size_t si = 0, hi = 0, ri = 0;
    for (const StepRecord& rec : steps) {
        out << event_step(rec).dump() << '\n';
        while (si < snapshots.size() && snapshots[si].step_index == rec.step) {
            out << event_snapshot(snapshots[si]).dump() << '\n';
            ++si;
        }
        while (hi < holdouts.size() && holdouts[hi].step == rec.step) {
            out << event_holdout(holdouts[hi]).dump() << '\n';
            ++hi;
        }
        while (ri < retro.size() && retro[ri].step == rec.step) {
            out << event_retro(retro[ri]).dump() << '\n';
            ++ri;
        }
    }
    if (completed) out << event_run_end(ledger).dump() << '\n';
    return out.str();
}

RunLog RunLog::from_jsonl_text(const std::string& text, const std::string& origin) {
    RunLog log;
    bool saw_start = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        json ev;
        try {
            ev = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!ev.is_object() || !ev.contains("event") || !ev["event"].is_string()) {
            throw ValidationError(where + ": event line must be an object with an 'event' field");
        }
        const std::string kind = ev["event"].get<std::string>();
        try {
            if (kind == "run_start") {
                if (saw_start) throw ValidationError(where + ": duplicate run_start");
                saw_start = true;
                log.policy_id = ev.at("policy").get<std::string>();
                log.dataset_name = ev.at("dataset").get<std::string>();
                log.T = ev.at("T").get<int>();
                log.seed = ev.at("seed").get<std::uint64_t>();
                log.checkpoints = ev.at("checkpoints").get<std::vector<int>>();
                log.horizons = ev.at("horizons").get<std::vector<int>>();
                log.replay_budget = ev.at("replay_budget").get<long long>();
            } else if (!saw_start) {
                throw ValidationError(where + ": first event must be run_start");
            } else if (kind == "step") {
                StepRecord r;
                r.step = ev.at("step").get<int>();
                r.task_id = ev.at("task_id").get<std::string>();
                r.prediction = ev.at("prediction").get<std::string>();
                r.correct = ev.at("correct").get<int>();
                r.prompt_tokens = ev.at("prompt_tokens").get<long long>();
                r.completion_tokens = ev.at("completion_tokens").get<long long>();
                r.latency_ms = ev.at("latency").get<double>();
                r.tries_used = ev.at("tries_used").get<int>();
                log.steps.push_back(std::move(r));
            } else if (kind == "snapshot") {
                Snapshot s;
                s.step_index = ev.at("step_index").get<int>();
                s.state = ev.at("state").get<std::string>();
                s.ledger_delta = ledger_from_json(ev.at("ledger_delta"), where);
                log.snapshots.push_back(std::move(s));
            } else if (kind == "holdout") {
                HoldoutRecord r;
                r.step = ev.at("step").get<int>();
                r.source_dataset = ev.at("source_dataset").get<std::string>();
                r.tag = distribution_tag_from_string(
                    ev.at("distribution_tag").get<std::string>());
                r.accuracy = ev.at("accuracy").get<double>();
                log.holdouts.push_back(std::move(r));
            } else if (kind == "retro") {
                RetroRecord r;
                r.step = ev.at("step").get<int>();
                r.task_index = ev.at("task_index").get<int>();
                r.task_id = ev.at("task_id").get<std::string>();
                r.correct = ev.at("correct").get<int>();
                log.retro.push_back(std::move(r));
            } else if (kind == "run_end") {
                log.ledger = ledger_from_json(ev.at("ledger"), where);
                log.completed = true;
            } else {
                throw ValidationError(where + ": unknown event '" + kind + "'");
            }
        } catch (const json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    if (!saw_start) throw ValidationError(origin + ": missing run_start event");
    return log;
}

RunLog RunLog::from_jsonl_file(const std::string& path) {
    return from_jsonl_text(read_text_file(path), path);
}

double evaluate_holdout_at(const MemoryState& state, const HoldoutSet& holdout,
                           const MemoryPolicy& policy, Gateway& gateway,
                           int max_in_flight) {
    if (holdout.tasks.empty()) throw ArgumentError("hold-out set is empty");
    const std::string frozen = state.serialize();
    std::vector<int> outcomes = map_batched(
        holdout.tasks.size(), max_in_flight, [&](std::size_t i) {
            const Task& task = holdout.tasks[i];
            const std::string pred = policy.predict_readonly(state, task, gateway);
            return policy.grade(pred, task).correct ? 1 : 0;
        });
    if (state.serialize() != frozen) {
        throw InvariantViolation("memory state changed during hold-out evaluation");
    }
    long long hits = std::accumulate(outcomes.begin(), outcomes.end(), 0LL);
    return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

double evaluate_holdout_at(const Snapshot& snapshot, const HoldoutSet& holdout,
                           const MemoryPolicy& policy, Gateway& gateway,
                           int max_in_flight) {
    MemoryState state;
    try {
        state = MemoryState::deserialize(snapshot.state);
    } catch (const Error& e) {
        throw InvariantViolation("snapshot at step " + std::to_string(snapshot.step_index) +
                                 " cannot be restored: " + e.what());
    }
    return evaluate_holdout_at(state, holdout, policy, gateway, max_in_flight);
}

EvalMatrix evaluate_retrospective(const std::vector<Snapshot>& snapshots, const RunLog& log,
                                  const TaskStream& stream, const MemoryPolicy& policy,
                                  Gateway& gateway, long long replay_budget,
                                  std::uint64_t seed, int max_in_flight) {
    EvalMatrix m;
    m.T = stream.size();
    for (const Snapshot& s : snapshots) m.column_steps.push_back(s.step_index);
    std::sort(m.column_steps.begin(), m.column_steps.end());
    const std::vector<int> fixed_replay =
        replay_tasks(m.T, m.column_steps, replay_budget, seed);

    for (const Snapshot& snap : snapshots) {
        MemoryState state;
        try {
            state = MemoryState::deserialize(snap.state);
        } catch (const Error& e) {
            throw InvariantViolation("snapshot at step " + std::to_string(snap.step_index) +
                                     " cannot be restored: " + e.what());
        }
        std::vector<int> replayed;
        if (static_cast<long long>(snap.step_index) <= replay_budget) {
            replayed.resize(static_cast<std::size_t>(snap.step_index));
            std::iota(replayed.begin(), replayed.end(), 1);
        } else {
            replayed = fixed_replay;
        }
        const std::string frozen = state.serialize();
        std::vector<int> outcomes =
            map_batched(replayed.size(), max_in_flight, [&](std::size_t i) {
                const Task& past = stream.at(replayed[i]);
                const std::string pred = policy.predict_readonly(state, past, gateway);
                return policy.grade(pred, past).correct ? 1 : 0;
            });
        if (state.serialize() != frozen) {
            throw InvariantViolation("memory state changed while re-evaluating step " +
                                     std::to_string(snap.step_index));
        }
        for (std::size_t i = 0; i < replayed.size(); ++i) {
            m.set_entry(replayed[i], snap.step_index, outcomes[i]);
        }
    }
    const std::vector<int> trace = log.online_trace();
    for (const auto& [key, value] : m.entries) {
        (void)value;
        if (!m.has_baseline(key.first)) {
            m.set_baseline(key.first, trace[static_cast<std::size_t>(key.first - 1)]);
        }
    }
    m.validate();
    return m;
}

RunLog run_sequential(const RunPlan& plan, const MemoryPolicy& policy,
                      Gateway& gateway, const std::string& out_dir) {
    validate_plan(plan, policy);
    RunLog log = header_log(plan);
    MemoryState state = policy.initial_state();

    std::ofstream events_file;
    std::ofstream* events = nullptr;
    std::string token_path;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::string log_path =
            (std::filesystem::path(out_dir) / run_log_filename()).string();
        events_file.open(log_path, std::ios::binary | std::ios::trunc);
        if (!events_file) throw Error("cannot open " + log_path + " for writing");
        events = &events_file;
        token_path = (std::filesystem::path(out_dir) / resume_token_filename()).string();
    }
    if (events != nullptr) {
        *events << event_run_start(log).dump() << '\n';
        events->flush();
    }
    if (!token_path.empty()) {
        write_resume_token(token_path, 0, state, gateway.ledger());
    }
    return run_loop(plan, policy, gateway, std::move(log), std::move(state), 1, events,
                    token_path);
}

RunLog resume_run(const RunPlan& plan, const MemoryPolicy& policy, Gateway& gateway,
                  const std::string& out_dir) {
    validate_plan(plan, policy);
    const std::string log_path =
        (std::filesystem::path(out_dir) / run_log_filename()).string();
    const std::string token_path =
        (std::filesystem::path(out_dir) / resume_token_filename()).string();
    if (!std::filesystem::exists(token_path)) {
        throw ConfigError("no resume token at " + token_path +
                          "; the run either finished or never started");
    }
    const ResumeToken token = read_resume_token(token_path);
    RunLog persisted = RunLog::from_jsonl_file(log_path);
    if (persisted.completed) throw ConfigError("run at " + out_dir + " already completed");

    RunLog expected = header_log(plan);
    if (persisted.policy_id != expected.policy_id || persisted.T != expected.T ||
        persisted.seed != expected.seed || persisted.checkpoints != expected.checkpoints ||
        persisted.horizons != expected.horizons ||
        persisted.replay_budget != expected.replay_budget ||
        persisted.dataset_name != expected.dataset_name) {
        throw ConfigError("resume plan does not match the persisted run at " + out_dir);
    }

    RunLog log = expected;
    const int j = token.last_completed_step;
    for (const StepRecord& r : persisted.steps) {
        if (r.step <= j) log.steps.push_back(r);
    }
    for (const Snapshot& s : persisted.snapshots) {
        if (s.step_index <= j) log.snapshots.push_back(s);
    }
    for (const HoldoutRecord& r : persisted.holdouts) {
        if (r.step <= j) log.holdouts.push_back(r);
    }
    for (const RetroRecord& r : persisted.retro) {
        if (r.step <= j) log.retro.push_back(r);
    }
    if (static_cast<int>(log.steps.size()) != j) {
        throw ValidationError("resume token points past the persisted log at " + out_dir);
    }

    write_text_file_atomic(log_path, log.to_jsonl());
    std::ofstream events_file(log_path, std::ios::binary | std::ios::app);
    if (!events_file) throw Error("cannot reopen " + log_path + " for appending");

    MemoryState state = MemoryState::deserialize(token.state);
    gateway.restore_ledger(token.ledger);
    return run_loop(plan, policy, gateway, std::move(log), std::move(state), j + 1,
                    &events_file, token_path);
}

} // namespace seqmem
