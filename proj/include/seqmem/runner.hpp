#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqmem/eval_matrix.hpp"
#include "seqmem/gateway.hpp"
#include "seqmem/memory_state.hpp"
#include "seqmem/policies.hpp"
#include "seqmem/stream.hpp"

namespace seqmem {

/// Everything a sequential run needs besides the policy and gateway objects.
struct RunPlan {
    TaskStream stream;
    std::string policy_id;
    std::string dataset_name = "dataset";
    /// Strictly increasing steps in [1, T], always containing T.
    std::vector<int> checkpoint_schedule;
    /// Horizons (in steps) for backward transfer and forgetting curves.
    std::vector<int> horizons;
    std::vector<HoldoutSet> holdouts;
    /// Max tasks re-evaluated per checkpoint; the sampled subset is fixed
    /// for the whole run so horizon comparisons stay paired.
    long long replay_budget = 1'000'000;
    std::uint64_t seed = 0;
    /// Concurrent in-flight requests during checkpoint evaluations.
    int max_in_flight = 1;
    /// Use the checkpoint diagonal instead of the online trace as the
    /// backward-transfer baseline.
    bool alternative_baseline = false;
};

struct StepRecord {
    int step = 0;
    std::string task_id;
    std::string prediction;
    int correct = 0;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    double latency_ms = 0.0;
    int tries_used = 1;

    bool operator==(const StepRecord&) const = default;
};

/// Serialized memory state at a checkpoint plus the usage accumulated since
/// the previous snapshot.
struct Snapshot {
    int step_index = 0;
    std::string state;
    UsageLedger ledger_delta;

    bool operator==(const Snapshot&) const = default;
};

struct HoldoutRecord {
    int step = 0;
    std::string source_dataset;
    DistributionTag tag = DistributionTag::in_distribution;
    double accuracy = 0.0;

    bool operator==(const HoldoutRecord&) const = default;
};

struct RetroRecord {
    int step = 0;
    int task_index = 0;
    std::string task_id;
    int correct = 0;

    bool operator==(const RetroRecord&) const = default;
};

/// Complete record of one sequential run. Persists as JSONL, one event per
/// line, in execution order.
struct RunLog {
    std::string policy_id;
    std::string dataset_name;
    int T = 0;
    std::uint64_t seed = 0;
    std::vector<int> checkpoints;
    std::vector<int> horizons;
    long long replay_budget = 0;
    std::vector<StepRecord> steps;
    std::vector<Snapshot> snapshots;
    std::vector<HoldoutRecord> holdouts;
    std::vector<RetroRecord> retro;
    UsageLedger ledger;
    bool completed = false;

    std::vector<int> online_trace() const;
    EvalMatrix eval_matrix(bool alternative_baseline = false) const;
    /// (checkpoint step, accuracy) points for one hold-out set.
    std::vector<std::pair<int, double>> holdout_points(const std::string& source,
                                                       DistributionTag tag) const;
    /// Distinct (source, tag) hold-out groups, in first-seen order.
    std::vector<std::pair<std::string, DistributionTag>> holdout_groups() const;

    std::string to_jsonl() const;
    static RunLog from_jsonl_text(const std::string& text, const std::string& origin);
    static RunLog from_jsonl_file(const std::string& path);

    bool operator==(const RunLog&) const = default;
};

/// Evenly spaced checkpoint schedule: floor(i * T / n) for i = 1..n. Always
/// ends at T; consecutive gaps differ by at most one.
std::vector<int> make_schedule(int T, int n_checkpoints);

/// Default horizons for a schedule: the base checkpoint gap, doubled and
/// quadrupled, clipped to [1, T-1].
std::vector<int> default_horizons(int T, int n_checkpoints);

/// The fixed replay subset for runs whose eligible set outgrows the budget:
/// a seeded sample from the tasks visible at the first checkpoint.
std::vector<int> replay_tasks(int T, const std::vector<int>& checkpoints,
                              long long replay_budget, std::uint64_t seed);

/// File names used inside a run output directory.
std::string run_log_filename();
std::string resume_token_filename();

/// Executes the plan. If out_dir is non-empty, events stream to
/// <out_dir>/runlog.jsonl and a resume token is kept current; a gateway
/// failure then raises RunAborted with everything up to the last completed
/// step persisted.
RunLog run_sequential(const RunPlan& plan, const MemoryPolicy& policy,
                      Gateway& gateway, const std::string& out_dir = "");

/// Continues an aborted run from its resume token, appending to the
/// existing log. The finished log is byte-identical to an uninterrupted run.
RunLog resume_run(const RunPlan& plan, const MemoryPolicy& policy, Gateway& gateway,
                  const std::string& out_dir);

/// Mean hold-out correctness under a frozen memory state. Asserts the state
/// is byte-identical afterwards.
double evaluate_holdout_at(const MemoryState& state, const HoldoutSet& holdout,
                           const MemoryPolicy& policy, Gateway& gateway,
                           int max_in_flight = 1);
/// Same, restoring the state from a snapshot first.
double evaluate_holdout_at(const Snapshot& snapshot, const HoldoutSet& holdout,
                           const MemoryPolicy& policy, Gateway& gateway,
                           int max_in_flight = 1);

/// Rebuilds the retrospective grid from persisted snapshots: every replayed
/// task is re-answered under each checkpoint's restored state. The baseline
/// column comes from the log's online trace. Produces the same matrix the
/// live run recorded.
EvalMatrix evaluate_retrospective(const std::vector<Snapshot>& snapshots, const RunLog& log,
                                  const TaskStream& stream, const MemoryPolicy& policy,
                                  Gateway& gateway, long long replay_budget,
                                  std::uint64_t seed, int max_in_flight = 1);

} // namespace seqmem
