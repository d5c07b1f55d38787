#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seqmem/diagnostics.hpp"
#include "seqmem/evaluator.hpp"
#include "seqmem/gateway.hpp"
#include "seqmem/http_gateway.hpp"
#include "seqmem/policies.hpp"
#include "seqmem/prompts.hpp"
#include "seqmem/stream.hpp"

namespace seqmem {

struct DatasetConfig {
    std::string path;
    /// Presentation name; defaults to the file stem.
    std::string name;
    /// When set, the stream order is a seeded permutation of the file order.
    std::optional<std::uint64_t> order_seed;
};

struct GatewayConfig {
    enum class Backend { scripted, echo, http };
    Backend backend = Backend::scripted;
    // scripted
    std::vector<ScriptedRule> rules;
    std::optional<std::string> default_response;
    // scripted + echo
    std::size_t embedding_dim = 64;
    // http
    HttpGatewayConfig http;
};

struct ScheduleConfig {
    int n_checkpoints = 10;
    /// Empty means: derive from the checkpoint gap.
    std::vector<int> horizons;
    long long replay_budget = 1'000'000;
    int max_in_flight = 1;
    /// Score replayed tasks against the checkpoint diagonal instead of the
    /// online trace.
    bool alternative_baseline = false;
};

/// Fully parsed run configuration with defaults applied.
struct RunConfig {
    DatasetConfig dataset;
    /// Hold-out carved from the dataset itself; nullopt disables it.
    std::optional<SplitSpec> holdout;
    /// Extra datasets evaluated wholesale as shifted-distribution hold-outs.
    std::vector<DatasetConfig> ood_holdouts;
    std::string policy_id = "memory_free";
    PolicyConfig policy;
    EvaluatorKind evaluator = EvaluatorKind::exact_match;
    GenerationDefaults generation;
    GatewayConfig gateway;
    ScheduleConfig schedule;
    TrajectoryThresholds thresholds;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/latest";
    /// Directory of prompt template overrides; unset uses the built-ins.
    std::optional<std::string> prompts_dir;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// Command-line values that take precedence over the config file.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> n_checkpoints;
    std::optional<std::vector<int>> horizons;
    std::optional<long long> replay_budget;
    std::optional<std::string> out_dir;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

std::unique_ptr<Gateway> make_gateway(const GatewayConfig& config);
PromptLibrary load_prompt_library(const RunConfig& config);

} // namespace seqmem
