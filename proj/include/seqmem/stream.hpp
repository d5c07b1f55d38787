#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seqmem {

/// One evaluation item: a prompt the model must answer and the target used
/// to score the answer. Extra per-task annotations ride along in metadata.
struct Task {
    std::string id;
    std::string prompt;
    std::string target;
    std::string category = "default";
    std::map<std::string, std::string> metadata;

    bool operator==(const Task&) const = default;
};

/// Immutable ordered task sequence consumed by the sequential runner.
/// Construct through build_stream so ordering stays reproducible.
class TaskStream {
public:
    TaskStream() = default;
    TaskStream(std::vector<Task> tasks, std::optional<std::uint64_t> order_seed);

    const std::vector<Task>& tasks() const { return tasks_; }
    /// 1-based access matching step indices used by the runner.
    const Task& at(int step) const;
    int size() const { return static_cast<int>(tasks_.size()); }
    std::optional<std::uint64_t> order_seed() const { return order_seed_; }

private:
    std::vector<Task> tasks_;
    std::optional<std::uint64_t> order_seed_;
};

enum class DistributionTag { in_distribution, out_of_distribution };

std::string to_string(DistributionTag tag);
DistributionTag distribution_tag_from_string(const std::string& s);

/// Frozen set of tasks evaluated repeatedly at checkpoints, never part of
/// the online stream itself.
struct HoldoutSet {
    std::vector<Task> tasks;
    std::string source_dataset;
    DistributionTag tag = DistributionTag::in_distribution;
};

/// How to carve a hold-out set from a dataset.
struct SplitSpec {
    enum class Mode { tail_fraction, stratified_sample };
    Mode mode = Mode::tail_fraction;
    double fraction = 0.2;      // tail_fraction
    int size = 0;               // stratified_sample
    std::uint64_t seed = 0;     // stratified_sample
};

/// Loads a JSONL dataset. Each line is an object with fields
/// id/prompt/target and optional category/metadata. Errors name the
/// offending line number.
std::vector<Task> load_dataset(const std::string& path);
std::vector<Task> parse_dataset_text(const std::string& text, const std::string& origin);

/// Splits off the last floor(fraction * N) tasks as the hold-out set; the
/// remaining prefix becomes the sequential stream.
std::pair<TaskStream, HoldoutSet> split_tail(const std::vector<Task>& dataset,
                                             double fraction,
                                             const std::string& dataset_name);

/// Draws a category-stratified hold-out sample from a pool. Per-category
/// counts follow largest-remainder rounding with at least one task per
/// category; selection within a category is seed-deterministic.
HoldoutSet split_stratified(const std::vector<Task>& pool, int size,
                            std::uint64_t seed, const std::string& dataset_name);

/// Builds the task stream, optionally applying a seeded permutation.
TaskStream build_stream(std::vector<Task> tasks,
                        std::optional<std::uint64_t> order_seed);

} // namespace seqmem
