#include "seqmem/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {

using nlohmann::json;

TaskStream::TaskStream(std::vector<Task> tasks, std::optional<std::uint64_t> order_seed)
    : tasks_(std::move(tasks)), order_seed_(order_seed) {
    if (tasks_.empty()) throw ValidationError("task stream must contain at least one task");
}

const Task& TaskStream::at(int step) const {
    if (step < 1 || step > size())
        throw ArgumentError("step out of range: " + std::to_string(step));
    return tasks_[static_cast<std::size_t>(step - 1)];
}

std::string to_string(DistributionTag tag) {
    return tag == DistributionTag::in_distribution ? "in_distribution"
                                                   : "out_of_distribution";
}

DistributionTag distribution_tag_from_string(const std::string& s) {
    if (s == "in_distribution") return DistributionTag::in_distribution;
    if (s == "out_of_distribution") return DistributionTag::out_of_distribution;
    throw ParseError("unknown distribution tag: " + s);
}

namespace {

Task parse_task_line(const std::string& line, const std::string& origin, int line_no) {
    auto fail = [&](const std::string& why) -> ParseError {
        return ParseError(origin + ":" + std::to_string(line_no) + ": " + why);
    };
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw fail("expected a JSON object");

    Task task;
    for (auto& [key, value] : obj.items()) {
        if (key == "id" || key == "prompt" || key == "target" || key == "category") {
            if (!value.is_string()) throw fail("field '" + key + "' must be a string");
        } else if (key == "metadata") {
            if (!value.is_object()) throw fail("field 'metadata' must be an object");
        } else {
            throw fail("unknown field '" + key + "'");
        }
    }
    if (!obj.contains("id")) throw fail("missing field 'id'");
    if (!obj.contains("prompt")) throw fail("missing field 'prompt'");
    if (!obj.contains("target")) throw fail("missing field 'target'");

    task.id = obj["id"].get<std::string>();
    task.prompt = obj["prompt"].get<std::string>();
    task.target = obj["target"].get<std::string>();
    if (obj.contains("category")) task.category = obj["category"].get<std::string>();

    if (task.id.empty()) throw fail("field 'id' must be non-empty");
    if (task.prompt.empty()) throw fail("field 'prompt' must be non-empty");
    if (task.target.empty()) throw fail("field 'target' must be non-empty");
    if (task.category.empty()) throw fail("field 'category' must be non-empty");

    if (obj.contains("metadata")) {
        for (auto& [key, value] : obj["metadata"].items()) {
            if (!value.is_string())
                throw fail("metadata value for '" + key + "' must be a string");
            task.metadata[key] = value.get<std::string>();
        }
    }
    return task;
}

} // namespace

std::vector<Task> parse_dataset_text(const std::string& text, const std::string& origin) {
    std::vector<Task> tasks;
    std::set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        Task task = parse_task_line(line, origin, line_no);
        if (!ids.insert(task.id).second)
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": duplicate task id '" + task.id + "'");
        tasks.push_back(std::move(task));
    }
    if (tasks.empty()) throw ValidationError(origin + ": dataset is empty");
    return tasks;
}

std::vector<Task> load_dataset(const std::string& path) {
    return parse_dataset_text(read_text_file(path), path);
}

std::pair<TaskStream, HoldoutSet> split_tail(const std::vector<Task>& dataset,
                                             double fraction,
                                             const std::string& dataset_name) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ArgumentError("split_tail: fraction must lie in (0, 1)");
    const auto n = dataset.size();
    auto holdout_n = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(n)));
    if (holdout_n == 0)
        throw ValidationError("split_tail: hold-out would be empty");
    if (holdout_n >= n)
        throw ValidationError("split_tail: stream would be empty");

    std::vector<Task> stream_tasks(dataset.begin(),
                                   dataset.begin() + static_cast<long>(n - holdout_n));
    HoldoutSet holdout;
    holdout.tasks.assign(dataset.begin() + static_cast<long>(n - holdout_n), dataset.end());
    holdout.source_dataset = dataset_name;
    holdout.tag = DistributionTag::in_distribution;
    return {TaskStream(std::move(stream_tasks), std::nullopt), std::move(holdout)};
}

HoldoutSet split_stratified(const std::vector<Task>& pool, int size,
                            std::uint64_t seed, const std::string& dataset_name) {
    if (pool.empty()) throw ArgumentError("split_stratified: empty pool");
    if (size <= 0) throw ArgumentError("split_stratified: size must be positive");
    if (static_cast<std::size_t>(size) > pool.size())
        throw ArgumentError("split_stratified: size exceeds pool");

    // Pool positions per category, categories in sorted name order.
    std::map<std::string, std::vector<int>> members;
    for (std::size_t i = 0; i < pool.size(); ++i)
        members[pool[i].category].push_back(static_cast<int>(i));
    const auto n_categories = members.size();
    if (static_cast<std::size_t>(size) < n_categories)
        throw ArgumentError("split_stratified: size smaller than category count");

    const long long total = static_cast<long long>(pool.size());
    struct Alloc {
        std::string category;
        long long count = 0;
        long long remainder = 0;
        long long pool_count = 0;
    };
    std::vector<Alloc> allocs;
    long long assigned = 0;
    for (auto& [cat, idx] : members) {
        Alloc a;
        a.category = cat;
        a.pool_count = static_cast<long long>(idx.size());
        a.count = (static_cast<long long>(size) * a.pool_count) / total;
        a.remainder = (static_cast<long long>(size) * a.pool_count) % total;
        assigned += a.count;
        allocs.push_back(a);
    }
    // Hand out the rounding slack to the largest remainders; break ties
    // toward larger categories, then by name.
    long long slack = size - assigned;
    std::vector<std::size_t> order(allocs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (allocs[a].remainder != allocs[b].remainder)
            return allocs[a].remainder > allocs[b].remainder;
        if (allocs[a].pool_count != allocs[b].pool_count)
            return allocs[a].pool_count > allocs[b].pool_count;
        return allocs[a].category < allocs[b].category;
    });
    for (std::size_t i = 0; slack > 0; i = (i + 1) % order.size()) {
        Alloc& a = allocs[order[i]];
        if (a.count < a.pool_count) {
            ++a.count;
            --slack;
        }
    }
    // Every category contributes at least one task; steal from the largest.
    auto donor = [&]() -> Alloc* {
        Alloc* best = nullptr;
        for (auto& a : allocs)
            if (a.count > 1 && (!best || a.count > best->count)) best = &a;
        return best;
    };
    for (auto& a : allocs) {
        while (a.count == 0) {
            Alloc* d = donor();
            if (!d) throw ValidationError("split_stratified: cannot satisfy one-per-category");
            --d->count;
            ++a.count;
        }
    }

    HoldoutSet holdout;
    holdout.source_dataset = dataset_name;
    holdout.tag = DistributionTag::in_distribution;
    std::vector<int> selected;
    for (auto& a : allocs) {
        const auto& idx = members[a.category];
        std::uint64_t sub_seed = seed ^ fnv1a64(a.category);
        auto picked = sample_without_replacement(idx, static_cast<std::size_t>(a.count),
                                                 sub_seed);
        selected.insert(selected.end(), picked.begin(), picked.end());
    }
    std::sort(selected.begin(), selected.end());
    for (int i : selected) holdout.tasks.push_back(pool[static_cast<std::size_t>(i)]);
    return holdout;
}

TaskStream build_stream(std::vector<Task> tasks,
                        std::optional<std::uint64_t> order_seed) {
    if (!order_seed) return TaskStream(std::move(tasks), std::nullopt);
    auto perm = random_permutation(tasks.size(), *order_seed);
    std::vector<Task> ordered;
    ordered.reserve(tasks.size());
    for (std::size_t i : perm) ordered.push_back(std::move(tasks[i]));
    return TaskStream(std::move(ordered), order_seed);
}

} // namespace seqmem
