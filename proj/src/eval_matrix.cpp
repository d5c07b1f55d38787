#include "seqmem/eval_matrix.hpp"

#include <algorithm>
#include <string>

#include "seqmem/errors.hpp"

namespace seqmem {

bool EvalMatrix::has_column(int step) const {
    return std::binary_search(column_steps.begin(), column_steps.end(), step);
}

bool EvalMatrix::has_entry(int task_index, int step) const {
    return entries.count({task_index, step}) > 0;
}

int EvalMatrix::entry(int task_index, int step) const {
    auto it = entries.find({task_index, step});
    if (it == entries.end())
        throw ArgumentError("no matrix entry for task " + std::to_string(task_index) +
                            " at step " + std::to_string(step));
    return it->second;
}

bool EvalMatrix::has_baseline(int task_index) const {
    return baseline.count(task_index) > 0;
}

int EvalMatrix::baseline_at(int task_index) const {
    auto it = baseline.find(task_index);
    if (it == baseline.end())
        throw ArgumentError("no baseline for task " + std::to_string(task_index));
    return it->second;
}

void EvalMatrix::set_entry(int task_index, int step, int correct) {
    if (correct != 0 && correct != 1)
        throw ArgumentError("matrix entries are binary");
    if (step < task_index)
        throw ArgumentError("matrix entry requires checkpoint >= task index");
    entries[{task_index, step}] = correct;
}

void EvalMatrix::set_baseline(int task_index, int correct) {
    if (correct != 0 && correct != 1)
        throw ArgumentError("baseline values are binary");
    baseline[task_index] = correct;
}

void EvalMatrix::validate() const {
    if (T < 1) throw InvariantViolation("matrix T must be >= 1");
    if (!std::is_sorted(column_steps.begin(), column_steps.end()) ||
        std::adjacent_find(column_steps.begin(), column_steps.end()) !=
            column_steps.end())
        throw InvariantViolation("matrix columns must be strictly increasing");
    for (int c : column_steps)
        if (c < 1 || c > T) throw InvariantViolation("matrix column outside [1, T]");
    for (const auto& [key, value] : entries) {
        const auto& [task_index, step] = key;
        if (task_index < 1 || task_index > T)
            throw InvariantViolation("matrix row outside [1, T]");
        if (!has_column(step))
            throw InvariantViolation("matrix entry references unknown column");
        if (step < task_index)
            throw InvariantViolation("matrix entry below the diagonal");
        if (value != 0 && value != 1)
            throw InvariantViolation("matrix entries are binary");
    }
    for (const auto& [task_index, value] : baseline) {
        if (task_index < 1 || task_index > T)
            throw InvariantViolation("baseline row outside [1, T]");
        if (value != 0 && value != 1)
            throw InvariantViolation("baseline values are binary");
    }
}

} // namespace seqmem
