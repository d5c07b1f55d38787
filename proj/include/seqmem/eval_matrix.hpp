#pragma once

#include <map>
#include <utility>
#include <vector>

namespace seqmem {

/// Sparse retrospective evaluation matrix. Rows are task indices (1-based),
/// columns are checkpoint steps; entry (t, c) holds the correctness of task
/// t re-evaluated under the post-update memory state of step c, defined for
/// c >= t. The baseline column holds each task's online correctness.
struct EvalMatrix {
    int T = 0;
    std::vector<int> column_steps;
    std::map<std::pair<int, int>, int> entries;
    std::map<int, int> baseline;

    bool has_column(int step) const;
    bool has_entry(int task_index, int step) const;
    int entry(int task_index, int step) const;
    bool has_baseline(int task_index) const;
    int baseline_at(int task_index) const;

    void set_entry(int task_index, int step, int correct);
    void set_baseline(int task_index, int correct);

    /// Checks shape constraints; throws InvariantViolation on defects.
    void validate() const;

    bool operator==(const EvalMatrix&) const = default;
};

} // namespace seqmem
