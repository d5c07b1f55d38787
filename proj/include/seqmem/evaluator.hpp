#pragma once

#include <string>

namespace seqmem {

struct Task;

/// Binary grading outcome for one prediction.
struct Feedback {
    int correct = 0;
    std::string evaluator_id;
    std::string detail;

    bool operator==(const Feedback&) const = default;
};

enum class EvaluatorKind { exact_match, boxed_extract, option_letter };

std::string to_string(EvaluatorKind kind);
EvaluatorKind evaluator_from_string(const std::string& s);

/// Extracts the content of the last \boxed{...} group, honoring nested
/// braces. Returns false when the prediction has no complete boxed group.
bool extract_last_boxed(const std::string& text, std::string& out);

/// Grades a prediction against the task target.
///   exact_match   whole prediction, whitespace/case normalized
///   boxed_extract last \boxed{...} content vs target
///   option_letter single option letter, boxed or bare
Feedback evaluate_answer(const std::string& prediction, const Task& task,
                         EvaluatorKind kind);

} // namespace seqmem
