#include "seqmem/evaluator.hpp"

#include <cctype>

#include "seqmem/errors.hpp"
#include "seqmem/stream.hpp"
#include "seqmem/util.hpp"

namespace seqmem {

std::string to_string(EvaluatorKind kind) {
    switch (kind) {
        case EvaluatorKind::exact_match: return "exact_match";
        case EvaluatorKind::boxed_extract: return "boxed_extract";
        case EvaluatorKind::option_letter: return "option_letter";
    }
    throw ArgumentError("invalid evaluator kind");
}

EvaluatorKind evaluator_from_string(const std::string& s) {
    if (s == "exact_match") return EvaluatorKind::exact_match;
    if (s == "boxed_extract") return EvaluatorKind::boxed_extract;
    if (s == "option_letter") return EvaluatorKind::option_letter;
    throw ConfigError("unknown evaluator '" + s + "'");
}

bool extract_last_boxed(const std::string& text, std::string& out) {
    const std::string marker = "\\boxed{";
    bool found = false;
    std::size_t pos = 0;
    while (true) {
        std::size_t start = text.find(marker, pos);
        if (start == std::string::npos) break;
        std::size_t i = start + marker.size();
        int depth = 1;
        std::string content;
        while (i < text.size() && depth > 0) {
            char c = text[i];
            if (c == '{') ++depth;
            if (c == '}') --depth;
            if (depth > 0) content.push_back(c);
            ++i;
        }
        if (depth == 0) {
            out = content;
            found = true;
        }
        pos = start + marker.size();
    }
    return found;
}

namespace {

Feedback graded(EvaluatorKind kind, bool ok, std::string detail) {
    Feedback fb;
    fb.correct = ok ? 1 : 0;
    fb.evaluator_id = to_string(kind);
    fb.detail = std::move(detail);
    return fb;
}

Feedback grade_exact(const std::string& prediction, const Task& task) {
    bool ok = normalize_text(prediction) == normalize_text(task.target);
    return graded(EvaluatorKind::exact_match, ok,
                  ok ? "" : "prediction does not match target");
}

Feedback grade_boxed(const std::string& prediction, const Task& task) {
    std::string content;
    if (!extract_last_boxed(prediction, content))
        return graded(EvaluatorKind::boxed_extract, false, "no boxed answer");
    bool ok = normalize_text(content) == normalize_text(task.target);
    return graded(EvaluatorKind::boxed_extract, ok,
                  ok ? "" : "boxed content does not match target");
}

Feedback grade_option(const std::string& prediction, const Task& task) {
    std::string content;
    if (!extract_last_boxed(prediction, content)) {
        // Accept a bare single-letter reply as a fallback.
        content = trim(prediction);
        if (content.size() != 1)
            return graded(EvaluatorKind::option_letter, false, "no boxed answer");
    }
    content = trim(content);
    std::string target = trim(task.target);
    if (content.size() != 1 || target.size() != 1)
        return graded(EvaluatorKind::option_letter, false, "not a single option letter");
    char got = static_cast<char>(std::toupper(static_cast<unsigned char>(content[0])));
    char want = static_cast<char>(std::toupper(static_cast<unsigned char>(target[0])));
    if (got < 'A' || got > 'J')
        return graded(EvaluatorKind::option_letter, false, "not a single option letter");
    bool ok = got == want;
    return graded(EvaluatorKind::option_letter, ok,
                  ok ? "" : "option letter does not match target");
}

} // namespace

Feedback evaluate_answer(const std::string& prediction, const Task& task,
                         EvaluatorKind kind) {
    switch (kind) {
        case EvaluatorKind::exact_match: return grade_exact(prediction, task);
        case EvaluatorKind::boxed_extract: return grade_boxed(prediction, task);
        case EvaluatorKind::option_letter: return grade_option(prediction, task);
    }
    throw ArgumentError("invalid evaluator kind");
}

} // namespace seqmem
