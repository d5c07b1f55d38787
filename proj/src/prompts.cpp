#include "seqmem/prompts.hpp"

#include <cctype>
#include <filesystem>

#include "seqmem/errors.hpp"
#include "seqmem/util.hpp"

namespace seqmem {

namespace {

std::string rtrim(const std::string& s) {
    std::size_t e = s.size();
    while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(0, e);
}

const char* kUserTurn = R"({context}

Current task: {question})";

const char* kGenerator = R"(You are solving tasks in a sequence and maintain a curated memory of reusable strategies.

Memory:
{memory}

Current task: {question}

Use the memory when it applies. Answer the current task.)";

const char* kCurator = R"(You maintain a compact memory for a sequential problem solver. Update the memory so it stays useful for future tasks: keep reusable strategies, generalizable facts, and corrections; drop stale or redundant entries. Output only the updated memory text.

Current memory:
{memory}

Retrieved past cases:
{context}

New task: {question}

Updated memory:)";

const char* kInsight = R"(You extract reusable insights from recent successful task solutions. Review the existing insights and the new successes, then output the updated insight list, one insight per line. Keep insights general, actionable, and non-redundant.

Existing insights:
{memory}

Recent successful cases:
{context}

Updated insights:)";

const char* kInsightPair = R"(You refine an insight list by contrasting a successful attempt with a failed attempt on the same task. Output the updated insight list, one insight per line.

Existing insights:
{memory}

Contrastive pair:
{context}

Updated insights:)";

const char* kReflection = R"(You failed the task below. Write a short reflection: diagnose what went wrong and state a concrete plan to avoid the mistake on the next attempt.

Task: {question}

Failed attempt:
{context}

Reflection:)";

const char* kWorkflowInduction =
    R"(Extract a reusable workflow from the following successful task solution. Describe the common steps as a short named procedure that could be followed on similar tasks.)";

const char* kWorkflowOneShot = R"(Example:
Task: find the cheapest laptop on the shopping site and add it to the cart.
Solution: searched "laptop", sorted results by price ascending, opened the first result, clicked "add to cart".
## Summary Workflows
Workflow: locate-cheapest-item
1. Search for the item keyword.
2. Sort results by price ascending.
3. Open the top result.
4. Add it to the cart.)";

const char* kTaskAime = R"(Solve the following AIME problem. The final answer is a non-negative integer between 0 and 999.

Think step by step. Keep the reasoning concise but complete.
At the very end, output ONLY the final integer inside a LaTeX box, e.g., \boxed{42}.
Do not wrap anything except the integer answer inside \boxed{}.

Problem: {question})";

const char* kTaskMath500 = R"(Solve the following math problem.

Please do your derivation in LaTeX as much as possible. Keep the reasoning concise but complete.
At the end, put only the final answer in the LAST \boxed{...}.
If the final answer is a fraction, use LaTeX fraction form like \frac{a}{b} (not decimal approximation unless required).

Problem: {question})";

const char* kTaskMmluPro = R"(Answer the following multiple-choice {subject} question. Exactly one option is correct.

Think step by step. Keep the reasoning concise but complete.
At the very end, output ONLY the letter of the correct option inside a LaTeX box, e.g., \boxed{C}.
Do not wrap anything except the single letter A-J inside \boxed{}.

Question: {question}

Options:
{options})";

const char* kTaskHumanEval = R"(Complete the following Python function. Keep the given signature and docstring unchanged; only fill in the body (you may add helper functions above it if needed). Your function must be named exactly {entry_point}.

```python
{question}
```

You may reason briefly first, but only the code will be executed against hidden unit tests. Put your FINAL complete function inside a single fenced block:

```python
# include the full def {entry_point}(...) here, plus any helpers it depends on
```

Do not output any other code fence. No commentary after the code block.

ANSWER:)";

const char* kTaskAlfworld = R"(Imagine you are an intelligent agent in a household environment, and your goal is to perform actions to complete the task. At the beginning of the interaction, you will be given a detailed description of the environment and the goal.

For each turn, think briefly and then output your next action.

The available actions are:
- go to {recep}
- take {obj} from {recep}
- move {obj} to {recep}
- open {recep}
- close {recep}
- use {obj}
- clean {obj} with {recep}
- heat {obj} with {recep}
- cool {obj} with {recep}
where {obj} and {recep} correspond to objects and receptacles.

After each turn, the environment will provide feedback. If the feedback is "Nothing happened", the previous action is invalid and you should try a different action.

Your response must follow this format:
- Thought:
- Action:

{question})";

const char* kTaskApibench = R"(You are a helpful API writer who can write APIs based on requirements.

{question}

Write a Python program in 1 to 2 lines to call API in {framework}.

The answer should follow the format: <<<domain>>> $DOMAIN, <<<api_call>>>: $API_CALL, <<<api_provider>>>: $API_PROVIDER, <<<explanation>>>: $EXPLANATION, <<<code>>>: $CODE.
Here are the requirements:

1. $DOMAIN should be inferred from the task description.
2. $API_CALL should have only one line of code that calls the API.
3. $API_PROVIDER should be the programming framework used.
4. $EXPLANATION should be a step-by-step explanation.
5. $CODE is the Python code.
6. Do not repeat the format in your answer.)";

const std::map<std::string, const char*>& builtin_table() {
    static const std::map<std::string, const char*> table = {
        {"user_turn", kUserTurn},
        {"generator", kGenerator},
        {"curator", kCurator},
        {"insight", kInsight},
        {"insight_pair", kInsightPair},
        {"reflection", kReflection},
        {"workflow_induction", kWorkflowInduction},
        {"workflow_one_shot", kWorkflowOneShot},
        {"task_aime", kTaskAime},
        {"task_math500", kTaskMath500},
        {"task_mmlu_pro", kTaskMmluPro},
        {"task_humaneval", kTaskHumanEval},
        {"task_alfworld", kTaskAlfworld},
        {"task_apibench", kTaskApibench},
    };
    return table;
}

std::string asset_relpath(const std::string& name) {
    if (name.rfind("task_", 0) == 0) return "tasks/" + name.substr(5) + ".txt";
    return name + ".txt";
}

} // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    for (const auto& [name, text] : builtin_table()) lib.templates_[name] = text;
    return lib;
}

PromptLibrary PromptLibrary::from_directory(const std::string& dir) {
    PromptLibrary lib = builtin();
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("prompt directory not found: " + dir);
    for (const auto& [name, _] : builtin_table()) {
        auto path = std::filesystem::path(dir) / asset_relpath(name);
        if (std::filesystem::is_regular_file(path))
            lib.templates_[name] = rtrim(read_text_file(path.string()));
    }
    return lib;
}

bool PromptLibrary::has(const std::string& name) const {
    return templates_.count(name) > 0;
}

const std::string& PromptLibrary::text(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw ConfigError("unknown prompt template: " + name);
    return it->second;
}

void PromptLibrary::set(const std::string& name, std::string text) {
    templates_[name] = std::move(text);
}

std::vector<std::string> PromptLibrary::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& values) const {
    return render_text(text(name), values);
}

std::string PromptLibrary::render_text(const std::string& tmpl,
                                       const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string::npos) {
                std::string key = tmpl.substr(i + 1, close - i - 1);
                auto it = values.find(key);
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    return out;
}

} // namespace seqmem
