#pragma once

#include <map>
#include <string>
#include <vector>

namespace seqmem {

/// Named prompt templates with {placeholder} substitution. Built-in texts
/// match the files under assets/prompts; a directory can override any of
/// them. Placeholders without a supplied value are left verbatim, so LaTeX
/// braces in task templates survive rendering.
class PromptLibrary {
public:
    /// Library with the compiled-in default templates.
    static PromptLibrary builtin();
    /// Built-ins overridden by <dir>/<name>.txt and <dir>/tasks/<task>.txt.
    static PromptLibrary from_directory(const std::string& dir);

    bool has(const std::string& name) const;
    const std::string& text(const std::string& name) const;
    void set(const std::string& name, std::string text);
    std::vector<std::string> names() const;

    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& values) const;
    /// Single-pass substitution; replaced values are not re-scanned.
    static std::string render_text(const std::string& tmpl,
                                   const std::map<std::string, std::string>& values);

private:
    std::map<std::string, std::string> templates_;
};

} // namespace seqmem
