#pragma once

#include <optional>
#include <string>
#include <utility>

#include "arena/agents.hpp"
#include "arena/types.hpp"

namespace arena::gen {

// Prompt templates with named placeholders {domain_area}, {domain_subfield},
// {draft_statement}, {draft_answer}, {meta_prompt}. Defaults are compiled
// in; a template directory may override any of them by file name
// (meta_prompt.txt, generate.txt, generate_direct.txt, amplify.txt).
struct PromptTemplates {
    std::string meta_prompt;
    std::string generate;
    std::string generate_direct;
    std::string amplify;

    static PromptTemplates defaults();
    static PromptTemplates from_directory(const std::string& dir);
};

std::string render_template(const std::string& tmpl,
                            const std::vector<std::pair<std::string, std::string>>& subs);

struct Draft {
    std::string statement;
    std::string gold;
};

// Stage 1: the author writes the prompt that will later author the problem.
MetaPrompt make_meta_prompt(agents::ChatAgent& author, const DomainTag& domain,
                            const PromptTemplates& templates);

// Stage 2: statement + scalar gold, parsed from delimited STATEMENT/ANSWER
// sections. One formatted re-ask is allowed before failing; the gold must
// parse under the answer grammar.
Draft generate_problem(agents::ChatAgent& author, const std::optional<MetaPrompt>& meta,
                       const DomainTag& domain, const PromptTemplates& templates);

struct AmplifyResult {
    Draft final;
    std::vector<AmplificationStep> history;
    int fallback_count = 0;
};

// Stage 3: sequential hardening rounds. A round whose output fails to parse
// falls back to the previous version (counted, never fatal).
AmplifyResult amplify(agents::ChatAgent& author, const Draft& draft, int rounds,
                      const PromptTemplates& templates);

// Full per-slot pipeline for the configured stage count (1, 2, or 3).
Problem author_problem(agents::ChatAgent& author, const DomainTag& domain, int stages,
                       int amplification_rounds, const PromptTemplates& templates,
                       const std::string& problem_id);

// Parses STATEMENT/ANSWER sections out of a completion.
std::optional<Draft> parse_sections(const std::string& completion);

}  // namespace arena::gen
