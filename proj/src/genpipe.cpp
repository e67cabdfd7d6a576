#include "arena/genpipe.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "arena/errors.hpp"
#include "arena/expr.hpp"
#include "arena/log.hpp"

namespace arena::gen {

namespace {

const char* kMetaPromptTemplate =
    "You are competing in a math arena where every participant authors problems that other\n"
    "frontier models must solve. Your score rises when your problems resist solution.\n"
    "Reason about what makes a problem genuinely hard in {domain_area} ({domain_subfield}),\n"
    "then write a prompt that will be used to author one such problem. The problem must have\n"
    "a single scalar answer. Reply with the authoring prompt only.\n";

const char* kGenerateTemplate =
    "{meta_prompt}\n\n"
    "Author exactly one problem now. The answer must be a single scalar mathematical\n"
    "expression. Reply in exactly this format:\n"
    "STATEMENT: <the full problem statement>\n"
    "ANSWER: <the scalar answer expression>\n";

const char* kGenerateDirectTemplate =
    "You are competing in a math arena where every participant authors problems that other\n"
    "frontier models must solve. Author one difficult problem in {domain_area}\n"
    "({domain_subfield}) with a single scalar answer. Reply in exactly this format:\n"
    "STATEMENT: <the full problem statement>\n"
    "ANSWER: <the scalar answer expression>\n";

const char* kAmplifyTemplate =
    "Below is a math problem you authored for a competitive arena. Produce a harder variant\n"
    "of the same problem that demands deeper reasoning, together with its new answer. The\n"
    "answer must be a single scalar mathematical expression. Reply in exactly this format:\n"
    "STATEMENT: <the harder problem statement>\n"
    "ANSWER: <the scalar answer expression>\n\n"
    "Current problem:\n"
    "STATEMENT: {draft_statement}\n"
    "ANSWER: {draft_answer}\n";

const char* kFormatReminder =
    "\n\nYour previous reply could not be parsed. Reply again using exactly:\n"
    "STATEMENT: <statement>\nANSWER: <single scalar expression, no prose>\n";

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool gold_parses(const std::string& gold) {
    try {
        expr::canonicalize(expr::parse_expr(gold));
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
    return {kMetaPromptTemplate, kGenerateTemplate, kGenerateDirectTemplate, kAmplifyTemplate};
}

PromptTemplates PromptTemplates::from_directory(const std::string& dir) {
    PromptTemplates t = defaults();
    auto load = [&](const char* file, std::string& slot) {
        std::filesystem::path p = std::filesystem::path(dir) / file;
        if (!std::filesystem::exists(p)) return;
        std::ifstream in(p);
        std::ostringstream buf;
        buf << in.rdbuf();
        slot = buf.str();
    };
    load("meta_prompt.txt", t.meta_prompt);
    load("generate.txt", t.generate);
    load("generate_direct.txt", t.generate_direct);
    load("amplify.txt", t.amplify);
    return t;
}

std::string render_template(const std::string& tmpl,
                            const std::vector<std::pair<std::string, std::string>>& subs) {
    std::string out = tmpl;
    for (const auto& [key, value] : subs) {
        std::string marker = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = out.find(marker, pos)) != std::string::npos) {
            out.replace(pos, marker.size(), value);
            pos += value.size();
        }
    }
    return out;
}

std::optional<Draft> parse_sections(const std::string& completion) {
    auto spos = completion.find("STATEMENT:");
    if (spos == std::string::npos) return std::nullopt;
    auto apos = completion.find("ANSWER:", spos);
    if (apos == std::string::npos) return std::nullopt;
    Draft d;
    d.statement = trim(completion.substr(spos + 10, apos - spos - 10));
    d.gold = trim(completion.substr(apos + 7));
    if (d.statement.empty() || d.gold.empty()) return std::nullopt;
    return d;
}

MetaPrompt make_meta_prompt(agents::ChatAgent& author, const DomainTag& domain,
                            const PromptTemplates& templates) {
    std::string prompt = render_template(templates.meta_prompt,
                                         {{"domain_area", domain.broad_area},
                                          {"domain_subfield", domain.subfield}});
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string text = trim(author.complete(prompt));
        if (!text.empty()) return {author.name(), domain, text};
    }
    throw GenerationError("empty meta-prompt completion from '" + author.name() + "'");
}

Draft generate_problem(agents::ChatAgent& author, const std::optional<MetaPrompt>& meta,
                       const DomainTag& domain, const PromptTemplates& templates) {
    std::string prompt =
        meta ? render_template(templates.generate, {{"meta_prompt", meta->text}})
             : render_template(templates.generate_direct, {{"domain_area", domain.broad_area},
                                                           {"domain_subfield", domain.subfield}});
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string completion = author.complete(attempt == 0 ? prompt : prompt + kFormatReminder);
        auto draft = parse_sections(completion);
        if (draft && gold_parses(draft->gold)) return *draft;
    }
    throw GenerationError("malformed problem from '" + author.name() +
                          "' after format re-ask");
}

AmplifyResult amplify(agents::ChatAgent& author, const Draft& draft, int rounds,
                      const PromptTemplates& templates) {
    if (rounds < 0) throw ConfigError("amplification rounds must be >= 0");
    AmplifyResult result;
    result.final = draft;
    for (int r = 0; r < rounds; ++r) {
        std::string prompt = render_template(templates.amplify,
                                             {{"draft_statement", result.final.statement},
                                              {"draft_answer", result.final.gold}});
        std::string completion = author.complete(prompt);
        auto variant = parse_sections(completion);
        if (variant && gold_parses(variant->gold)) {
            result.final = *variant;
        } else {
            ++result.fallback_count;
        }
        result.history.push_back({result.final.statement, result.final.gold});
    }
    if (result.fallback_count > 0)
        Log::warn("amplify: ", result.fallback_count, " round(s) fell back for '", author.name(),
                  "'");
    return result;
}

Problem author_problem(agents::ChatAgent& author, const DomainTag& domain, int stages,
                       int amplification_rounds, const PromptTemplates& templates,
                       const std::string& problem_id) {
    if (stages < 1 || stages > 3) throw ConfigError("pipeline stages must be 1, 2, or 3");
    Problem p;
    p.id = problem_id;
    p.author = author.name();
    p.domain = domain;
    p.provenance.stages_used = stages;

    std::optional<MetaPrompt> meta;
    if (stages >= 2) meta = make_meta_prompt(author, domain, templates);
    Draft draft = generate_problem(author, meta, domain, templates);
    p.provenance.meta_prompt = meta;
    p.provenance.draft_statement = draft.statement;
    p.provenance.draft_gold = draft.gold;

    if (stages == 3 && amplification_rounds > 0) {
        AmplifyResult amp = amplify(author, draft, amplification_rounds, templates);
        p.statement = amp.final.statement;
        p.gold = amp.final.gold;
        p.provenance.amplification_history = amp.history;
    } else {
        p.statement = draft.statement;
        p.gold = draft.gold;
    }
    return p;
}

}  // namespace arena::gen
