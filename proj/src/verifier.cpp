#include "arena/verifier.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

#include "arena/errors.hpp"
#include "arena/expr.hpp"
#include "arena/log.hpp"

namespace arena::verify {

namespace {

bool answers_equivalent(const std::string& a, const std::string& b) {
    try {
        return expr::equivalent(a, b);
    } catch (const Error&) {
        return false;
    }
}

std::string build_prompt(const Problem& problem, const CandidateSet& candidates) {
    std::ostringstream p;
    p << "You are the verification layer of a math arena. Check whether the problem below has\n"
         "a unique well-defined solution, and select the correct answer from the candidates.\n"
         "The chosen answer must be one of the listed candidates.\n\n";
    p << "PROBLEM: " << problem.statement << "\n";
    p << "GOLD: " << problem.gold << "\n\n";
    for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
        const auto& c = candidates.candidates[i];
        p << "CANDIDATE " << i << " (supporters: " << c.supporters << "): " << c.answer << "\n";
        if (!c.trace.empty()) p << "TRACE " << i << ": " << c.trace.substr(0, 2000) << "\n";
    }
    p << "\nReply exactly:\nVALID: yes|no\nANSWER: <candidate index>\n";
    return p.str();
}

struct RawVerdict {
    int valid;
    int answer_index;  // meaningful when valid = 1
};

std::optional<RawVerdict> parse_verdict(const std::string& reply, std::size_t candidate_count) {
    static const std::regex valid_re(R"(VALID:\s*(yes|no))", std::regex::icase);
    static const std::regex answer_re(R"(ANSWER:\s*(\d+))");
    std::smatch m;
    if (!std::regex_search(reply, m, valid_re)) return std::nullopt;
    std::string v = m[1];
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "no") return RawVerdict{0, -1};
    if (!std::regex_search(reply, m, answer_re)) return std::nullopt;
    std::size_t idx = std::stoul(m[1]);
    if (idx >= candidate_count) return std::nullopt;
    return RawVerdict{1, static_cast<int>(idx)};
}

RawVerdict draw_verdict(const Problem& problem, const CandidateSet& candidates,
                        agents::ChatAgent& backbone, std::string* rationale) {
    std::string prompt = build_prompt(problem, candidates);
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply = backbone.complete(
            attempt == 0 ? prompt
                         : prompt + "\nYour previous reply could not be parsed. Use the exact "
                                    "two-line format.\n");
        auto raw = parse_verdict(reply, candidates.candidates.size());
        if (raw) {
            if (rationale) *rationale = reply;
            return *raw;
        }
    }
    throw VerificationError("unparseable verdict for problem '" + problem.id +
                            "' from backbone '" + backbone.name() + "' after re-ask");
}

}  // namespace

bool needs_verification(const Problem& problem, const std::vector<SolveRecord>& records) {
    for (const auto& r : records) {
        if (r.problem != problem.id) continue;
        if (r.outcome == 0) return true;
    }
    return false;
}

CandidateSet build_candidates(const Problem& problem, const std::vector<SolveRecord>& records) {
    CandidateSet set;
    set.problem = problem.id;

    bool gold_ok = true;
    try {
        expr::canonicalize(expr::parse_expr(problem.gold));
    } catch (const Error&) {
        gold_ok = false;
        Log::warn("candidates for '", problem.id, "': gold does not parse, omitted");
    }
    if (gold_ok) set.candidates.push_back({problem.gold, "", 0});

    for (const auto& r : records) {
        if (r.problem != problem.id) continue;
        try {
            expr::canonicalize(expr::parse_expr(r.answer));
        } catch (const Error&) {
            continue;  // unparseable answers cannot be selected as a*
        }
        bool merged = false;
        for (auto& c : set.candidates) {
            if (answers_equivalent(c.answer, r.answer)) {
                ++c.supporters;
                if (c.trace.empty()) c.trace = r.trace;
                merged = true;
                break;
            }
        }
        if (!merged) set.candidates.push_back({r.answer, r.trace, 1});
    }
    return set;
}

Verdict verify(const Problem& problem, const CandidateSet& candidates,
               agents::ChatAgent& backbone, int samples) {
    if (candidates.candidates.empty())
        throw VerificationError("empty candidate set for problem '" + problem.id + "'");
    if (samples < 1) throw ConfigError("verifier samples must be >= 1");

    std::vector<RawVerdict> raws;
    std::string rationale;
    for (int s = 0; s < samples; ++s)
        raws.push_back(draw_verdict(problem, candidates, backbone, s == 0 ? &rationale : nullptr));

    // plurality: validity first
    int yes = 0;
    for (const auto& r : raws) yes += r.valid;
    Verdict v;
    v.problem = problem.id;
    v.backbone = backbone.name();
    v.samples = samples;
    v.rationale = rationale;
    if (yes * 2 < static_cast<int>(raws.size())) {
        v.valid = 0;
        return v;
    }
    v.valid = 1;

    // plurality answer among valid verdicts, grouped by equivalence
    std::vector<int> votes(candidates.candidates.size(), 0);
    for (const auto& r : raws) {
        if (!r.valid) continue;
        int canonical = r.answer_index;
        for (std::size_t i = 0; i < candidates.candidates.size(); ++i) {
            if (answers_equivalent(candidates.candidates[i].answer,
                                   candidates.candidates[r.answer_index].answer)) {
                canonical = static_cast<int>(i);
                break;
            }
        }
        ++votes[canonical];
    }
    int best = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    v.selected = candidates.candidates[best].answer;
    return v;
}

Verdict verify_with_escalation(const Problem& problem, const CandidateSet& candidates,
                               agents::ChatAgent& backbone) {
    Verdict first = verify(problem, candidates, backbone, 1);
    if (first.valid == 1 && first.selected) {
        int total = 0, held = 0;
        for (const auto& c : candidates.candidates) total += c.supporters;
        for (const auto& c : candidates.candidates) {
            if (answers_equivalent(c.answer, *first.selected)) {
                held = c.supporters;
                break;
            }
        }
        if (total > 0 && held * 2 < total) {
            Log::info("verify '", problem.id, "': selected answer held by minority (", held, "/",
                      total, "), escalating to 3 samples");
            return verify(problem, candidates, backbone, 3);
        }
    }
    return first;
}

void apply_verdict(Problem& problem, const Verdict& verdict, std::vector<SolveRecord>& records) {
    if (verdict.problem != problem.id)
        throw VerificationError("verdict for '" + verdict.problem +
                                "' applied to problem '" + problem.id + "'");
    if (verdict.valid == 0) {
        problem.validity = Validity::invalid;
        return;
    }
    problem.validity = Validity::valid;
    if (!verdict.selected)
        throw VerificationError("valid verdict without selected answer for '" + problem.id + "'");
    if (answers_equivalent(*verdict.selected, problem.gold)) return;

    problem.gold = *verdict.selected;
    problem.gold_overridden = true;
    for (auto& r : records) {
        if (r.problem != problem.id) continue;
        auto res = expr::judge(r.answer, problem.gold);
        r.outcome = res.outcome;
        r.parse_failure = res.parse_failure;
    }
}

AgreementReport compare_backbones(const std::vector<Verdict>& verdicts_a,
                                  const std::vector<Verdict>& verdicts_b) {
    std::map<std::string, const Verdict*> a, b;
    for (const auto& v : verdicts_a) a[v.problem] = &v;
    for (const auto& v : verdicts_b) b[v.problem] = &v;
    if (a.size() != verdicts_a.size() || b.size() != verdicts_b.size())
        throw ComparisonError("duplicate verdicts for a problem");
    if (a.size() != b.size())
        throw ComparisonError("verdict lists cover different problem sets");
    for (const auto& [id, va] : a) {
        (void)va;
        if (!b.count(id)) throw ComparisonError("verdict lists cover different problem sets");
    }

    AgreementReport rep;
    int same_v = 0, kept_both = 0, same_answer = 0;
    for (const auto& [id, va] : a) {
        const Verdict* vb = b.at(id);
        if (va->valid == vb->valid)
            ++same_v;
        else
            rep.exclusion_disagreements.push_back(id);
        if (va->valid == 1 && vb->valid == 1) {
            ++kept_both;
            if (va->selected && vb->selected && answers_equivalent(*va->selected, *vb->selected))
                ++same_answer;
            else
                rep.answer_disagreements.push_back(id);
        }
    }
    rep.exclusion_agreement = a.empty() ? 1.0 : static_cast<double>(same_v) / a.size();
    rep.answer_agreement = kept_both == 0 ? 1.0 : static_cast<double>(same_answer) / kept_both;
    return rep;
}

std::string MajorityStubVerifier::complete(const std::string& prompt) {
    static const std::regex cand_re(R"(CANDIDATE (\d+) \(supporters: (\d+)\))");
    auto begin = std::sregex_iterator(prompt.begin(), prompt.end(), cand_re);
    int best_idx = 0, best_support = -1;
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
        int idx = std::stoi((*it)[1]);
        int sup = std::stoi((*it)[2]);
        if (sup > best_support) {
            best_support = sup;
            best_idx = idx;
        }
    }
    return "VALID: yes\nANSWER: " + std::to_string(best_idx) + "\n";
}

}  // namespace arena::verify
