#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/agents.hpp"
#include "arena/types.hpp"

namespace arena::verify {

struct Verdict {
    std::string problem;
    std::string backbone;
    int valid = 0;                        // v
    std::optional<std::string> selected;  // a*, present when v = 1
    std::string rationale;
    int samples = 1;
};

struct Candidate {
    std::string answer;
    std::string trace;
    int supporters = 0;  // solvers whose answer is equivalent to this one
};

struct CandidateSet {
    std::string problem;
    std::vector<Candidate> candidates;
};

// True iff at least one recorded outcome is 0.
bool needs_verification(const Problem& problem, const std::vector<SolveRecord>& records);

// Unique parseable solver answers (deduplicated by canonical equivalence)
// plus the author's gold. Solver identities are never included.
CandidateSet build_candidates(const Problem& problem, const std::vector<SolveRecord>& records);

// Prompts the backbone with statement, gold, and candidate list and parses a
// strict two-field verdict (VALID: yes/no; ANSWER: index). With samples > 1,
// takes the plurality: validity first, then answer among valid verdicts. An
// unparseable verdict after one re-ask is a verification error.
Verdict verify(const Problem& problem, const CandidateSet& candidates,
               agents::ChatAgent& backbone, int samples = 1);

// Runs verify once, escalating to 3 samples when the single verdict selects
// an answer held by a strict minority of solvers.
Verdict verify_with_escalation(const Problem& problem, const CandidateSet& candidates,
                               agents::ChatAgent& backbone);

// v = 0: the problem becomes invalid (excluded from scoring). v = 1 with a
// selected answer not equivalent to the gold: the gold is replaced and every
// record is re-judged. Idempotent.
void apply_verdict(Problem& problem, const Verdict& verdict, std::vector<SolveRecord>& records);

struct AgreementReport {
    double exclusion_agreement = 0.0;  // fraction with equal v
    double answer_agreement = 0.0;     // fraction of kept-by-both with equivalent a*
    std::vector<std::string> exclusion_disagreements;
    std::vector<std::string> answer_disagreements;
};

AgreementReport compare_backbones(const std::vector<Verdict>& verdicts_a,
                                  const std::vector<Verdict>& verdicts_b);

// Backbone stub replying with the candidate holding the most supporters;
// used by all-synthetic rounds and tests.
class MajorityStubVerifier : public agents::ChatAgent {
public:
    MajorityStubVerifier() = default;
    std::string complete(const std::string& prompt) override;
    const std::string& name() const override { return name_; }

private:
    std::string name_ = "stub-majority";
};

}  // namespace arena::verify
