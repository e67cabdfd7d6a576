#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "arena/expr.hpp"
#include "arena/types.hpp"
#include "arena/verifier.hpp"
#include "doctest.h"

using namespace arena;
using namespace arena::verify;

namespace {

Problem mk_problem(const std::string& id, const std::string& gold,
                   const std::string& author = "author") {
    Problem p;
    p.id = id;
    p.author = author;
    p.gold = gold;
    p.statement = "compute something";
    return p;
}

SolveRecord mk_record(const std::string& solver, const std::string& problem,
                      const std::string& answer, const std::string& gold) {
    SolveRecord r;
    r.solver = solver;
    r.problem = problem;
    r.answer = answer;
    auto res = expr::judge(answer, gold);
    r.outcome = res.outcome;
    r.parse_failure = res.parse_failure;
    return r;
}

class CountingStub : public MajorityStubVerifier {
public:
    std::string complete(const std::string& prompt) override {
        ++calls;
        return MajorityStubVerifier::complete(prompt);
    }
    int calls = 0;
};

}  // namespace

TEST_CASE("needs_verification triggers on any failure") {
    Problem p = mk_problem("p", "5");
    std::vector<SolveRecord> all_right = {mk_record("a", "p", "5", "5"),
                                          mk_record("b", "p", "5", "5")};
    CHECK_FALSE(needs_verification(p, all_right));

    std::vector<SolveRecord> one_wrong = {mk_record("a", "p", "5", "5"),
                                          mk_record("b", "p", "6", "5")};
    CHECK(needs_verification(p, one_wrong));

    std::vector<SolveRecord> all_wrong = {mk_record("a", "p", "7", "5"),
                                          mk_record("b", "p", "6", "5")};
    CHECK(needs_verification(p, all_wrong));
}

TEST_CASE("candidates deduplicate by equivalence, gold always first") {
    Problem p = mk_problem("p", "1/2");
    std::vector<SolveRecord> records = {
        mk_record("a", "p", "0.5", "1/2"),        // equivalent to gold
        mk_record("b", "p", "\\frac{1}{2}", "1/2"),
        mk_record("c", "p", "3/4", "1/2"),
        mk_record("d", "p", "0.75", "1/2"),
        mk_record("e", "p", "utter nonsense", "1/2"),  // unparseable: skipped
    };
    CandidateSet set = build_candidates(p, records);
    REQUIRE(set.candidates.size() == 2);
    CHECK(set.candidates[0].answer == "1/2");
    CHECK(set.candidates[0].supporters == 2);
    CHECK(set.candidates[1].supporters == 2);
}

TEST_CASE("gold override pattern: majority answer replaces a wrong gold") {
    // operator-norm style fixture: gold 2/(sqrt 5 pi), 15 of 17 solvers say 1/pi
    Problem p = mk_problem("volterra", "2/(\\sqrt{5}\\pi)");
    std::vector<SolveRecord> records;
    for (int i = 0; i < 15; ++i)
        records.push_back(mk_record("s" + std::to_string(i), "volterra", "1/\\pi", p.gold));
    records.push_back(mk_record("s15", "volterra", "0", p.gold));
    records.push_back(mk_record("s16", "volterra", "1/2", p.gold));
    for (const auto& r : records) CHECK(r.outcome == 0);

    MajorityStubVerifier stub;
    CandidateSet set = build_candidates(p, records);
    Verdict v = verify::verify(p, set, stub, 1);
    CHECK(v.valid == 1);
    REQUIRE(v.selected.has_value());
    CHECK(expr::equivalent(*v.selected, "1/pi"));

    apply_verdict(p, v, records);
    CHECK(p.validity == Validity::valid);
    CHECK(p.gold_overridden);
    int correct = 0;
    for (const auto& r : records) correct += r.outcome;
    CHECK(correct == 15);
}

TEST_CASE("subset-count pattern: 199 -> 98 re-judges to 16/19") {
    Problem p = mk_problem("subsets", "199");
    std::vector<SolveRecord> records;
    for (int i = 0; i < 16; ++i)
        records.push_back(mk_record("s" + std::to_string(i), "subsets", "98", "199"));
    for (int i = 16; i < 19; ++i)
        records.push_back(mk_record("s" + std::to_string(i), "subsets", "199", "199"));

    MajorityStubVerifier stub;
    Verdict v = verify::verify(p, build_candidates(p, records), stub, 1);
    apply_verdict(p, v, records);
    CHECK(p.gold == "98");
    CHECK(p.gold_overridden);
    int correct = 0;
    for (const auto& r : records) correct += r.outcome;
    CHECK(correct == 16);

    // idempotent: applying the same verdict again changes nothing
    Problem p2 = p;
    auto records2 = records;
    apply_verdict(p2, v, records2);
    CHECK(p2.gold == p.gold);
    for (std::size_t i = 0; i < records.size(); ++i)
        CHECK(records2[i].outcome == records[i].outcome);
}

TEST_CASE("v = 0 excludes the problem from the outcome matrix") {
    Problem p = mk_problem("illposed", "5");
    std::vector<SolveRecord> records = {mk_record("a", "illposed", "5", "5"),
                                        mk_record("b", "illposed", "6", "5")};
    Verdict v;
    v.problem = "illposed";
    v.valid = 0;
    apply_verdict(p, v, records);
    CHECK(p.validity == Validity::invalid);
    OutcomeMatrix m = build_outcome_matrix(records, {p});
    CHECK(m.entries.empty());
}

TEST_CASE("equivalent selected answer keeps gold and outcomes unchanged") {
    Problem p = mk_problem("p", "1/2");
    std::vector<SolveRecord> records = {mk_record("a", "p", "0.5", "1/2"),
                                        mk_record("b", "p", "1/3", "1/2")};
    Verdict v;
    v.problem = "p";
    v.valid = 1;
    v.selected = "\\frac{1}{2}";
    apply_verdict(p, v, records);
    CHECK(p.validity == Validity::valid);
    CHECK_FALSE(p.gold_overridden);
    CHECK(p.gold == "1/2");
    CHECK(records[0].outcome == 1);
    CHECK(records[1].outcome == 0);
}

TEST_CASE("unparseable verdict gets one re-ask, then fails") {
    Problem p = mk_problem("p", "5");
    CandidateSet set = build_candidates(p, {mk_record("a", "p", "6", "5")});

    agents::CannedAgent recovers("flaky", {"gibberish", "VALID: yes\nANSWER: 0"});
    Verdict v = verify::verify(p, set, recovers, 1);
    CHECK(v.valid == 1);

    agents::CannedAgent broken("broken", {"gibberish", "ANSWER: 99", "VALID: maybe"});
    CHECK_THROWS_AS(verify::verify(p, set, broken, 1), VerificationError);
}

TEST_CASE("plurality across samples; ties resolve to the lowest index") {
    Problem p = mk_problem("p", "5");
    CandidateSet set = build_candidates(
        p, {mk_record("a", "p", "6", "5"), mk_record("b", "p", "7", "5")});
    REQUIRE(set.candidates.size() == 3);

    agents::CannedAgent split("split", {"VALID: yes\nANSWER: 2", "VALID: no",
                                        "VALID: yes\nANSWER: 1"});
    Verdict v = verify::verify(p, set, split, 3);
    CHECK(v.valid == 1);  // 2 yes vs 1 no
    CHECK(v.samples == 3);

    agents::CannedAgent naysayer("nay", {"VALID: no", "VALID: no", "VALID: yes\nANSWER: 0"});
    v = verify::verify(p, set, naysayer, 3);
    CHECK(v.valid == 0);
    CHECK_FALSE(v.selected.has_value());

    // equal supporters: the stub must pick the lowest candidate index (the gold)
    CandidateSet tie_set = build_candidates(
        p, {mk_record("a", "p", "5", "5"), mk_record("b", "p", "6", "5")});
    MajorityStubVerifier stub;
    Verdict tie = verify::verify(p, tie_set, stub, 1);
    CHECK(tie.valid == 1);
    CHECK(*tie.selected == "5");
}

TEST_CASE("escalation re-verifies with 3 samples when a minority answer wins") {
    Problem p = mk_problem("p", "5");
    // three distinct wrong answers: the plurality winner holds 1 of 3 supporters
    CandidateSet set = build_candidates(p, {mk_record("a", "p", "6", "5"),
                                            mk_record("b", "p", "7", "5"),
                                            mk_record("c", "p", "8", "5")});
    CountingStub stub;
    Verdict v = verify_with_escalation(p, set, stub);
    CHECK(v.samples == 3);
    CHECK(stub.calls == 4);  // 1 initial + 3 escalation samples

    // majority-held selection: no escalation
    CandidateSet easy = build_candidates(p, {mk_record("a", "p", "5", "5"),
                                             mk_record("b", "p", "5", "5"),
                                             mk_record("c", "p", "6", "5")});
    CountingStub stub2;
    v = verify_with_escalation(p, easy, stub2);
    CHECK(v.samples == 1);
    CHECK(stub2.calls == 1);
}

TEST_CASE("compare_backbones agreement accounting") {
    auto mk_verdict = [](const std::string& id, int valid, const std::string& sel) {
        Verdict v;
        v.problem = id;
        v.valid = valid;
        if (valid) v.selected = sel;
        return v;
    };

    SUBCASE("identical lists give 100% / 100%") {
        std::vector<Verdict> a;
        for (int i = 0; i < 20; ++i)
            a.push_back(mk_verdict("p" + std::to_string(i), i % 5 != 0, "1/2"));
        AgreementReport rep = compare_backbones(a, a);
        CHECK(rep.exclusion_agreement == 1.0);
        CHECK(rep.answer_agreement == 1.0);
        CHECK(rep.exclusion_disagreements.empty());
        CHECK(rep.answer_disagreements.empty());
    }

    SUBCASE("1 of 100 exclusions differs -> 99%") {
        std::vector<Verdict> a, b;
        for (int i = 0; i < 100; ++i) {
            a.push_back(mk_verdict("p" + std::to_string(i), 1, "2"));
            b.push_back(mk_verdict("p" + std::to_string(i), i == 7 ? 0 : 1, "2"));
        }
        AgreementReport rep = compare_backbones(a, b);
        CHECK(rep.exclusion_agreement == doctest::Approx(0.99));
        CHECK(rep.exclusion_disagreements == std::vector<std::string>{"p7"});
    }

    SUBCASE("replay-shaped fixture: 414 problems, ~97.5% / ~99.4%") {
        std::vector<Verdict> a, b;
        for (int i = 0; i < 414; ++i) {
            std::string id = "q" + std::to_string(i);
            int va = i < 50 ? 0 : 1;          // 50 excluded by backbone a
            int vb = va;
            if (i >= 50 && i < 60) vb = 0;    // 10 exclusion disagreements
            a.push_back(mk_verdict(id, va, "2"));
            // 2 answer disagreements among the 354 kept by both
            b.push_back(mk_verdict(id, vb, (i == 100 || i == 101) ? "3" : "2"));
        }
        AgreementReport rep = compare_backbones(a, b);
        CHECK(rep.exclusion_agreement == doctest::Approx(404.0 / 414.0));
        CHECK(rep.answer_agreement == doctest::Approx(352.0 / 354.0));
        CHECK(rep.exclusion_agreement == doctest::Approx(0.975).epsilon(0.002));
        CHECK(rep.answer_agreement == doctest::Approx(0.994).epsilon(0.001));
    }

    SUBCASE("mismatched or duplicated sets are comparison errors") {
        std::vector<Verdict> a = {mk_verdict("p1", 1, "2")};
        std::vector<Verdict> b = {mk_verdict("p2", 1, "2")};
        CHECK_THROWS_AS(compare_backbones(a, b), ComparisonError);
        std::vector<Verdict> dup = {mk_verdict("p1", 1, "2"), mk_verdict("p1", 0, "")};
        CHECK_THROWS_AS(compare_backbones(dup, dup), ComparisonError);
    }
}
