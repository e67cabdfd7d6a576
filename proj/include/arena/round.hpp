#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "arena/store.hpp"
#include "arena/types.hpp"
#include "arena/verifier.hpp"

namespace arena::round {

// A round runs as five phases, each reading the previous phase's checkpoint
// from the output directory and writing its own:
//   generate -> problems.jsonl (+ truths.jsonl for synthetic authors)
//   solve    -> records.jsonl
//   verify   -> verdicts.jsonl, problems_verified.jsonl, records_verified.jsonl
//   rank     -> fit.json, intervals.json, ranges.json
//   report   -> report.json, leaderboard.md, leaderboard.json
// A missing checkpoint is a phase error naming the file to regenerate.

struct RoundContext {
    RunManifest manifest;
    std::filesystem::path out;
    std::string run_hash;  // manifest hash stamped into every artifact

    static RoundContext open(const RunManifest& manifest, const std::filesystem::path& out);
};

void run_generate(const RoundContext& ctx);
void run_solve(const RoundContext& ctx);
void run_verify(const RoundContext& ctx);
void run_rank(const RoundContext& ctx);
store::RunReport run_report(const RoundContext& ctx);

// All five phases in order.
store::RunReport run_round(const RoundContext& ctx);

// Re-runs verification on the stored problems/records with the named
// backbone and compares against the stored verdicts.
verify::AgreementReport replay_verify(const RoundContext& ctx, const std::string& backbone);

// Prompt used when asking an endpoint model to solve a problem.
std::string solve_prompt(const Problem& problem);

// Extracts the final answer from a solver completion: the last ANSWER:
// section if present, otherwise the trimmed completion.
std::string extract_answer(const std::string& completion);

}  // namespace arena::round
