#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arena/agents.hpp"
#include "arena/bootstrap.hpp"
#include "arena/rasch.hpp"
#include "arena/types.hpp"
#include "arena/verifier.hpp"

namespace arena::store {

// Stable content hash of the manifest; every artifact carries it so that
// artifacts from different runs cannot be mixed.
std::string manifest_hash(const RunManifest& manifest);

// --- manifest ---------------------------------------------------------------
RunManifest load_manifest(const std::filesystem::path& file);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& file);
std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

// --- per-phase artifacts ----------------------------------------------------
void save_problems(const std::vector<Problem>& problems, const std::string& run_hash,
                   const std::filesystem::path& file);
std::vector<Problem> load_problems(const std::filesystem::path& file,
                                   const std::string& expected_hash);

void save_records(const std::vector<SolveRecord>& records, const std::string& run_hash,
                  const std::filesystem::path& file);
std::vector<SolveRecord> load_records(const std::filesystem::path& file,
                                      const std::string& expected_hash);

void save_verdicts(const std::vector<verify::Verdict>& verdicts, const std::string& run_hash,
                   const std::filesystem::path& file);
std::vector<verify::Verdict> load_verdicts(const std::filesystem::path& file,
                                           const std::string& expected_hash);

void save_truths(const std::vector<agents::GroundTruth>& truths, const std::string& run_hash,
                 const std::filesystem::path& file);
std::vector<agents::GroundTruth> load_truths(const std::filesystem::path& file,
                                             const std::string& expected_hash);

void save_fit(const rasch::RaschFit& fit, const std::string& run_hash,
              const std::filesystem::path& file);
rasch::RaschFit load_fit(const std::filesystem::path& file, const std::string& expected_hash);

// --- run report -------------------------------------------------------------
struct RunReport {
    std::vector<rasch::RatingRow> rows;                 // sorted by composite desc
    std::vector<boot::IntervalRow> intervals;
    std::map<std::string, boot::RankRange> ranges;
    int total_problems = 0;
    int valid_problems = 0;
    int observations = 0;
};

void save_report(const RunReport& report, const std::string& run_hash,
                 const std::filesystem::path& file);
RunReport load_report(const std::filesystem::path& file, const std::string& expected_hash);

void save_intervals(const std::vector<boot::IntervalRow>& intervals, const std::string& run_hash,
                    const std::filesystem::path& file);
void save_ranges(const std::map<std::string, boot::RankRange>& ranges,
                 const std::string& run_hash, const std::filesystem::path& file);

// --- leaderboard ------------------------------------------------------------
struct LeaderboardRow {
    int rank = 0;
    std::string model;
    double solve = 0.0;
    std::optional<double> author;
    std::optional<double> composite;
    std::optional<std::pair<double, double>> ci;
    std::optional<boot::RankRange> range;
};

std::vector<LeaderboardRow> leaderboard_rows(const RunReport& report);

// markdown uses half-to-even integer rounding; json keeps full precision.
void export_leaderboard(const std::vector<LeaderboardRow>& rows, const std::string& format,
                        const std::filesystem::path& file);

// Atomic text write (temp + rename).
void write_file_atomic(const std::filesystem::path& file, const std::string& content);

}  // namespace arena::store
