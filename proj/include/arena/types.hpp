#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "arena/errors.hpp"

namespace arena {

struct ModelId {
    std::string name;
    bool is_author = true;
    bool is_solver = true;
    bool is_verifier = false;
};

struct DomainTag {
    std::string broad_area;
    std::string subfield;

    bool operator==(const DomainTag&) const = default;
};

// The six broad areas with their subfields.
const std::vector<std::pair<std::string, std::vector<std::string>>>& domain_taxonomy();

// Flattened taxonomy as DomainTags.
std::vector<DomainTag> full_taxonomy();

void validate_domain(const DomainTag& tag);

enum class Validity { unchecked, valid, invalid };

std::string validity_name(Validity v);
Validity validity_from_name(const std::string& s);

struct AmplificationStep {
    std::string statement;
    std::string gold;
};

struct MetaPrompt {
    std::string author;
    DomainTag domain;
    std::string text;
};

struct GenerationTrace {
    std::optional<MetaPrompt> meta_prompt;
    std::string draft_statement;
    std::string draft_gold;
    std::vector<AmplificationStep> amplification_history;
    int stages_used = 1;
};

struct Problem {
    std::string id;
    std::string author;
    DomainTag domain;
    std::string statement;
    std::string gold;
    bool gold_overridden = false;
    Validity validity = Validity::unchecked;
    GenerationTrace provenance;
};

struct SolveRecord {
    std::string solver;
    std::string problem;
    std::string answer;
    std::string trace;
    int outcome = 0;
    bool parse_failure = false;
};

struct Observation {
    int solver;   // index into OutcomeMatrix::solvers
    int problem;  // index into OutcomeMatrix::problems
    int y;
    double weight = 1.0;
};

// Sparse binary solve outcomes over the observed set O. Indices are stable
// and sorted, so iteration order is deterministic.
struct OutcomeMatrix {
    std::vector<std::string> solvers;
    std::vector<std::string> problems;
    std::vector<Observation> entries;

    std::size_t size() const { return entries.size(); }
    int solver_index(const std::string& name) const;
    int problem_index(const std::string& id) const;
};

struct SyntheticParams {
    double latent_ability = 0.0;
    double authoring_difficulty_mean = 0.0;
    double authoring_difficulty_spread = 0.0;
    double gold_error_rate = 0.0;
    std::uint64_t seed = 0;
};

struct EndpointParams {
    std::string base_url;
    std::string auth_env;
    double temperature = 1.0;
    int max_retries = 3;
    int timeout_seconds = 300;
    int backoff_base_ms = 500;
};

struct ParticipantSpec {
    ModelId id;
    // exactly one of these is engaged, per `kind`
    std::string kind;  // "synthetic" or "endpoint"
    SyntheticParams synthetic;
    EndpointParams endpoint;
};

struct RunManifest {
    std::vector<ParticipantSpec> models;
    int problems_per_model = 30;
    std::vector<DomainTag> domains;  // empty = full taxonomy
    double lambda = 0.01;
    std::string anchor_model;
    double anchor_rating = 1500.0;
    double w_solve = 0.5;
    double w_author = 0.5;
    int bootstrap_iterations = 10000;
    double alpha = 0.025;
    int pipeline_stages = 3;
    int amplification_rounds = 1;
    std::uint64_t seed = 0;
    int parallelism = 1;
    double temperature = 1.0;
    std::string verifier_backbone = "stub-majority";
    int verifier_samples = 1;

    void validate() const;
};

// Spread K problem slots over the taxonomy: each broad area gets floor or
// ceil of K/|areas| slots, subfields cycled round-robin within an area.
// Which areas receive the extra slot is a seeded permutation.
std::vector<DomainTag> plan_domain_schedule(int k, const std::vector<DomainTag>& taxonomy,
                                            std::uint64_t seed);

// Populates the solve matrix from records: keeps exactly the records whose
// problem is not invalid and whose solver is not the author. Duplicate
// (solver, problem) pairs are a data-integrity error; self-authored records
// are dropped with a logged count.
OutcomeMatrix build_outcome_matrix(const std::vector<SolveRecord>& records,
                                   const std::vector<Problem>& problems);

}  // namespace arena
