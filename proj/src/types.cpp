#include "arena/types.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "arena/log.hpp"

namespace arena {

const std::vector<std::pair<std::string, std::vector<std::string>>>& domain_taxonomy() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> areas = {
        {"Analysis",
         {"real analysis", "measure and integration", "functional analysis", "PDEs",
          "complex analysis"}},
        {"Algebra",
         {"linear algebra", "abstract algebra (groups/rings/fields)", "representation theory",
          "algebraic geometry", "category theory"}},
        {"Geometry & Topology",
         {"differential geometry", "smooth manifolds", "point-set topology",
          "algebraic topology", "homotopy theory"}},
        {"Discrete Mathematics",
         {"combinatorics", "graph theory", "logic and foundations", "algorithms", "complexity"}},
        {"Probability & Statistics",
         {"probability theory", "mathematical statistics", "stochastic processes",
          "stochastic calculus", "Markov chains"}},
        {"Applied & Computational Mathematics",
         {"differential equations", "optimization", "numerical analysis", "dynamical systems",
          "control theory"}},
    };
    return areas;
}

std::vector<DomainTag> full_taxonomy() {
    std::vector<DomainTag> tags;
    for (const auto& [area, subs] : domain_taxonomy())
        for (const auto& sub : subs) tags.push_back({area, sub});
    return tags;
}

void validate_domain(const DomainTag& tag) {
    for (const auto& [area, subs] : domain_taxonomy()) {
        if (area != tag.broad_area) continue;
        if (std::find(subs.begin(), subs.end(), tag.subfield) != subs.end()) return;
        throw ConfigError("subfield '" + tag.subfield + "' not in broad area '" + area + "'");
    }
    throw ConfigError("unknown broad area '" + tag.broad_area + "'");
}

std::string validity_name(Validity v) {
    switch (v) {
        case Validity::unchecked: return "unchecked";
        case Validity::valid: return "valid";
        case Validity::invalid: return "invalid";
    }
    return "unchecked";
}

Validity validity_from_name(const std::string& s) {
    if (s == "unchecked") return Validity::unchecked;
    if (s == "valid") return Validity::valid;
    if (s == "invalid") return Validity::invalid;
    throw LoadError("unknown validity '" + s + "'");
}

int OutcomeMatrix::solver_index(const std::string& name) const {
    auto it = std::lower_bound(solvers.begin(), solvers.end(), name);
    if (it == solvers.end() || *it != name) return -1;
    return static_cast<int>(it - solvers.begin());
}

int OutcomeMatrix::problem_index(const std::string& id) const {
    auto it = std::lower_bound(problems.begin(), problems.end(), id);
    if (it == problems.end() || *it != id) return -1;
    return static_cast<int>(it - problems.begin());
}

void RunManifest::validate() const {
    if (models.empty()) throw ConfigError("manifest has no models");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (m.id.name.empty()) throw ConfigError("model with empty name");
        if (!names.insert(m.id.name).second)
            throw ConfigError("duplicate model name '" + m.id.name + "'");
        if (m.kind != "synthetic" && m.kind != "endpoint")
            throw ConfigError("model '" + m.id.name + "' has unknown kind '" + m.kind + "'");
    }
    if (problems_per_model < 1) throw ConfigError("problems_per_model must be >= 1");
    if (bootstrap_iterations < 1) throw ConfigError("bootstrap_iterations must be >= 1");
    if (!names.count(anchor_model))
        throw ConfigError("anchor_model '" + anchor_model + "' is not a participant");
    if (w_solve < 0 || w_author < 0 || std::abs(w_solve + w_author - 1.0) > 1e-12)
        throw ConfigError("weights must be nonnegative and sum to 1");
    if (lambda < 0) throw ConfigError("lambda must be nonnegative");
    if (!(alpha > 0 && alpha < 0.5)) throw ConfigError("alpha must be in (0, 0.5)");
    if (pipeline_stages < 1 || pipeline_stages > 3)
        throw ConfigError("pipeline_stages must be 1, 2, or 3");
    if (amplification_rounds < 0) throw ConfigError("amplification_rounds must be >= 0");
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
    for (const auto& d : domains) validate_domain(d);
}

std::vector<DomainTag> plan_domain_schedule(int k, const std::vector<DomainTag>& taxonomy,
                                            std::uint64_t seed) {
    if (k < 1) throw ConfigError("K must be >= 1");
    if (taxonomy.empty()) throw ConfigError("empty domain taxonomy");

    // Group subfields by broad area, preserving first-seen area order.
    std::vector<std::string> areas;
    std::map<std::string, std::vector<std::string>> subs;
    for (const auto& tag : taxonomy) {
        if (!subs.count(tag.broad_area)) areas.push_back(tag.broad_area);
        subs[tag.broad_area].push_back(tag.subfield);
    }

    // Seeded permutation decides which areas absorb the remainder slots.
    std::vector<std::size_t> order(areas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<DomainTag> schedule;
    schedule.reserve(k);
    std::map<std::string, std::size_t> next_sub;
    for (int slot = 0; slot < k; ++slot) {
        const std::string& area = areas[order[slot % order.size()]];
        const auto& list = subs[area];
        std::size_t& cursor = next_sub[area];
        schedule.push_back({area, list[cursor % list.size()]});
        ++cursor;
    }
    return schedule;
}

OutcomeMatrix build_outcome_matrix(const std::vector<SolveRecord>& records,
                                   const std::vector<Problem>& problems) {
    std::map<std::string, const Problem*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;

    OutcomeMatrix out;
    std::set<std::string> solver_set, problem_set;
    std::set<std::pair<std::string, std::string>> seen;
    int self_dropped = 0;

    std::vector<const SolveRecord*> kept;
    for (const auto& r : records) {
        auto it = by_id.find(r.problem);
        if (it == by_id.end())
            throw DataIntegrityError("record references unknown problem '" + r.problem + "'");
        const Problem& p = *it->second;
        if (p.validity == Validity::invalid) continue;
        if (r.solver == p.author) {
            ++self_dropped;
            continue;
        }
        if (!seen.insert({r.solver, r.problem}).second)
            throw DataIntegrityError("duplicate record for solver '" + r.solver +
                                     "', problem '" + r.problem + "'");
        if (r.outcome != 0 && r.outcome != 1)
            throw DataIntegrityError("record outcome outside {0,1} for problem '" + r.problem + "'");
        kept.push_back(&r);
        solver_set.insert(r.solver);
        problem_set.insert(r.problem);
    }
    if (self_dropped > 0)
        Log::warn("build_outcome_matrix: dropped ", self_dropped, " self-authored record(s)");

    out.solvers.assign(solver_set.begin(), solver_set.end());
    out.problems.assign(problem_set.begin(), problem_set.end());
    out.entries.reserve(kept.size());
    for (const auto* r : kept)
        out.entries.push_back({out.solver_index(r->solver), out.problem_index(r->problem),
                               r->outcome, 1.0});
    std::sort(out.entries.begin(), out.entries.end(), [](const Observation& a, const Observation& b) {
        return std::tie(a.solver, a.problem) < std::tie(b.solver, b.problem);
    });
    return out;
}

}  // namespace arena
