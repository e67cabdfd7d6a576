#include "arena/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "arena/errors.hpp"
#include "arena/log.hpp"

namespace arena::boot {

namespace {

// Restrict the matrix to the resampled problem multiset, weighting rows by
// multiplicity.
OutcomeMatrix reweight(const OutcomeMatrix& outcomes, const std::map<std::string, double>& mult) {
    OutcomeMatrix out;
    std::vector<double> pw(outcomes.problems.size(), 0.0);
    for (std::size_t p = 0; p < outcomes.problems.size(); ++p) {
        auto it = mult.find(outcomes.problems[p]);
        if (it != mult.end()) pw[p] = it->second;
    }
    std::vector<int> pmap(outcomes.problems.size(), -1);
    for (std::size_t p = 0; p < outcomes.problems.size(); ++p) {
        if (pw[p] > 0) {
            pmap[p] = static_cast<int>(out.problems.size());
            out.problems.push_back(outcomes.problems[p]);
        }
    }
    out.solvers = outcomes.solvers;
    for (const auto& o : outcomes.entries) {
        if (pmap[o.problem] < 0) continue;
        out.entries.push_back({o.solver, pmap[o.problem], o.y, o.weight * pw[o.problem]});
    }
    return out;
}

struct ResampleResult {
    bool ok = false;
    std::vector<rasch::RatingRow> rows;
};

ResampleResult evaluate_resample(const OutcomeMatrix& outcomes,
                                 const std::vector<Problem>& problems, const RankConfig& config,
                                 const rasch::RaschFit& warm, std::uint64_t seed, int index) {
    ResampleResult res;
    try {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
        std::mt19937_64 rng(seq);
        auto mult = stratified_resample(problems, rng);
        OutcomeMatrix sub = reweight(outcomes, mult);
        rasch::RaschFit fit = rasch::fit(sub, config.fit_options, &warm);
        res.rows = rasch::compute_ratings(fit, problems, config.scale, config.w_solve,
                                          config.w_author, mult);
        res.ok = true;
    } catch (const Error&) {
        res.ok = false;
    }
    return res;
}

std::vector<IntervalRow> aggregate(const std::vector<ResampleResult>& results,
                                   const std::vector<rasch::RatingRow>& point_rows,
                                   const BootstrapSpec& spec) {
    int dropped = 0;
    for (const auto& r : results)
        if (!r.ok) ++dropped;
    if (dropped > 0) {
        Log::warn("bootstrap: ", dropped, " of ", results.size(), " resample fits dropped");
        if (dropped * 100 > static_cast<int>(results.size()))
            throw BootstrapError("more than 1% of resample fits failed (" +
                                 std::to_string(dropped) + "/" + std::to_string(results.size()) +
                                 ")");
    }

    // collect per (model, axis), resample order already fixed by index
    std::map<std::pair<std::string, std::string>, std::vector<double>> draws;
    for (const auto& r : results) {
        if (!r.ok) continue;
        for (const auto& row : r.rows) {
            draws[{row.model, "solve"}].push_back(row.solve_rating);
            if (row.author_rating) draws[{row.model, "author"}].push_back(*row.author_rating);
            if (row.composite) draws[{row.model, "composite"}].push_back(*row.composite);
        }
    }

    std::vector<IntervalRow> intervals;
    for (const auto& row : point_rows) {
        auto add = [&](const std::string& axis, double point) {
            auto it = draws.find({row.model, axis});
            if (it == draws.end() || it->second.empty()) return;
            IntervalRow iv;
            iv.model = row.model;
            iv.axis = axis;
            iv.point = point;
            iv.lower = quantile_linear(it->second, spec.alpha);
            iv.upper = quantile_linear(it->second, 1.0 - spec.alpha);
            intervals.push_back(std::move(iv));
        };
        add("solve", row.solve_rating);
        if (row.author_rating) add("author", *row.author_rating);
        if (row.composite) add("composite", *row.composite);
    }
    return intervals;
}

}  // namespace

double quantile_linear(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.size() == 1) return values[0];
    double idx = q * (values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    std::size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = idx - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

std::map<std::string, double> stratified_resample(const std::vector<Problem>& problems,
                                                  std::mt19937_64& rng) {
    // author pools in first-seen order so draw sequence is deterministic
    std::vector<std::string> authors;
    std::map<std::string, std::vector<const Problem*>> pools;
    for (const auto& p : problems) {
        if (p.validity == Validity::invalid) continue;
        if (!pools.count(p.author)) authors.push_back(p.author);
        pools[p.author].push_back(&p);
    }
    std::map<std::string, double> mult;
    for (const auto& author : authors) {
        const auto& pool = pools[author];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        for (std::size_t i = 0; i < pool.size(); ++i) mult[pool[pick(rng)]->id] += 1.0;
    }
    return mult;
}

std::vector<IntervalRow> bootstrap_ci(const OutcomeMatrix& outcomes,
                                      const std::vector<Problem>& problems,
                                      const BootstrapSpec& spec, const RankConfig& config,
                                      bool parallel) {
    if (spec.iterations < 1) throw ConfigError("bootstrap iterations must be >= 1");
    if (!(spec.alpha > 0 && spec.alpha < 0.5)) throw ConfigError("alpha must be in (0, 0.5)");

    rasch::RaschFit full = rasch::fit(outcomes, config.fit_options);
    auto point_rows =
        rasch::compute_ratings(full, problems, config.scale, config.w_solve, config.w_author);

    std::vector<ResampleResult> results(spec.iterations);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < spec.iterations; ++i)
            results[i] = evaluate_resample(outcomes, problems, config, full, spec.seed, i);
    } else {
        for (int i = 0; i < spec.iterations; ++i)
            results[i] = evaluate_resample(outcomes, problems, config, full, spec.seed, i);
    }
    return aggregate(results, point_rows, spec);
}

std::vector<IntervalRow> bootstrap_ci_serial(const OutcomeMatrix& outcomes,
                                             const std::vector<Problem>& problems,
                                             const BootstrapSpec& spec, const RankConfig& config) {
    return bootstrap_ci(outcomes, problems, spec, config, /*parallel=*/false);
}

std::map<std::string, RankRange> rank_ranges(const std::vector<IntervalRow>& composite_intervals) {
    for (const auto& iv : composite_intervals)
        if (iv.axis != "composite")
            throw ComparisonError("rank_ranges expects composite intervals only");
    std::map<std::string, RankRange> out;
    for (const auto& m : composite_intervals) {
        RankRange r{1, 1};
        for (const auto& j : composite_intervals) {
            if (j.model == m.model) continue;
            if (j.lower > m.upper) ++r.best;
            if (j.upper > m.lower) ++r.worst;
        }
        out[m.model] = r;
    }
    return out;
}

}  // namespace arena::boot
