#include "arena/rasch.hpp"

#include <algorithm>
#include <numeric>

#include "arena/errors.hpp"

namespace arena::rasch {

namespace {

// log sigma(z), stable for large |z|
double log_sigmoid(double z) {
    if (z >= 0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

constexpr double kMaxNewtonStep = 2.0;
constexpr double kMinCurvature = 1e-12;

}  // namespace

double log_likelihood(const RaschFit& fit, const OutcomeMatrix& outcomes) {
    double ll = 0.0;
    for (const auto& o : outcomes.entries) {
        auto si = fit.abilities.find(outcomes.solvers[o.solver]);
        auto di = fit.difficulties.find(outcomes.problems[o.problem]);
        if (si == fit.abilities.end() || di == fit.difficulties.end())
            throw FitError("fit does not cover outcome indices");
        double z = si->second - di->second;
        ll += o.weight * (o.y ? log_sigmoid(z) : log_sigmoid(-z));
    }
    for (const auto& [id, d] : fit.difficulties) {
        (void)id;
        ll -= fit.lambda * d * d;
    }
    return ll;
}

RaschFit fit(const OutcomeMatrix& outcomes, const FitOptions& options, const RaschFit* warm_start) {
    if (outcomes.entries.empty()) throw FitError("empty outcome matrix");
    if (options.lambda < 0) throw ConfigError("lambda must be nonnegative");

    const int ns = static_cast<int>(outcomes.solvers.size());
    const int np = static_cast<int>(outcomes.problems.size());

    // index observations per coordinate
    std::vector<std::vector<int>> by_solver(ns), by_problem(np);
    for (int i = 0; i < static_cast<int>(outcomes.entries.size()); ++i) {
        const auto& o = outcomes.entries[i];
        by_solver[o.solver].push_back(i);
        by_problem[o.problem].push_back(i);
    }

    if (options.lambda == 0.0) {
        for (int p = 0; p < np; ++p) {
            double wsum = 0, ysum = 0;
            for (int i : by_problem[p]) {
                wsum += outcomes.entries[i].weight;
                ysum += outcomes.entries[i].weight * outcomes.entries[i].y;
            }
            if (ysum == 0.0 || ysum == wsum)
                throw DivergenceError("lambda = 0 with degenerate problem '" +
                                      outcomes.problems[p] + "' (solved by all or no solvers)");
        }
    }

    std::vector<double> s(ns, 0.0), d(np, 0.0);
    if (warm_start) {
        for (int m = 0; m < ns; ++m) {
            auto it = warm_start->abilities.find(outcomes.solvers[m]);
            if (it != warm_start->abilities.end()) s[m] = it->second;
        }
        for (int p = 0; p < np; ++p) {
            auto it = warm_start->difficulties.find(outcomes.problems[p]);
            if (it != warm_start->difficulties.end()) d[p] = it->second;
        }
    }

    int iter = 0;
    bool converged = false;
    double grad_norm = 0.0;
    for (; iter < options.max_iterations; ++iter) {
        double max_change = 0.0;

        for (int m = 0; m < ns; ++m) {
            double g = 0.0, h = 0.0;
            for (int i : by_solver[m]) {
                const auto& o = outcomes.entries[i];
                double p = predict(s[m], d[o.problem]);
                g += o.weight * (o.y - p);
                h += o.weight * p * (1.0 - p);
            }
            double step = g / std::max(h, kMinCurvature);
            step = std::clamp(step, -kMaxNewtonStep, kMaxNewtonStep);
            s[m] += step;
            max_change = std::max(max_change, std::abs(step));
        }

        for (int p = 0; p < np; ++p) {
            double g = -2.0 * options.lambda * d[p];
            double h = 2.0 * options.lambda;
            for (int i : by_problem[p]) {
                const auto& o = outcomes.entries[i];
                double pr = predict(s[o.solver], d[p]);
                g += o.weight * (pr - o.y);
                h += o.weight * pr * (1.0 - pr);
            }
            double step = g / std::max(h, kMinCurvature);
            step = std::clamp(step, -kMaxNewtonStep, kMaxNewtonStep);
            d[p] += step;
            max_change = std::max(max_change, std::abs(step));
        }

        // the likelihood is invariant under a joint shift of all s and d, so
        // the penalty's optimal shift (mean d = 0) can be taken in closed
        // form; without this the shift mode converges only at rate O(lambda)
        double shift = std::accumulate(d.begin(), d.end(), 0.0) / np;
        for (auto& v : s) v -= shift;
        for (auto& v : d) v -= shift;

        // gradient infinity norm at the current point
        grad_norm = 0.0;
        for (int m = 0; m < ns; ++m) {
            double g = 0.0;
            for (int i : by_solver[m]) {
                const auto& o = outcomes.entries[i];
                g += o.weight * (o.y - predict(s[m], d[o.problem]));
            }
            grad_norm = std::max(grad_norm, std::abs(g));
        }
        for (int p = 0; p < np; ++p) {
            double g = -2.0 * options.lambda * d[p];
            for (int i : by_problem[p]) {
                const auto& o = outcomes.entries[i];
                g += o.weight * (predict(s[o.solver], d[p]) - o.y);
            }
            grad_norm = std::max(grad_norm, std::abs(g));
        }

        if (max_change < options.tolerance || grad_norm < options.tolerance) {
            converged = true;
            ++iter;
            break;
        }
    }

    if (!converged)
        throw FitError("no convergence after " + std::to_string(options.max_iterations) +
                       " sweeps (grad inf-norm " + std::to_string(grad_norm) + ")");

    // center abilities to mean zero, shifting difficulties identically so
    // every s - d (and every anchored rating) is unchanged
    double mean_s = std::accumulate(s.begin(), s.end(), 0.0) / ns;
    for (auto& v : s) v -= mean_s;
    for (auto& v : d) v -= mean_s;

    RaschFit result;
    result.lambda = options.lambda;
    result.converged = converged;
    result.iterations = iter;
    result.final_grad_norm = grad_norm;
    for (int m = 0; m < ns; ++m) result.abilities[outcomes.solvers[m]] = s[m];
    for (int p = 0; p < np; ++p) result.difficulties[outcomes.problems[p]] = d[p];
    return result;
}

std::map<std::string, double> to_solver_rating(const RaschFit& fit, const EloScale& scale) {
    auto anchor = fit.abilities.find(scale.anchor_model);
    if (anchor == fit.abilities.end())
        throw ConfigError("anchor model '" + scale.anchor_model + "' missing from fit");
    std::map<std::string, double> ratings;
    for (const auto& [name, s] : fit.abilities)
        ratings[name] = scale.anchor_rating + scale.c_elo * (s - anchor->second);
    return ratings;
}

std::optional<double> author_rating(const RaschFit& fit,
                                    const std::vector<AuthoredProblem>& authored,
                                    const EloScale& scale, double cap_fallback) {
    auto anchor = fit.abilities.find(scale.anchor_model);
    if (anchor == fit.abilities.end())
        throw ConfigError("anchor model '" + scale.anchor_model + "' missing from fit");

    double correct_sum = 0.0, correct_w = 0.0, total_w = 0.0;
    for (const auto& ap : authored) {
        auto it = fit.difficulties.find(ap.id);
        if (it == fit.difficulties.end()) continue;
        total_w += ap.weight;
        if (ap.gold_correct) {
            correct_sum += ap.weight * it->second;
            correct_w += ap.weight;
        }
    }
    if (total_w == 0.0) return std::nullopt;
    double cap = correct_w > 0 ? correct_sum / correct_w : cap_fallback;

    double sum = 0.0;
    for (const auto& ap : authored) {
        auto it = fit.difficulties.find(ap.id);
        if (it == fit.difficulties.end()) continue;
        double eff = ap.gold_correct ? it->second : std::min(it->second, cap);
        sum += ap.weight * (scale.anchor_rating + scale.c_elo * (eff - anchor->second));
    }
    return sum / total_w;
}

std::optional<double> composite(double solve, std::optional<double> author, double w_solve,
                                double w_author) {
    if (w_solve < 0 || w_author < 0 || std::abs(w_solve + w_author - 1.0) > 1e-12)
        throw ConfigError("composite weights must be nonnegative and sum to 1");
    if (!author) return std::nullopt;
    return w_solve * solve + w_author * *author;
}

std::vector<RatingRow> compute_ratings(const RaschFit& fit, const std::vector<Problem>& problems,
                                       const EloScale& scale, double w_solve, double w_author,
                                       const std::map<std::string, double>& problem_weights) {
    auto solver_ratings = to_solver_rating(fit, scale);

    std::map<std::string, std::vector<AuthoredProblem>> authored;
    double global_diff_sum = 0.0, global_diff_w = 0.0;
    for (const auto& p : problems) {
        if (p.validity == Validity::invalid) continue;
        auto it = fit.difficulties.find(p.id);
        if (it == fit.difficulties.end()) continue;
        double w = 1.0;
        if (!problem_weights.empty()) {
            auto wi = problem_weights.find(p.id);
            w = wi == problem_weights.end() ? 0.0 : wi->second;
            if (w == 0.0) continue;
        }
        authored[p.author].push_back({p.id, !p.gold_overridden, w});
        global_diff_sum += w * it->second;
        global_diff_w += w;
    }
    double cap_fallback = global_diff_w > 0 ? global_diff_sum / global_diff_w : 0.0;

    std::vector<RatingRow> rows;
    for (const auto& [model, solve] : solver_ratings) {
        RatingRow row;
        row.model = model;
        row.solve_rating = solve;
        auto ai = authored.find(model);
        if (ai != authored.end()) {
            row.author_rating = author_rating(fit, ai->second, scale, cap_fallback);
            for (const auto& ap : ai->second) {
                ++row.problems_authored_valid;
                if (ap.gold_correct) ++row.gold_correct_count;
            }
        }
        row.composite = composite(solve, row.author_rating, w_solve, w_author);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace arena::rasch
