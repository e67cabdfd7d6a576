#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arena/types.hpp"

namespace arena::rasch {

// sigma(s - d): probability of a correct response.
inline double predict(double s, double d) { return 1.0 / (1.0 + std::exp(-(s - d))); }

inline double elo_constant() { return 400.0 / std::log(10.0); }

struct EloScale {
    double c_elo = elo_constant();
    std::string anchor_model;
    double anchor_rating = 1500.0;
};

struct RaschFit {
    std::map<std::string, double> abilities;     // model -> s (logits)
    std::map<std::string, double> difficulties;  // problem -> d (logits)
    double lambda = 0.0;
    bool converged = false;
    int iterations = 0;
    double final_grad_norm = 0.0;
};

struct FitOptions {
    double lambda = 0.01;
    double tolerance = 1e-8;
    int max_iterations = 500;
    std::uint64_t seed = 0;  // recorded only; zero initialization is deterministic
};

// Regularized Rasch log-likelihood (log-sum-exp stabilized):
//   sum over O of [y log sigma(s-d) + (1-y) log(1-sigma(s-d))] - lambda sum d^2
double log_likelihood(const RaschFit& fit, const OutcomeMatrix& outcomes);

// Maximizes the regularized likelihood by alternating damped-Newton
// coordinate updates from zero initialization (or a warm start). Abilities
// are centered to mean zero (difficulties shifted identically, so every
// s - d is preserved). lambda = 0 with an all-correct or all-wrong problem
// raises DivergenceError naming the problem; non-convergence raises FitError.
RaschFit fit(const OutcomeMatrix& outcomes, const FitOptions& options,
             const RaschFit* warm_start = nullptr);

// Affine map to rating points; the anchor model lands exactly on
// anchor_rating. Missing anchor is a configuration error.
std::map<std::string, double> to_solver_rating(const RaschFit& fit, const EloScale& scale);

struct AuthoredProblem {
    std::string id;
    bool gold_correct = true;  // gold never overridden by the verifier
    double weight = 1.0;       // multiplicity under resampling
};

// Mean rating-scaled difficulty of the author's valid problems, with
// gold-incorrect problems capped at min(d_p, mean difficulty of the
// author's gold-correct problems). Difficulties are mapped through the same
// affine transform as abilities. Returns nullopt when the author has no
// valid problems. cap_fallback supplies the cap when the author has zero
// gold-correct problems (the global mean difficulty of all valid problems).
std::optional<double> author_rating(const RaschFit& fit,
                                    const std::vector<AuthoredProblem>& authored,
                                    const EloScale& scale, double cap_fallback);

// w_solve * solve + w_author * author; absent author rating yields nullopt.
std::optional<double> composite(double solve, std::optional<double> author, double w_solve,
                                double w_author);

struct RatingRow {
    std::string model;
    double solve_rating = 0.0;
    std::optional<double> author_rating;
    std::optional<double> composite;
    int problems_authored_valid = 0;
    int gold_correct_count = 0;
};

// Full rating computation for one fit. `problem_weights` (empty = all 1)
// carries resample multiplicities keyed by problem id.
std::vector<RatingRow> compute_ratings(const RaschFit& fit, const std::vector<Problem>& problems,
                                       const EloScale& scale, double w_solve, double w_author,
                                       const std::map<std::string, double>& problem_weights = {});

}  // namespace arena::rasch
