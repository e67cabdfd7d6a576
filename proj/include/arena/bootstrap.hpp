#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "arena/rasch.hpp"
#include "arena/types.hpp"

namespace arena::boot {

struct BootstrapSpec {
    int iterations = 10000;
    double alpha = 0.025;  // tail mass per side
    std::uint64_t seed = 0;
};

struct IntervalRow {
    std::string model;
    std::string axis;  // solve | author | composite
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

// Linear-interpolated empirical quantile (the numpy default convention).
double quantile_linear(std::vector<double> values, double q);

// Samples |P_author| problems uniformly with replacement from each author's
// valid pool; per-author counts are preserved exactly. Returns multiplicity
// per problem id.
std::map<std::string, double> stratified_resample(const std::vector<Problem>& problems,
                                                  std::mt19937_64& rng);

struct RankConfig {
    rasch::EloScale scale;
    double w_solve = 0.5;
    double w_author = 0.5;
    rasch::FitOptions fit_options;
};

// Stratified bootstrap over problems: each resample restricts O to the
// resampled multiset (a problem drawn k times contributes its rows with
// weight k), refits, and recomputes all three ratings. Resample i depends
// only on (spec.seed, i), so results are independent of evaluation order
// and thread count. Failed refits are dropped and counted; more than 1%
// dropped is a bootstrap error.
std::vector<IntervalRow> bootstrap_ci(const OutcomeMatrix& outcomes,
                                      const std::vector<Problem>& problems,
                                      const BootstrapSpec& spec, const RankConfig& config,
                                      bool parallel = true);

// Serial reference path, kept for testing the OpenMP kernel against.
std::vector<IntervalRow> bootstrap_ci_serial(const OutcomeMatrix& outcomes,
                                             const std::vector<Problem>& problems,
                                             const BootstrapSpec& spec, const RankConfig& config);

struct RankRange {
    int best = 0;
    int worst = 0;
};

// Worst-case rank ranges from composite intervals:
//   best(m)  = 1 + |{j != m : lower_j > upper_m}|
//   worst(m) = 1 + |{j != m : upper_j > lower_m}|
std::map<std::string, RankRange> rank_ranges(const std::vector<IntervalRow>& composite_intervals);

}  // namespace arena::boot
