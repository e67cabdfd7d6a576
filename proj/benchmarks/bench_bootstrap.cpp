// Times the OpenMP bootstrap kernel against the serial reference on a
// synthetic arena and checks they produce identical intervals.
#include <chrono>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "arena/agents.hpp"
#include "arena/bootstrap.hpp"
#include "arena/log.hpp"
#include "arena/rasch.hpp"
#include "arena/types.hpp"

using namespace arena;

namespace {

struct Arena {
    std::vector<Problem> problems;
    std::vector<SolveRecord> records;
};

Arena make_arena(int n_agents, int k, std::uint64_t seed) {
    Arena a;
    auto schedule = plan_domain_schedule(k, full_taxonomy(), seed);
    std::vector<SyntheticParams> params(n_agents);
    std::vector<std::string> names;
    std::vector<agents::GroundTruth> truths;
    for (int i = 0; i < n_agents; ++i) {
        names.push_back("agent" + std::to_string(i));
        params[i].latent_ability = -1.5 + 3.0 * i / (n_agents - 1);
        params[i].authoring_difficulty_spread = 1.0;
        params[i].seed = seed + i;
        auto out = agents::synth_author(names[i], params[i], k, schedule);
        for (auto& p : out.problems) {
            p.validity = Validity::valid;
            a.problems.push_back(std::move(p));
        }
        truths.insert(truths.end(), out.truths.begin(), out.truths.end());
    }
    std::map<std::string, const Problem*> by_id;
    for (const auto& p : a.problems) by_id[p.id] = &p;
    for (const auto& t : truths) {
        const Problem& p = *by_id.at(t.problem);
        for (int s = 0; s < n_agents; ++s) {
            if (names[s] == p.author) continue;
            SolveRecord r;
            r.solver = names[s];
            r.problem = p.id;
            r.answer = agents::synth_solve(params[s], t);
            r.outcome = r.answer == p.gold ? 1 : 0;
            a.records.push_back(std::move(r));
        }
    }
    return a;
}

template <typename F>
double time_once(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    std::ostringstream muted;
    Log::sink() = &muted;

    const int n_agents = argc > 1 ? std::atoi(argv[1]) : 12;
    const int k = argc > 2 ? std::atoi(argv[2]) : 20;
    const int iterations = argc > 3 ? std::atoi(argv[3]) : 2000;

    Arena a = make_arena(n_agents, k, 99);
    OutcomeMatrix m = build_outcome_matrix(a.records, a.problems);
    std::printf("arena: %d agents, %zu problems, %zu observations, B = %d\n", n_agents,
                m.problems.size(), m.entries.size(), iterations);

    boot::BootstrapSpec spec{iterations, 0.025, 4242};
    boot::RankConfig config{rasch::EloScale{rasch::elo_constant(), "agent0", 1500.0}, 0.5, 0.5,
                            rasch::FitOptions{}};

    std::vector<boot::IntervalRow> serial, parallel;
    double t_serial =
        time_once([&] { serial = boot::bootstrap_ci_serial(m, a.problems, spec, config); });
    double t_parallel =
        time_once([&] { parallel = boot::bootstrap_ci(m, a.problems, spec, config, true); });

    bool identical = serial.size() == parallel.size();
    for (std::size_t i = 0; identical && i < serial.size(); ++i)
        identical = serial[i].model == parallel[i].model && serial[i].axis == parallel[i].axis &&
                    serial[i].lower == parallel[i].lower && serial[i].upper == parallel[i].upper;

    std::printf("serial reference : %8.3f s (%.1f resamples/s)\n", t_serial,
                iterations / t_serial);
    std::printf("openmp kernel    : %8.3f s (%.1f resamples/s)\n", t_parallel,
                iterations / t_parallel);
    std::printf("speedup          : %8.2fx\n", t_serial / t_parallel);
    std::printf("intervals match  : %s\n", identical ? "yes (bitwise)" : "NO");
    return identical ? 0 : 1;
}
