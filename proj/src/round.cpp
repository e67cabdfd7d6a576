#include "arena/round.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "arena/agents.hpp"
#include "arena/bootstrap.hpp"
#include "arena/errors.hpp"
#include "arena/expr.hpp"
#include "arena/genpipe.hpp"
#include "arena/log.hpp"
#include "arena/rasch.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace arena::round {

namespace {

namespace fs = std::filesystem;

fs::path checkpoint(const RoundContext& ctx, const char* file) { return ctx.out / file; }

void require_checkpoint(const RoundContext& ctx, const char* phase, const char* file,
                        const char* producer) {
    fs::path p = checkpoint(ctx, file);
    if (!fs::exists(p))
        throw PhaseError(phase, std::string("missing input; run '") + producer + "' first",
                         p.string());
}

std::unique_ptr<agents::ChatAgent> make_endpoint_agent(const ParticipantSpec& spec) {
    return std::make_unique<agents::EndpointAgent>(spec.id.name, spec.endpoint);
}

const ParticipantSpec* find_participant(const RunManifest& m, const std::string& name) {
    for (const auto& p : m.models)
        if (p.id.name == name) return &p;
    return nullptr;
}

std::unique_ptr<agents::ChatAgent> make_backbone(const RunManifest& m, const std::string& name) {
    if (name == "stub-majority") return std::make_unique<verify::MajorityStubVerifier>();
    const ParticipantSpec* spec = find_participant(m, name);
    if (!spec) throw ConfigError("verifier backbone '" + name + "' is not a configured model");
    if (spec->kind != "endpoint")
        throw ConfigError("verifier backbone '" + name + "' must be an endpoint model");
    return make_endpoint_agent(*spec);
}

rasch::EloScale elo_scale(const RunManifest& m) {
    return {rasch::elo_constant(), m.anchor_model, m.anchor_rating};
}

std::vector<rasch::RatingRow> sorted_ratings(const rasch::RaschFit& fit,
                                             const std::vector<Problem>& problems,
                                             const RunManifest& m) {
    auto rows = rasch::compute_ratings(fit, problems, elo_scale(m), m.w_solve, m.w_author);
    std::sort(rows.begin(), rows.end(), [](const rasch::RatingRow& a, const rasch::RatingRow& b) {
        bool ac = a.composite.has_value(), bc = b.composite.has_value();
        if (ac != bc) return ac;
        if (ac && *a.composite != *b.composite) return *a.composite > *b.composite;
        if (a.solve_rating != b.solve_rating) return a.solve_rating > b.solve_rating;
        return a.model < b.model;
    });
    return rows;
}

verify::Verdict run_one_verification(const Problem& problem,
                                     const std::vector<SolveRecord>& records,
                                     agents::ChatAgent& backbone, int samples) {
    verify::CandidateSet candidates = verify::build_candidates(problem, records);
    if (samples <= 1) return verify::verify_with_escalation(problem, candidates, backbone);
    return verify::verify(problem, candidates, backbone, samples);
}

}  // namespace

RoundContext RoundContext::open(const RunManifest& manifest, const fs::path& out) {
    manifest.validate();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string());
    return {manifest, out, store::manifest_hash(manifest)};
}

std::string solve_prompt(const Problem& problem) {
    return "Solve the following problem. Work through it, then give the final answer as a "
           "single scalar mathematical expression on its own line.\n\n" +
           problem.statement +
           "\n\nEnd your reply with exactly:\nANSWER: <the scalar answer expression>\n";
}

std::string extract_answer(const std::string& completion) {
    auto pos = completion.rfind("ANSWER:");
    std::string tail = pos == std::string::npos ? completion : completion.substr(pos + 7);
    auto nl = tail.find('\n');
    if (pos != std::string::npos && nl != std::string::npos) tail = tail.substr(0, nl);
    std::size_t b = tail.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = tail.find_last_not_of(" \t\r\n");
    return tail.substr(b, e - b + 1);
}

void run_generate(const RoundContext& ctx) {
    const RunManifest& m = ctx.manifest;
    std::vector<DomainTag> taxonomy = m.domains.empty() ? full_taxonomy() : m.domains;
    gen::PromptTemplates templates = gen::PromptTemplates::defaults();

    std::vector<Problem> problems;
    std::vector<agents::GroundTruth> truths;
    for (const auto& spec : m.models) {
        if (!spec.id.is_author) continue;
        std::vector<DomainTag> schedule = plan_domain_schedule(
            m.problems_per_model, taxonomy, m.seed ^ agents::fnv1a64(spec.id.name));
        if (spec.kind == "synthetic") {
            agents::SyntheticAuthoring out =
                agents::synth_author(spec.id.name, spec.synthetic, m.problems_per_model, schedule);
            problems.insert(problems.end(), out.problems.begin(), out.problems.end());
            truths.insert(truths.end(), out.truths.begin(), out.truths.end());
        } else {
            auto agent = make_endpoint_agent(spec);
            for (int i = 0; i < m.problems_per_model; ++i) {
                char id[16];
                std::snprintf(id, sizeof(id), "-p%03d", i);
                problems.push_back(gen::author_problem(*agent, schedule[i], m.pipeline_stages,
                                                       m.amplification_rounds, templates,
                                                       spec.id.name + id));
            }
        }
        Log::info("generate: ", spec.id.name, " authored ", m.problems_per_model, " problems");
    }
    store::save_manifest(m, checkpoint(ctx, "manifest.json"));
    store::save_problems(problems, ctx.run_hash, checkpoint(ctx, "problems.jsonl"));
    store::save_truths(truths, ctx.run_hash, checkpoint(ctx, "truths.jsonl"));
}

void run_solve(const RoundContext& ctx) {
    const RunManifest& m = ctx.manifest;
    require_checkpoint(ctx, "solve", "problems.jsonl", "generate");
    auto problems = store::load_problems(checkpoint(ctx, "problems.jsonl"), ctx.run_hash);

    std::map<std::string, agents::GroundTruth> truths;
    if (fs::exists(checkpoint(ctx, "truths.jsonl")))
        for (auto& t : store::load_truths(checkpoint(ctx, "truths.jsonl"), ctx.run_hash))
            truths[t.problem] = t;

    struct Task {
        const ParticipantSpec* solver;
        const Problem* problem;
    };
    std::vector<Task> tasks;
    bool all_synthetic = true;
    for (const auto& spec : m.models) {
        if (!spec.id.is_solver) continue;
        if (spec.kind != "synthetic") all_synthetic = false;
        for (const auto& p : problems) {
            if (p.author == spec.id.name) continue;  // never solve your own problem
            tasks.push_back({&spec, &p});
        }
    }

    std::map<std::string, std::unique_ptr<agents::ChatAgent>> endpoint_agents;
    for (const auto& spec : m.models)
        if (spec.id.is_solver && spec.kind == "endpoint")
            endpoint_agents[spec.id.name] = make_endpoint_agent(spec);

    std::vector<SolveRecord> records(tasks.size());
    std::exception_ptr failure;
    auto run_task = [&](std::size_t i) {
        const Task& t = tasks[i];
        SolveRecord r;
        r.solver = t.solver->id.name;
        r.problem = t.problem->id;
        if (t.solver->kind == "synthetic") {
            auto it = truths.find(t.problem->id);
            // problems without recorded latent difficulty behave as d* = 0
            agents::GroundTruth truth = it != truths.end()
                                            ? it->second
                                            : agents::GroundTruth{t.problem->id, 0.0,
                                                                  t.problem->gold};
            r.answer = agents::synth_solve(t.solver->synthetic, truth);
        } else {
            std::string completion = endpoint_agents.at(r.solver)->complete(
                solve_prompt(*t.problem));
            r.trace = completion;
            r.answer = extract_answer(completion);
        }
        expr::JudgeResult res = expr::judge(r.answer, t.problem->gold);
        r.outcome = res.outcome;
        r.parse_failure = res.parse_failure;
        records[i] = std::move(r);
    };

    // keyed randomness makes results independent of dispatch order, so the
    // parallel path is byte-identical to the serial one
    if (all_synthetic && m.parallelism > 1) {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            try {
                run_task(i);
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    }

    store::save_records(records, ctx.run_hash, checkpoint(ctx, "records.jsonl"));
    Log::info("solve: ", records.size(), " records");
}

void run_verify(const RoundContext& ctx) {
    const RunManifest& m = ctx.manifest;
    require_checkpoint(ctx, "verify", "problems.jsonl", "generate");
    require_checkpoint(ctx, "verify", "records.jsonl", "solve");
    auto problems = store::load_problems(checkpoint(ctx, "problems.jsonl"), ctx.run_hash);
    auto records = store::load_records(checkpoint(ctx, "records.jsonl"), ctx.run_hash);

    std::map<std::string, std::vector<SolveRecord>> by_problem;
    for (const auto& r : records) by_problem[r.problem].push_back(r);

    auto backbone = make_backbone(m, m.verifier_backbone);
    std::vector<verify::Verdict> verdicts;
    int invalidated = 0, overridden = 0;
    for (auto& p : problems) {
        const auto& rs = by_problem[p.id];
        if (!verify::needs_verification(p, rs)) {
            p.validity = Validity::valid;  // unanimous solves skip verification
            continue;
        }
        verify::Verdict v = run_one_verification(p, rs, *backbone, m.verifier_samples);
        std::vector<SolveRecord> updated = rs;
        verify::apply_verdict(p, v, updated);
        if (p.validity == Validity::invalid) ++invalidated;
        if (p.gold_overridden) ++overridden;
        by_problem[p.id] = std::move(updated);
        verdicts.push_back(std::move(v));
    }

    std::vector<SolveRecord> out_records;
    for (const auto& p : problems)
        for (const auto& r : by_problem[p.id]) out_records.push_back(r);

    store::save_verdicts(verdicts, ctx.run_hash, checkpoint(ctx, "verdicts.jsonl"));
    store::save_problems(problems, ctx.run_hash, checkpoint(ctx, "problems_verified.jsonl"));
    store::save_records(out_records, ctx.run_hash, checkpoint(ctx, "records_verified.jsonl"));
    Log::info("verify: ", verdicts.size(), " verdicts, ", invalidated, " invalidated, ",
              overridden, " golds overridden");
}

void run_rank(const RoundContext& ctx) {
    const RunManifest& m = ctx.manifest;
    require_checkpoint(ctx, "rank", "problems_verified.jsonl", "verify");
    require_checkpoint(ctx, "rank", "records_verified.jsonl", "verify");
    auto problems = store::load_problems(checkpoint(ctx, "problems_verified.jsonl"), ctx.run_hash);
    auto records = store::load_records(checkpoint(ctx, "records_verified.jsonl"), ctx.run_hash);

    OutcomeMatrix outcomes = build_outcome_matrix(records, problems);
    rasch::FitOptions fit_opts;
    fit_opts.lambda = m.lambda;
    fit_opts.seed = m.seed;
    rasch::RaschFit fit = rasch::fit(outcomes, fit_opts);
    store::save_fit(fit, ctx.run_hash, checkpoint(ctx, "fit.json"));

    boot::BootstrapSpec spec{m.bootstrap_iterations, m.alpha, m.seed};
    boot::RankConfig config{elo_scale(m), m.w_solve, m.w_author, fit_opts};
    auto intervals = boot::bootstrap_ci(outcomes, problems, spec, config, m.parallelism > 1);
    store::save_intervals(intervals, ctx.run_hash, checkpoint(ctx, "intervals.json"));

    std::vector<boot::IntervalRow> composite;
    for (const auto& iv : intervals)
        if (iv.axis == "composite") composite.push_back(iv);
    store::save_ranges(boot::rank_ranges(composite), ctx.run_hash, checkpoint(ctx, "ranges.json"));
    Log::info("rank: fit ", fit.iterations, " sweeps, grad norm ", fit.final_grad_norm, ", ",
              intervals.size(), " intervals");
}

store::RunReport run_report(const RoundContext& ctx) {
    const RunManifest& m = ctx.manifest;
    require_checkpoint(ctx, "report", "problems_verified.jsonl", "verify");
    require_checkpoint(ctx, "report", "records_verified.jsonl", "verify");
    require_checkpoint(ctx, "report", "fit.json", "rank");
    require_checkpoint(ctx, "report", "intervals.json", "rank");
    require_checkpoint(ctx, "report", "ranges.json", "rank");
    auto problems = store::load_problems(checkpoint(ctx, "problems_verified.jsonl"), ctx.run_hash);
    auto records = store::load_records(checkpoint(ctx, "records_verified.jsonl"), ctx.run_hash);
    auto fit = store::load_fit(checkpoint(ctx, "fit.json"), ctx.run_hash);

    store::RunReport report;
    report.rows = sorted_ratings(fit, problems, m);
    {  // reuse the saved intervals/ranges rather than refitting
        std::ifstream in(checkpoint(ctx, "intervals.json"));
        nlohmann::json doc;
        in >> doc;
        for (const auto& j : doc.at("payload"))
            report.intervals.push_back({j.at("model"), j.at("axis"), j.at("point"), j.at("lower"),
                                        j.at("upper")});
        std::ifstream in2(checkpoint(ctx, "ranges.json"));
        nlohmann::json doc2;
        in2 >> doc2;
        for (const auto& [model, j] : doc2.at("payload").items())
            report.ranges[model] = {j.at("best").get<int>(), j.at("worst").get<int>()};
    }
    report.total_problems = static_cast<int>(problems.size());
    for (const auto& p : problems)
        if (p.validity == Validity::valid) ++report.valid_problems;
    report.observations = static_cast<int>(build_outcome_matrix(records, problems).size());

    store::save_report(report, ctx.run_hash, checkpoint(ctx, "report.json"));
    auto rows = store::leaderboard_rows(report);
    store::export_leaderboard(rows, "markdown", checkpoint(ctx, "leaderboard.md"));
    store::export_leaderboard(rows, "json", checkpoint(ctx, "leaderboard.json"));
    Log::info("report: ", report.rows.size(), " models, ", report.valid_problems, "/",
              report.total_problems, " valid problems, ", report.observations, " observations");
    return report;
}

store::RunReport run_round(const RoundContext& ctx) {
    run_generate(ctx);
    run_solve(ctx);
    run_verify(ctx);
    run_rank(ctx);
    return run_report(ctx);
}

verify::AgreementReport replay_verify(const RoundContext& ctx, const std::string& backbone_name) {
    require_checkpoint(ctx, "replay-verify", "problems.jsonl", "generate");
    require_checkpoint(ctx, "replay-verify", "records.jsonl", "solve");
    require_checkpoint(ctx, "replay-verify", "verdicts.jsonl", "verify");
    auto problems = store::load_problems(checkpoint(ctx, "problems.jsonl"), ctx.run_hash);
    auto records = store::load_records(checkpoint(ctx, "records.jsonl"), ctx.run_hash);
    auto stored = store::load_verdicts(checkpoint(ctx, "verdicts.jsonl"), ctx.run_hash);

    std::map<std::string, const Problem*> by_id;
    for (const auto& p : problems) by_id[p.id] = &p;
    std::map<std::string, std::vector<SolveRecord>> by_problem;
    for (const auto& r : records) by_problem[r.problem].push_back(r);

    auto backbone = make_backbone(ctx.manifest, backbone_name);
    std::vector<verify::Verdict> replayed;
    for (const auto& v : stored) {
        auto it = by_id.find(v.problem);
        if (it == by_id.end())
            throw DataIntegrityError("verdict for unknown problem '" + v.problem + "'");
        replayed.push_back(run_one_verification(*it->second, by_problem[v.problem], *backbone,
                                                ctx.manifest.verifier_samples));
    }

    verify::AgreementReport rep = verify::compare_backbones(stored, replayed);
    nlohmann::json doc = {{"backbone_a", stored.empty() ? "" : stored.front().backbone},
                          {"backbone_b", backbone_name},
                          {"exclusion_agreement", rep.exclusion_agreement},
                          {"answer_agreement", rep.answer_agreement},
                          {"exclusion_disagreements", rep.exclusion_disagreements},
                          {"answer_disagreements", rep.answer_disagreements}};
    store::write_file_atomic(checkpoint(ctx, "agreement.json"), doc.dump(2) + "\n");
    Log::info("replay-verify: exclusion agreement ", rep.exclusion_agreement,
              ", answer agreement ", rep.answer_agreement);
    return rep;
}

}  // namespace arena::round
