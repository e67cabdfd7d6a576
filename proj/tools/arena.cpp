#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "arena/errors.hpp"
#include "arena/round.hpp"
#include "arena/store.hpp"

using namespace arena;

int main(int argc, char** argv) {
    CLI::App app{"Self-play math arena: models author problems, solve each other's, and are "
                 "ranked by a jointly fit ability/difficulty model"};
    app.require_subcommand(1);

    std::string manifest_path, out_dir;
    int bootstrap_iterations = -1;
    long long bootstrap_seed = -1;
    double alpha = -1.0;
    std::string backbone;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest_path, "run manifest (JSON)")->required();
        cmd->add_option("--out", out_dir, "output directory for run artifacts")->required();
    };

    CLI::App* c_generate = app.add_subcommand("generate", "author problems");
    CLI::App* c_solve = app.add_subcommand("solve", "cross-solve the authored problems");
    CLI::App* c_verify = app.add_subcommand("verify", "verify contested problems");
    CLI::App* c_rank = app.add_subcommand("rank", "fit the model and bootstrap intervals");
    CLI::App* c_report = app.add_subcommand("report", "assemble the final report");
    CLI::App* c_simulate = app.add_subcommand("simulate", "run all phases in order");
    CLI::App* c_replay = app.add_subcommand("replay-verify",
                                            "re-verify with another backbone and compare");
    for (CLI::App* cmd : {c_generate, c_solve, c_verify, c_rank, c_report, c_simulate, c_replay})
        add_common(cmd);
    for (CLI::App* cmd : {c_rank, c_simulate}) {
        cmd->add_option("--bootstrap-iterations", bootstrap_iterations,
                        "override manifest bootstrap iteration count");
        cmd->add_option("--bootstrap-seed", bootstrap_seed, "override manifest seed");
        cmd->add_option("--alpha", alpha, "override per-side tail mass of the intervals");
    }
    c_replay->add_option("--backbone", backbone,
                         "verifier backbone to replay with (default: manifest backbone)");

    CLI11_PARSE(app, argc, argv);

    try {
        RunManifest manifest = store::load_manifest(manifest_path);
        if (bootstrap_iterations > 0) manifest.bootstrap_iterations = bootstrap_iterations;
        if (bootstrap_seed >= 0) manifest.seed = static_cast<std::uint64_t>(bootstrap_seed);
        if (alpha > 0.0) manifest.alpha = alpha;
        round::RoundContext ctx = round::RoundContext::open(manifest, out_dir);

        if (c_generate->parsed()) {
            round::run_generate(ctx);
        } else if (c_solve->parsed()) {
            round::run_solve(ctx);
        } else if (c_verify->parsed()) {
            round::run_verify(ctx);
        } else if (c_rank->parsed()) {
            round::run_rank(ctx);
        } else if (c_report->parsed()) {
            round::run_report(ctx);
        } else if (c_simulate->parsed()) {
            round::run_round(ctx);
        } else if (c_replay->parsed()) {
            round::replay_verify(ctx, backbone.empty() ? manifest.verifier_backbone : backbone);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
