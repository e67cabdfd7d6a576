#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "arena/store.hpp"
#include "doctest.h"

using namespace arena;
using namespace arena::store;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("arena-store-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

RunManifest sample_manifest() {
    RunManifest m;
    ParticipantSpec a;
    a.id.name = "alpha";
    a.kind = "synthetic";
    a.synthetic.latent_ability = 1.5;
    a.synthetic.seed = 4;
    ParticipantSpec b;
    b.id.name = "beta";
    b.kind = "endpoint";
    b.endpoint.base_url = "https://api.example.com/v7";
    b.endpoint.auth_env = "BETA_KEY";
    m.models = {a, b};
    m.anchor_model = "alpha";
    m.problems_per_model = 5;
    m.seed = 99;
    return m;
}

Problem sample_problem() {
    Problem p;
    p.id = "alpha-p000";
    p.author = "alpha";
    p.domain = {"Analysis", "real analysis"};
    p.statement = "Compute 2 + 2.";
    p.gold = "4";
    p.validity = Validity::valid;
    p.provenance.stages_used = 3;
    p.provenance.draft_statement = "Compute 1 + 1.";
    p.provenance.draft_gold = "2";
    p.provenance.meta_prompt = MetaPrompt{"alpha", {"Analysis", "real analysis"}, "be hard"};
    p.provenance.amplification_history = {{"Compute 2 + 2.", "4"}};
    return p;
}

}  // namespace

TEST_CASE("manifest round-trips through JSON including endpoint fields") {
    TempDir dir;
    RunManifest m = sample_manifest();
    save_manifest(m, dir.path / "m.json");
    RunManifest r = load_manifest(dir.path / "m.json");
    CHECK(r.models.size() == 2);
    CHECK(r.models[0].id.name == "alpha");
    CHECK(r.models[0].synthetic.latent_ability == 1.5);
    CHECK(r.models[1].endpoint.base_url == "https://api.example.com/v7");
    CHECK(r.anchor_model == "alpha");
    CHECK(r.seed == 99);
    CHECK(manifest_hash(r) == manifest_hash(m));

    // the hash is sensitive to any manifest change
    r.seed = 100;
    CHECK(manifest_hash(r) != manifest_hash(m));
}

TEST_CASE("invalid manifests are configuration errors") {
    CHECK_THROWS_AS(manifest_from_json("{ not json"), ConfigError);
    CHECK_THROWS_AS(manifest_from_json("{}"), ConfigError);
    CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), ConfigError);
}

TEST_CASE("problem artifacts round-trip with provenance intact") {
    TempDir dir;
    std::vector<Problem> problems = {sample_problem()};
    save_problems(problems, "cafe0123", dir.path / "problems.jsonl");
    auto r = load_problems(dir.path / "problems.jsonl", "cafe0123");
    REQUIRE(r.size() == 1);
    CHECK(r[0].id == problems[0].id);
    CHECK(r[0].gold == "4");
    CHECK(r[0].validity == Validity::valid);
    REQUIRE(r[0].provenance.meta_prompt.has_value());
    CHECK(r[0].provenance.meta_prompt->text == "be hard");
    REQUIRE(r[0].provenance.amplification_history.size() == 1);
    CHECK(r[0].provenance.amplification_history[0].gold == "4");
}

TEST_CASE("records, verdicts, truths, and fit round-trip") {
    TempDir dir;
    std::vector<SolveRecord> recs = {{"beta", "alpha-p000", "4", "trace text", 1, false},
                                     {"gamma", "alpha-p000", "oops", "", 0, true}};
    save_records(recs, "h", dir.path / "r.jsonl");
    auto r2 = load_records(dir.path / "r.jsonl", "h");
    REQUIRE(r2.size() == 2);
    CHECK(r2[1].parse_failure);

    verify::Verdict v;
    v.problem = "alpha-p000";
    v.backbone = "stub-majority";
    v.valid = 1;
    v.selected = "4";
    v.samples = 3;
    save_verdicts({v}, "h", dir.path / "v.jsonl");
    auto v2 = load_verdicts(dir.path / "v.jsonl", "h");
    REQUIRE(v2.size() == 1);
    CHECK(*v2[0].selected == "4");
    CHECK(v2[0].samples == 3);

    save_truths({{"alpha-p000", 0.35, "4"}}, "h", dir.path / "t.jsonl");
    auto t2 = load_truths(dir.path / "t.jsonl", "h");
    CHECK(t2.at(0).latent_difficulty == 0.35);

    rasch::RaschFit f;
    f.abilities = {{"alpha", 0.5}, {"beta", -0.5}};
    f.difficulties = {{"alpha-p000", 0.25}};
    f.lambda = 0.01;
    f.converged = true;
    f.iterations = 12;
    f.final_grad_norm = 3e-9;
    save_fit(f, "h", dir.path / "f.json");
    auto f2 = load_fit(dir.path / "f.json", "h");
    CHECK(f2.abilities == f.abilities);
    CHECK(f2.difficulties == f.difficulties);
    CHECK(f2.iterations == 12);
}

TEST_CASE("loads fail loudly on corruption") {
    TempDir dir;
    save_problems({sample_problem()}, "deadbeef", dir.path / "p.jsonl");

    SUBCASE("hash mismatch is an integrity error") {
        CHECK_THROWS_AS(load_problems(dir.path / "p.jsonl", "0000beef"), IntegrityError);
    }
    SUBCASE("truncated line reports its line number") {
        std::string text;
        {
            std::ifstream in(dir.path / "p.jsonl");
            std::ostringstream buf;
            buf << in.rdbuf();
            text = buf.str();
        }
        std::ofstream out(dir.path / "p.jsonl", std::ios::trunc);
        out << text.substr(0, text.size() - 20) << "\n";
        out.close();
        try {
            load_problems(dir.path / "p.jsonl", "deadbeef");
            FAIL("expected LoadError");
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("wrong schema name is a load error") {
        save_records({}, "deadbeef", dir.path / "r.jsonl");
        CHECK_THROWS_AS(load_problems(dir.path / "r.jsonl", "deadbeef"), LoadError);
    }
    SUBCASE("empty file is a load error") {
        std::ofstream(dir.path / "empty.jsonl").close();
        CHECK_THROWS_AS(load_problems(dir.path / "empty.jsonl", "x"), LoadError);
    }
    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_problems(dir.path / "ghost.jsonl", "x"), IoError);
    }
}

TEST_CASE("report round-trip and leaderboard ordering") {
    TempDir dir;
    RunReport rep;
    rasch::RatingRow top{"alpha", 2000.0, 1800.0, 1900.0, 10, 9};
    rasch::RatingRow mid{"beta", 1500.0, 1500.0, 1500.0, 10, 10};
    rasch::RatingRow noauthor{"gamma", 1700.0, std::nullopt, std::nullopt, 0, 0};
    rep.rows = {top, mid, noauthor};
    rep.intervals = {{"alpha", "composite", 1900.0, 1850.2, 1949.8},
                     {"beta", "composite", 1500.0, 1450.0, 1550.0}};
    rep.ranges = {{"alpha", {1, 1}}, {"beta", {2, 2}}};
    rep.total_problems = 30;
    rep.valid_problems = 20;
    rep.observations = 40;

    save_report(rep, "h", dir.path / "report.json");
    RunReport r2 = load_report(dir.path / "report.json", "h");
    CHECK(r2.rows.size() == 3);
    CHECK(r2.intervals.size() == 2);
    CHECK(r2.ranges.at("beta").worst == 2);
    CHECK(r2.valid_problems == 20);

    auto rows = leaderboard_rows(r2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].model == "alpha");
    CHECK(rows[0].rank == 1);
    CHECK(rows[1].model == "beta");
    CHECK(rows[2].model == "gamma");  // no composite: sorted after rated models
    REQUIRE(rows[0].ci.has_value());
    CHECK(rows[0].ci->first == 1850.2);

    export_leaderboard(rows, "markdown", dir.path / "lb.md");
    export_leaderboard(rows, "json", dir.path / "lb.json");
    std::ifstream md(dir.path / "lb.md");
    std::string all((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
    CHECK(all.find("| 1 | alpha | 2000 | 1800 | 1900 | [1850, 1950] | 1-1 |") !=
          std::string::npos);
    CHECK(all.find("| 3 | gamma | 1700 | - | - | - | - |") != std::string::npos);

    // byte-identical on re-export
    export_leaderboard(rows, "markdown", dir.path / "lb2.md");
    std::ifstream md2(dir.path / "lb2.md");
    std::string all2((std::istreambuf_iterator<char>(md2)), std::istreambuf_iterator<char>());
    CHECK(all == all2);

    CHECK_THROWS_AS(export_leaderboard(rows, "yaml", dir.path / "lb.yaml"), ConfigError);
}

TEST_CASE("markdown rounding is half-to-even") {
    TempDir dir;
    std::vector<LeaderboardRow> rows(1);
    rows[0].rank = 1;
    rows[0].model = "m";
    rows[0].solve = 1500.5;
    rows[0].author = 1501.5;
    rows[0].composite = 1501.0;
    export_leaderboard(rows, "markdown", dir.path / "lb.md");
    std::ifstream md(dir.path / "lb.md");
    std::string all((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
    CHECK(all.find("| 1 | m | 1500 | 1502 | 1501 | - | - |") != std::string::npos);
}
