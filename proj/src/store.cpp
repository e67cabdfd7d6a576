#include "arena/store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "arena/errors.hpp"
#include "json.hpp"

namespace arena::store {

using nlohmann::json;

namespace {

constexpr const char* kSchemaVersion = "1";

json domain_to_json(const DomainTag& d) {
    return {{"broad_area", d.broad_area}, {"subfield", d.subfield}};
}

DomainTag domain_from_json(const json& j) {
    return {j.at("broad_area"), j.at("subfield")};
}

json problem_to_json(const Problem& p) {
    json prov = {
        {"draft_statement", p.provenance.draft_statement},
        {"draft_gold", p.provenance.draft_gold},
        {"stages_used", p.provenance.stages_used},
    };
    if (p.provenance.meta_prompt) {
        prov["meta_prompt"] = {{"author", p.provenance.meta_prompt->author},
                               {"domain", domain_to_json(p.provenance.meta_prompt->domain)},
                               {"text", p.provenance.meta_prompt->text}};
    }
    json history = json::array();
    for (const auto& step : p.provenance.amplification_history)
        history.push_back({{"statement", step.statement}, {"gold", step.gold}});
    prov["amplification_history"] = history;

    return {{"id", p.id},
            {"author", p.author},
            {"domain", domain_to_json(p.domain)},
            {"statement", p.statement},
            {"gold", p.gold},
            {"gold_overridden", p.gold_overridden},
            {"validity", validity_name(p.validity)},
            {"stages_used", p.provenance.stages_used},
            {"provenance", prov}};
}

Problem problem_from_json(const json& j) {
    Problem p;
    p.id = j.at("id");
    p.author = j.at("author");
    p.domain = domain_from_json(j.at("domain"));
    p.statement = j.at("statement");
    p.gold = j.at("gold");
    p.gold_overridden = j.at("gold_overridden");
    p.validity = validity_from_name(j.at("validity"));
    const json& prov = j.at("provenance");
    p.provenance.draft_statement = prov.at("draft_statement");
    p.provenance.draft_gold = prov.at("draft_gold");
    p.provenance.stages_used = prov.at("stages_used");
    if (prov.contains("meta_prompt")) {
        MetaPrompt mp;
        mp.author = prov["meta_prompt"].at("author");
        mp.domain = domain_from_json(prov["meta_prompt"].at("domain"));
        mp.text = prov["meta_prompt"].at("text");
        p.provenance.meta_prompt = std::move(mp);
    }
    for (const auto& step : prov.at("amplification_history"))
        p.provenance.amplification_history.push_back({step.at("statement"), step.at("gold")});
    return p;
}

json record_to_json(const SolveRecord& r) {
    return {{"solver", r.solver},   {"problem", r.problem}, {"answer", r.answer},
            {"trace", r.trace},     {"outcome", r.outcome}, {"parse_failure", r.parse_failure}};
}

SolveRecord record_from_json(const json& j) {
    return {j.at("solver"), j.at("problem"), j.at("answer"),
            j.at("trace"),  j.at("outcome"), j.at("parse_failure")};
}

json verdict_to_json(const verify::Verdict& v) {
    json j = {{"problem", v.problem}, {"backbone", v.backbone},   {"v", v.valid},
              {"rationale", v.rationale}, {"samples", v.samples}};
    if (v.selected) j["selected"] = *v.selected;
    return j;
}

verify::Verdict verdict_from_json(const json& j) {
    verify::Verdict v;
    v.problem = j.at("problem");
    v.backbone = j.at("backbone");
    v.valid = j.at("v");
    v.rationale = j.at("rationale");
    v.samples = j.at("samples");
    if (j.contains("selected")) v.selected = j["selected"].get<std::string>();
    return v;
}

json truth_to_json(const agents::GroundTruth& t) {
    return {{"problem", t.problem},
            {"latent_difficulty", t.latent_difficulty},
            {"true_answer", t.true_answer}};
}

agents::GroundTruth truth_from_json(const json& j) {
    return {j.at("problem"), j.at("latent_difficulty"), j.at("true_answer")};
}

void write_jsonl(const std::filesystem::path& file, const std::string& schema,
                 const std::string& run_hash, const std::vector<json>& rows) {
    std::ostringstream out;
    out << json{{"schema", schema + "/" + kSchemaVersion}, {"run_hash", run_hash}}.dump() << '\n';
    for (const auto& row : rows) out << row.dump() << '\n';
    write_file_atomic(file, out.str());
}

std::vector<json> read_jsonl(const std::filesystem::path& file, const std::string& schema,
                             const std::string& expected_hash) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    std::string line;
    int line_no = 0;
    std::vector<json> rows;
    json header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception&) {
            throw LoadError(file.string() + ": malformed JSON at line " + std::to_string(line_no));
        }
        if (line_no == 1) {
            header = std::move(j);
            std::string got_schema = header.value("schema", "");
            if (got_schema != schema + "/" + kSchemaVersion)
                throw LoadError(file.string() + ": schema mismatch in field 'schema' (got '" +
                                got_schema + "', want '" + schema + "/" + kSchemaVersion + "')");
            if (!expected_hash.empty() && header.value("run_hash", "") != expected_hash)
                throw IntegrityError(file.string() + ": run_hash mismatch (artifacts from a "
                                     "different run)");
            continue;
        }
        rows.push_back(std::move(j));
    }
    if (line_no == 0) throw LoadError(file.string() + ": empty artifact (missing header)");
    return rows;
}

void write_json_doc(const std::filesystem::path& file, const std::string& schema,
                    const std::string& run_hash, const json& payload) {
    json doc = {{"schema", schema + "/" + kSchemaVersion}, {"run_hash", run_hash},
                {"payload", payload}};
    write_file_atomic(file, doc.dump(2) + "\n");
}

json read_json_doc(const std::filesystem::path& file, const std::string& schema,
                   const std::string& expected_hash) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception&) {
        throw LoadError(file.string() + ": malformed JSON document");
    }
    std::string got_schema = doc.value("schema", "");
    if (got_schema != schema + "/" + kSchemaVersion)
        throw LoadError(file.string() + ": schema mismatch in field 'schema'");
    if (!expected_hash.empty() && doc.value("run_hash", "") != expected_hash)
        throw IntegrityError(file.string() + ": run_hash mismatch");
    return doc.at("payload");
}

json rating_row_to_json(const rasch::RatingRow& r) {
    json j = {{"model", r.model},
              {"solve_rating", r.solve_rating},
              {"problems_authored_valid", r.problems_authored_valid},
              {"gold_correct_count", r.gold_correct_count}};
    if (r.author_rating) j["author_rating"] = *r.author_rating;
    if (r.composite) j["composite"] = *r.composite;
    return j;
}

rasch::RatingRow rating_row_from_json(const json& j) {
    rasch::RatingRow r;
    r.model = j.at("model");
    r.solve_rating = j.at("solve_rating");
    r.problems_authored_valid = j.at("problems_authored_valid");
    r.gold_correct_count = j.at("gold_correct_count");
    if (j.contains("author_rating")) r.author_rating = j["author_rating"].get<double>();
    if (j.contains("composite")) r.composite = j["composite"].get<double>();
    return r;
}

json interval_to_json(const boot::IntervalRow& iv) {
    return {{"model", iv.model}, {"axis", iv.axis},   {"point", iv.point},
            {"lower", iv.lower}, {"upper", iv.upper}};
}

boot::IntervalRow interval_from_json(const json& j) {
    return {j.at("model"), j.at("axis"), j.at("point"), j.at("lower"), j.at("upper")};
}

long long round_half_even(double x) {
    return static_cast<long long>(std::nearbyint(x));  // FE_TONEAREST is ties-to-even
}

}  // namespace

void write_file_atomic(const std::filesystem::path& file, const std::string& content) {
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, file, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + file.string());
}

std::string manifest_to_json(const RunManifest& m) {
    json models = json::array();
    for (const auto& p : m.models) {
        json j = {{"name", p.id.name},
                  {"kind", p.kind},
                  {"roles",
                   {{"author", p.id.is_author}, {"solver", p.id.is_solver},
                    {"verifier", p.id.is_verifier}}}};
        if (p.kind == "synthetic") {
            j["latent_ability"] = p.synthetic.latent_ability;
            j["authoring_difficulty_mean"] = p.synthetic.authoring_difficulty_mean;
            j["authoring_difficulty_spread"] = p.synthetic.authoring_difficulty_spread;
            j["gold_error_rate"] = p.synthetic.gold_error_rate;
            j["seed"] = p.synthetic.seed;
        } else {
            j["base_url"] = p.endpoint.base_url;
            j["auth_env"] = p.endpoint.auth_env;
            j["temperature"] = p.endpoint.temperature;
            j["max_retries"] = p.endpoint.max_retries;
            j["timeout_seconds"] = p.endpoint.timeout_seconds;
            j["backoff_base_ms"] = p.endpoint.backoff_base_ms;
        }
        models.push_back(std::move(j));
    }
    json domains = json::array();
    for (const auto& d : m.domains) domains.push_back(domain_to_json(d));
    json doc = {{"models", models},
                {"problems_per_model", m.problems_per_model},
                {"domains", domains},
                {"lambda", m.lambda},
                {"anchor_model", m.anchor_model},
                {"anchor_rating", m.anchor_rating},
                {"weights", {{"w_solve", m.w_solve}, {"w_author", m.w_author}}},
                {"bootstrap_iterations", m.bootstrap_iterations},
                {"alpha", m.alpha},
                {"pipeline_stages", m.pipeline_stages},
                {"amplification_rounds", m.amplification_rounds},
                {"seed", m.seed},
                {"parallelism", m.parallelism},
                {"temperature", m.temperature},
                {"verifier_backbone", m.verifier_backbone},
                {"verifier_samples", m.verifier_samples}};
    return doc.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("malformed manifest JSON: " + std::string(e.what()));
    }
    RunManifest m;
    try {
        for (const auto& j : doc.at("models")) {
            ParticipantSpec p;
            p.id.name = j.at("name");
            p.kind = j.at("kind");
            if (j.contains("roles")) {
                p.id.is_author = j["roles"].value("author", true);
                p.id.is_solver = j["roles"].value("solver", true);
                p.id.is_verifier = j["roles"].value("verifier", false);
            }
            if (p.kind == "synthetic") {
                p.synthetic.latent_ability = j.value("latent_ability", 0.0);
                p.synthetic.authoring_difficulty_mean = j.value("authoring_difficulty_mean", 0.0);
                p.synthetic.authoring_difficulty_spread =
                    j.value("authoring_difficulty_spread", 0.0);
                p.synthetic.gold_error_rate = j.value("gold_error_rate", 0.0);
                p.synthetic.seed = j.value("seed", 0ULL);
            } else {
                p.endpoint.base_url = j.value("base_url", "");
                p.endpoint.auth_env = j.value("auth_env", "");
                p.endpoint.temperature = j.value("temperature", 1.0);
                p.endpoint.max_retries = j.value("max_retries", 3);
                p.endpoint.timeout_seconds = j.value("timeout_seconds", 300);
                p.endpoint.backoff_base_ms = j.value("backoff_base_ms", 500);
            }
            m.models.push_back(std::move(p));
        }
        m.problems_per_model = doc.at("problems_per_model");
        if (doc.contains("domains"))
            for (const auto& d : doc["domains"]) m.domains.push_back(domain_from_json(d));
        m.lambda = doc.value("lambda", 0.01);
        m.anchor_model = doc.at("anchor_model");
        m.anchor_rating = doc.value("anchor_rating", 1500.0);
        if (doc.contains("weights")) {
            m.w_solve = doc["weights"].value("w_solve", 0.5);
            m.w_author = doc["weights"].value("w_author", 0.5);
        }
        m.bootstrap_iterations = doc.value("bootstrap_iterations", 10000);
        m.alpha = doc.value("alpha", 0.025);
        m.pipeline_stages = doc.value("pipeline_stages", 3);
        m.amplification_rounds = doc.value("amplification_rounds", 1);
        m.seed = doc.value("seed", 0ULL);
        m.parallelism = doc.value("parallelism", 1);
        m.temperature = doc.value("temperature", 1.0);
        m.verifier_backbone = doc.value("verifier_backbone", "stub-majority");
        m.verifier_samples = doc.value("verifier_samples", 1);
    } catch (const json::exception& e) {
        throw ConfigError("manifest field error: " + std::string(e.what()));
    }
    m.validate();
    return m;
}

RunManifest load_manifest(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open manifest " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& file) {
    write_file_atomic(file, manifest_to_json(manifest));
}

std::string manifest_hash(const RunManifest& manifest) {
    // parallelism is an execution detail: results are identical across
    // thread counts, so it must not change the run identity
    RunManifest normalized = manifest;
    normalized.parallelism = 1;
    std::uint64_t h = agents::fnv1a64(manifest_to_json(normalized));
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_problems(const std::vector<Problem>& problems, const std::string& run_hash,
                   const std::filesystem::path& file) {
    std::vector<json> rows;
    for (const auto& p : problems) rows.push_back(problem_to_json(p));
    write_jsonl(file, "problems", run_hash, rows);
}

std::vector<Problem> load_problems(const std::filesystem::path& file,
                                   const std::string& expected_hash) {
    std::vector<Problem> out;
    for (const auto& j : read_jsonl(file, "problems", expected_hash))
        out.push_back(problem_from_json(j));
    return out;
}

void save_records(const std::vector<SolveRecord>& records, const std::string& run_hash,
                  const std::filesystem::path& file) {
    std::vector<json> rows;
    for (const auto& r : records) rows.push_back(record_to_json(r));
    write_jsonl(file, "records", run_hash, rows);
}

std::vector<SolveRecord> load_records(const std::filesystem::path& file,
                                      const std::string& expected_hash) {
    std::vector<SolveRecord> out;
    for (const auto& j : read_jsonl(file, "records", expected_hash))
        out.push_back(record_from_json(j));
    return out;
}

void save_verdicts(const std::vector<verify::Verdict>& verdicts, const std::string& run_hash,
                   const std::filesystem::path& file) {
    std::vector<json> rows;
    for (const auto& v : verdicts) rows.push_back(verdict_to_json(v));
    write_jsonl(file, "verdicts", run_hash, rows);
}

std::vector<verify::Verdict> load_verdicts(const std::filesystem::path& file,
                                           const std::string& expected_hash) {
    std::vector<verify::Verdict> out;
    for (const auto& j : read_jsonl(file, "verdicts", expected_hash))
        out.push_back(verdict_from_json(j));
    return out;
}

void save_truths(const std::vector<agents::GroundTruth>& truths, const std::string& run_hash,
                 const std::filesystem::path& file) {
    std::vector<json> rows;
    for (const auto& t : truths) rows.push_back(truth_to_json(t));
    write_jsonl(file, "truths", run_hash, rows);
}

std::vector<agents::GroundTruth> load_truths(const std::filesystem::path& file,
                                             const std::string& expected_hash) {
    std::vector<agents::GroundTruth> out;
    for (const auto& j : read_jsonl(file, "truths", expected_hash))
        out.push_back(truth_from_json(j));
    return out;
}

void save_fit(const rasch::RaschFit& fit, const std::string& run_hash,
              const std::filesystem::path& file) {
    json payload = {{"abilities", fit.abilities},
                    {"difficulties", fit.difficulties},
                    {"lambda", fit.lambda},
                    {"converged", fit.converged},
                    {"iterations", fit.iterations},
                    {"final_grad_norm", fit.final_grad_norm}};
    write_json_doc(file, "fit", run_hash, payload);
}

rasch::RaschFit load_fit(const std::filesystem::path& file, const std::string& expected_hash) {
    json payload = read_json_doc(file, "fit", expected_hash);
    rasch::RaschFit fit;
    fit.abilities = payload.at("abilities").get<std::map<std::string, double>>();
    fit.difficulties = payload.at("difficulties").get<std::map<std::string, double>>();
    fit.lambda = payload.at("lambda");
    fit.converged = payload.at("converged");
    fit.iterations = payload.at("iterations");
    fit.final_grad_norm = payload.at("final_grad_norm");
    return fit;
}

void save_report(const RunReport& report, const std::string& run_hash,
                 const std::filesystem::path& file) {
    json rows = json::array();
    for (const auto& r : report.rows) rows.push_back(rating_row_to_json(r));
    json intervals = json::array();
    for (const auto& iv : report.intervals) intervals.push_back(interval_to_json(iv));
    json ranges = json::object();
    for (const auto& [model, r] : report.ranges)
        ranges[model] = {{"best", r.best}, {"worst", r.worst}};
    json payload = {{"rows", rows},
                    {"intervals", intervals},
                    {"ranges", ranges},
                    {"total_problems", report.total_problems},
                    {"valid_problems", report.valid_problems},
                    {"observations", report.observations}};
    write_json_doc(file, "report", run_hash, payload);
}

RunReport load_report(const std::filesystem::path& file, const std::string& expected_hash) {
    json payload = read_json_doc(file, "report", expected_hash);
    RunReport rep;
    for (const auto& j : payload.at("rows")) rep.rows.push_back(rating_row_from_json(j));
    for (const auto& j : payload.at("intervals")) rep.intervals.push_back(interval_from_json(j));
    for (const auto& [model, j] : payload.at("ranges").items())
        rep.ranges[model] = {j.at("best"), j.at("worst")};
    rep.total_problems = payload.at("total_problems");
    rep.valid_problems = payload.at("valid_problems");
    rep.observations = payload.at("observations");
    return rep;
}

void save_intervals(const std::vector<boot::IntervalRow>& intervals, const std::string& run_hash,
                    const std::filesystem::path& file) {
    json payload = json::array();
    for (const auto& iv : intervals) payload.push_back(interval_to_json(iv));
    write_json_doc(file, "intervals", run_hash, payload);
}

void save_ranges(const std::map<std::string, boot::RankRange>& ranges,
                 const std::string& run_hash, const std::filesystem::path& file) {
    json payload = json::object();
    for (const auto& [model, r] : ranges) payload[model] = {{"best", r.best}, {"worst", r.worst}};
    write_json_doc(file, "ranges", run_hash, payload);
}

std::vector<LeaderboardRow> leaderboard_rows(const RunReport& report) {
    std::vector<rasch::RatingRow> sorted = report.rows;
    std::sort(sorted.begin(), sorted.end(),
              [](const rasch::RatingRow& a, const rasch::RatingRow& b) {
                  bool ac = a.composite.has_value(), bc = b.composite.has_value();
                  if (ac != bc) return ac;  // unrated-composite models sink
                  if (ac && *a.composite != *b.composite) return *a.composite > *b.composite;
                  if (a.solve_rating != b.solve_rating) return a.solve_rating > b.solve_rating;
                  return a.model < b.model;
              });
    std::map<std::string, const boot::IntervalRow*> composite_ci;
    for (const auto& iv : report.intervals)
        if (iv.axis == "composite") composite_ci[iv.model] = &iv;

    std::vector<LeaderboardRow> rows;
    int rank = 0;
    for (const auto& r : sorted) {
        LeaderboardRow row;
        row.rank = ++rank;
        row.model = r.model;
        row.solve = r.solve_rating;
        row.author = r.author_rating;
        row.composite = r.composite;
        auto ci = composite_ci.find(r.model);
        if (ci != composite_ci.end()) row.ci = {ci->second->lower, ci->second->upper};
        auto rg = report.ranges.find(r.model);
        if (rg != report.ranges.end()) row.range = rg->second;
        rows.push_back(std::move(row));
    }
    return rows;
}

void export_leaderboard(const std::vector<LeaderboardRow>& rows, const std::string& format,
                        const std::filesystem::path& file) {
    if (format == "json") {
        json out = json::array();
        for (const auto& r : rows) {
            json j = {{"rank", r.rank}, {"model", r.model}, {"solve", r.solve}};
            if (r.author) j["author"] = *r.author;
            if (r.composite) j["composite"] = *r.composite;
            if (r.ci) j["ci"] = {{"lower", r.ci->first}, {"upper", r.ci->second}};
            if (r.range) j["range"] = {{"best", r.range->best}, {"worst", r.range->worst}};
            out.push_back(std::move(j));
        }
        write_file_atomic(file, out.dump(2) + "\n");
        return;
    }
    if (format != "markdown") throw ConfigError("unknown leaderboard format '" + format + "'");

    std::ostringstream out;
    out << "| # | Model | Solve | Author | Composite | 95% CI | Range |\n";
    out << "|---|-------|-------|--------|-----------|--------|-------|\n";
    for (const auto& r : rows) {
        out << "| " << r.rank << " | " << r.model << " | " << round_half_even(r.solve) << " | ";
        if (r.author)
            out << round_half_even(*r.author);
        else
            out << "-";
        out << " | ";
        if (r.composite)
            out << round_half_even(*r.composite);
        else
            out << "-";
        out << " | ";
        if (r.ci)
            out << "[" << round_half_even(r.ci->first) << ", " << round_half_even(r.ci->second)
                << "]";
        else
            out << "-";
        out << " | ";
        if (r.range)
            out << r.range->best << "-" << r.range->worst;
        else
            out << "-";
        out << " |\n";
    }
    write_file_atomic(file, out.str());
}

}  // namespace arena::store
