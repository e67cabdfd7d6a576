#include "arena/agents.hpp"

#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "arena/errors.hpp"
#include "arena/log.hpp"
#include "arena/rasch.hpp"
#include "httplib.h"
#include "json.hpp"

namespace arena::agents {

using nlohmann::json;

uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

EndpointAgent::EndpointAgent(std::string model_name, EndpointParams params)
    : model_name_(std::move(model_name)), params_(std::move(params)) {}

std::string EndpointAgent::complete(const std::string& prompt) {
    const char* key = params_.auth_env.empty() ? nullptr : std::getenv(params_.auth_env.c_str());
    if (!key)
        throw ConfigError("auth environment variable '" + params_.auth_env + "' is not set");

    // split base_url into origin and path prefix
    std::string origin = params_.base_url;
    std::string prefix;
    auto scheme_end = origin.find("://");
    if (scheme_end != std::string::npos) {
        auto slash = origin.find('/', scheme_end + 3);
        if (slash != std::string::npos) {
            prefix = origin.substr(slash);
            origin = origin.substr(0, slash);
        }
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    std::string path = prefix + "/v1/chat/completions";

    json body = {
        {"model", model_name_},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", params_.temperature},
    };
    std::string payload = body.dump();

    httplib::Client client(origin);
    client.set_connection_timeout(params_.timeout_seconds, 0);
    client.set_read_timeout(params_.timeout_seconds, 0);
    client.set_bearer_token_auth(key);

    std::string last_failure;
    for (int attempt = 0; attempt <= params_.max_retries; ++attempt) {
        if (attempt > 0) {
            int delay = params_.backoff_base_ms << (attempt - 1);
            Log::info("endpoint ", model_name_, ": retry ", attempt, " after ", delay, " ms");
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_failure = "transport failure (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_failure = "status " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300)
            throw EndpointError("endpoint '" + model_name_ + "' returned status " +
                                std::to_string(res->status) + ": " + res->body.substr(0, 200));
        try {
            json reply = json::parse(res->body);
            std::string content = reply.at("choices").at(0).at("message").at("content");
            Log::info("endpoint ", model_name_, ": completion ok (temperature ",
                      params_.temperature, ", attempt ", attempt + 1, ")");
            return content;
        } catch (const json::exception& e) {
            throw EndpointError("endpoint '" + model_name_ + "' returned malformed body: " +
                                std::string(e.what()));
        }
    }
    throw TransportError("endpoint '" + model_name_ + "' failed after " +
                         std::to_string(params_.max_retries) + " retries: " + last_failure);
}

namespace {

std::mt19937_64 keyed_rng(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::seed_seq seq{a, b, c};
    return std::mt19937_64(seq);
}

}  // namespace

SyntheticAuthoring synth_author(const std::string& author, const SyntheticParams& params, int k,
                                const std::vector<DomainTag>& schedule) {
    if (static_cast<int>(schedule.size()) != k)
        throw ConfigError("schedule length must equal K");
    SyntheticAuthoring out;
    for (int i = 0; i < k; ++i) {
        auto rng = keyed_rng(params.seed, fnv1a64(author) ^ 0x61757468u, i);
        std::normal_distribution<double> diff_dist(params.authoring_difficulty_mean,
                                                   params.authoring_difficulty_spread);
        double d = params.authoring_difficulty_spread == 0.0 ? params.authoring_difficulty_mean
                                                             : diff_dist(rng);
        std::uniform_int_distribution<long> small(2, 99);
        long a = small(rng), b = small(rng), c = small(rng);
        long value = a * b + c;

        Problem p;
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%03d", i);
        p.id = author + "-p" + idx;
        p.author = author;
        p.domain = schedule[i];
        p.statement = "Compute " + std::to_string(a) + " * " + std::to_string(b) + " + " +
                      std::to_string(c) + ".";
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        bool perturb = unit(rng) < params.gold_error_rate;
        p.gold = std::to_string(perturb ? value + 1 : value);
        p.provenance.stages_used = 1;
        p.provenance.draft_statement = p.statement;
        p.provenance.draft_gold = p.gold;
        out.problems.push_back(std::move(p));
        out.truths.push_back({author + "-p" + idx, d, std::to_string(value)});
    }
    return out;
}

std::string synth_solve(const SyntheticParams& params, const GroundTruth& truth) {
    auto rng = keyed_rng(params.seed, fnv1a64(truth.problem));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double p = rasch::predict(params.latent_ability, truth.latent_difficulty);
    if (unit(rng) < p) return truth.true_answer;
    long v = std::strtol(truth.true_answer.c_str(), nullptr, 10);
    return std::to_string(v + 1);
}

}  // namespace arena::agents
