#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "arena/types.hpp"

namespace arena::agents {

// Uniform participant surface: one prompt in, one completion out.
class ChatAgent {
public:
    virtual ~ChatAgent() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual const std::string& name() const = 0;
};

// Remote chat endpoint speaking the common completion-request JSON shape
// {model, messages, temperature}, bearer token from the named environment
// variable. Retries with exponential backoff on transient failures.
class EndpointAgent : public ChatAgent {
public:
    EndpointAgent(std::string model_name, EndpointParams params);

    std::string complete(const std::string& prompt) override;
    const std::string& name() const override { return model_name_; }

private:
    std::string model_name_;
    EndpointParams params_;
};

// Fixed-reply agent for tests and canned generation fixtures. Replies cycle
// through the configured list.
class CannedAgent : public ChatAgent {
public:
    CannedAgent(std::string name, std::vector<std::string> replies)
        : name_(std::move(name)), replies_(std::move(replies)) {}

    std::string complete(const std::string&) override {
        if (replies_.empty()) return {};
        return replies_[next_++ % replies_.size()];
    }
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

uint64_t fnv1a64(const std::string& s);

struct GroundTruth {
    std::string problem;
    double latent_difficulty = 0.0;
    std::string true_answer;
};

struct SyntheticAuthoring {
    std::vector<Problem> problems;
    std::vector<GroundTruth> truths;
};

// Authors K templated arithmetic problems whose gold is independently
// computable. Latent difficulties are Normal(mean, spread^2); with
// probability gold_error_rate the recorded gold is perturbed (true answer
// kept in the ground truth), exercising the verification phase.
SyntheticAuthoring synth_author(const std::string& author, const SyntheticParams& params, int k,
                                const std::vector<DomainTag>& schedule);

// Emits the true answer with probability sigma(s* - d*), else a
// deterministic wrong answer (true value + 1). Randomness is keyed by
// (agent seed, problem id), so outcomes are reproducible and independent of
// dispatch order.
std::string synth_solve(const SyntheticParams& params, const GroundTruth& truth);

}  // namespace arena::agents
