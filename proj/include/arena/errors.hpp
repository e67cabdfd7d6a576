#pragma once

#include <stdexcept>
#include <string>

namespace arena {

// Error taxonomy shared by all phases. exit_code() matches the CLI contract:
// 0 success, 2 configuration, 3 phase failure, 4 data integrity.
enum class ErrorKind {
    config,
    phase,
    data_integrity,
    integrity,
    parse,
    eval,
    generation,
    verification,
    comparison,
    fit,
    divergence,
    bootstrap,
    io,
    load,
    transport,
    endpoint,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::config: return 2;
            case ErrorKind::data_integrity:
            case ErrorKind::integrity: return 4;
            default: return 3;
        }
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(std::string m) : Error(ErrorKind::config, std::move(m)) {}
};
struct PhaseError : Error {
    PhaseError(std::string phase, std::string m, std::string checkpoint = {})
        : Error(ErrorKind::phase, "phase '" + phase + "': " + m +
                                      (checkpoint.empty() ? "" : " (checkpoint: " + checkpoint + ")")),
          phase_name(std::move(phase)), checkpoint_path(std::move(checkpoint)) {}
    std::string phase_name;
    std::string checkpoint_path;
};
struct DataIntegrityError : Error {
    explicit DataIntegrityError(std::string m) : Error(ErrorKind::data_integrity, std::move(m)) {}
};
struct ParseError : Error {
    ParseError(std::string m, std::size_t position)
        : Error(ErrorKind::parse, m + " at position " + std::to_string(position)), pos(position) {}
    std::size_t pos;
};
struct EvalError : Error {
    explicit EvalError(std::string m) : Error(ErrorKind::eval, std::move(m)) {}
};
struct GenerationError : Error {
    explicit GenerationError(std::string m) : Error(ErrorKind::generation, std::move(m)) {}
};
struct VerificationError : Error {
    explicit VerificationError(std::string m) : Error(ErrorKind::verification, std::move(m)) {}
};
struct ComparisonError : Error {
    explicit ComparisonError(std::string m) : Error(ErrorKind::comparison, std::move(m)) {}
};
struct FitError : Error {
    explicit FitError(std::string m) : Error(ErrorKind::fit, std::move(m)) {}
};
struct DivergenceError : Error {
    explicit DivergenceError(std::string m) : Error(ErrorKind::divergence, std::move(m)) {}
};
struct BootstrapError : Error {
    explicit BootstrapError(std::string m) : Error(ErrorKind::bootstrap, std::move(m)) {}
};
struct IoError : Error {
    explicit IoError(std::string m) : Error(ErrorKind::io, std::move(m)) {}
};
struct LoadError : Error {
    explicit LoadError(std::string m) : Error(ErrorKind::load, std::move(m)) {}
};
struct IntegrityError : Error {
    explicit IntegrityError(std::string m) : Error(ErrorKind::integrity, std::move(m)) {}
};
struct TransportError : Error {
    explicit TransportError(std::string m) : Error(ErrorKind::transport, std::move(m)) {}
};
struct EndpointError : Error {
    explicit EndpointError(std::string m) : Error(ErrorKind::endpoint, std::move(m)) {}
};

}  // namespace arena
