#pragma once

#include <stdexcept>
#include <string>

namespace safestir {

/// Invalid or inconsistent configuration (bad file, bad parameter, missing risk, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure during training (NaN loss/gradient).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An active risk has no registered prevention skill.
class ArbitrationError : public std::runtime_error {
public:
    ArbitrationError(const std::string& risk, const std::string& msg)
        : std::runtime_error(msg), risk_(risk) {}
    const std::string& risk() const { return risk_; }

private:
    std::string risk_;
};

/// Initial procedure exhausted its step budget without triggering the risk.
class ProcedureError : public std::runtime_error {
public:
    explicit ProcedureError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Required file (checkpoint, results) is missing.
class MissingArtifactError : public std::runtime_error {
public:
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

// Programming errors (dimension mismatches, stale tapes, NaN states) throw
// std::logic_error via this macro; they indicate bugs, not recoverable input.
#define SAFESTIR_REQUIRE(cond, msg)                       \
    do {                                                  \
        if (!(cond)) throw std::logic_error(msg);         \
    } while (0)

}  // namespace safestir
