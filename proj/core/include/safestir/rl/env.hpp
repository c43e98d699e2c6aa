#pragma once

#include <span>
#include <vector>

namespace safestir::rl {

struct EnvStep {
    std::vector<double> observation;
    double reward = 0.0;
};

/// Episodic environment driven by continuous actions. Implementations own
/// their randomness and must be deterministic given construction arguments
/// and the sequence of calls.
class Environment {
public:
    virtual ~Environment() = default;
    virtual int observation_size() const = 0;
    virtual int action_size() const = 0;
    /// Per-component action clip range (actions live in [-bound, bound]^dim).
    virtual double action_bound() const = 0;
    /// Starts a new episode (including any initial procedure) and returns the
    /// first observation.
    virtual std::vector<double> reset() = 0;
    virtual EnvStep step(std::span<const double> action) = 0;
    /// Optional per-component observation normalization for network inputs.
    virtual std::vector<double> observation_scale() const {
        return std::vector<double>(observation_size(), 1.0);
    }
};

}  // namespace safestir::rl
