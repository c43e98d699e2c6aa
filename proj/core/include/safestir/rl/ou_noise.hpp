#pragma once

#include <cmath>
#include <vector>

#include "safestir/rng.hpp"

namespace safestir::rl {

/// Ornstein-Uhlenbeck exploration noise:
///   x <- x + theta * (mu - x) * dt + sigma * sqrt(dt) * xi,  xi ~ N(0, 1).
struct OUNoise {
    double mu = 0.0;
    double sigma = 1.0;
    double theta = 0.15;
    double dt = 1.0;
    std::vector<double> value;

    OUNoise(int dim, double mu_ = 0.0, double sigma_ = 1.0, double theta_ = 0.15,
            double dt_ = 1.0)
        : mu(mu_), sigma(sigma_), theta(theta_), dt(dt_), value(dim, mu_) {}

    void reset() {
        for (auto& x : value) x = mu;
    }

    const std::vector<double>& sample(Rng& rng) {
        double sq = std::sqrt(dt);
        for (auto& x : value)
            x += theta * (mu - x) * dt + sigma * sq * rng.normal();
        return value;
    }
};

}  // namespace safestir::rl
