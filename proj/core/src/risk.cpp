#include "safestir/risk/risk.hpp"

#include <cmath>

#include "safestir/errors.hpp"

namespace safestir::risk {

void RiskVector::set(const RiskId& id, int value) {
    for (auto& [rid, v] : entries_) {
        if (rid == id) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(id, value);
}

int RiskVector::get(const RiskId& id) const {
    for (const auto& [rid, v] : entries_)
        if (rid == id) return v;
    throw ConfigError("unknown risk: " + id);
}

bool RiskVector::contains(const RiskId& id) const {
    for (const auto& [rid, v] : entries_)
        if (rid == id) return true;
    return false;
}

bool RiskVector::any_active() const {
    for (const auto& [rid, v] : entries_)
        if (v != 0) return true;
    return false;
}

RiskEstimator make_estimator(const RiskId& id, const std::string& parameter_id,
                             double kappa_a, double kappa_d) {
    if (!(kappa_d < kappa_a))
        throw ConfigError("risk '" + id + "': kappa_d must be < kappa_a");
    return RiskEstimator{id, parameter_id, kappa_a, kappa_d, FsmState::Safe};
}

std::vector<RiskEstimator> default_estimators() {
    return {
        make_estimator(kSlide, "d", 0.05, 0.02),
        make_estimator(kOverturn, "theta", 0.3, 0.1),
        make_estimator(kSpill, "V", 0.66, 0.33),
    };
}

RiskEstimator update(const RiskEstimator& estimator, double chi) {
    RiskEstimator out = estimator;
    // Strict comparisons; equality with either threshold holds the state.
    if (estimator.state == FsmState::Safe && chi > estimator.kappa_a)
        out.state = FsmState::Risky;
    else if (estimator.state == FsmState::Risky && chi < estimator.kappa_d)
        out.state = FsmState::Safe;
    return out;
}

int risk_value(const RiskEstimator& estimator) {
    return estimator.state == FsmState::Risky ? 1 : 0;
}

double risk_reward(int rho) {
    SAFESTIR_REQUIRE(rho == 0 || rho == 1, "risk value must be binary");
    return 1.0 - rho;
}

RiskVector update_all(std::vector<RiskEstimator>& risks,
                      const std::map<std::string, double>& observables) {
    for (const auto& est : risks) {
        if (!observables.contains(est.parameter_id))
            throw ConfigError("missing observable '" + est.parameter_id +
                              "' required by risk '" + est.id + "'");
    }
    RiskVector vec;
    for (auto& est : risks) {
        est = update(est, observables.at(est.parameter_id));
        vec.set(est.id, risk_value(est));
    }
    return vec;
}

double spill_volume_from_height(double max_z, double z_bowl, double r) {
    if (r <= 0.0) throw ConfigError("particle radius must be > 0");
    return std::max(0.0, (max_z - z_bowl) / (2.0 * r));
}

}  // namespace safestir::risk
