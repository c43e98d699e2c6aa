#pragma once

#include <map>
#include <string>
#include <vector>

namespace safestir::risk {

/// Risk identifiers are open strings so novel failures can be registered at
/// runtime without code changes. The three built-in ones:
inline const std::string kSlide = "slide";
inline const std::string kOverturn = "overturn";
inline const std::string kSpill = "spill";

using RiskId = std::string;

enum class FsmState { Safe, Risky };

/// Two-state hysteresis monitor over one scalar observable. Activates when
/// the observable exceeds kappa_a, deactivates when it drops below kappa_d;
/// the band in between holds the current state.
struct RiskEstimator {
    RiskId id;
    std::string parameter_id;  // which observable it reads: "d", "theta", "V", ...
    double kappa_a = 0.0;
    double kappa_d = 0.0;
    FsmState state = FsmState::Safe;

    bool operator==(const RiskEstimator&) const = default;
};

/// Ordered binary risk vector; one entry per registered risk, in
/// registration order.
class RiskVector {
public:
    void set(const RiskId& id, int value);
    int get(const RiskId& id) const;  // ConfigError on unknown risk
    bool contains(const RiskId& id) const;
    const std::vector<std::pair<RiskId, int>>& entries() const { return entries_; }
    bool any_active() const;

private:
    std::vector<std::pair<RiskId, int>> entries_;
};

/// Validated constructor; enforces kappa_d < kappa_a.
RiskEstimator make_estimator(const RiskId& id, const std::string& parameter_id,
                             double kappa_a, double kappa_d);

/// Table-driven defaults: slide on d (0.05/0.02 m), overturn on theta
/// (0.3/0.1 rad), spill on V (0.66/0.33).
std::vector<RiskEstimator> default_estimators();

/// One hysteresis transition. Pure: returns the updated estimator.
RiskEstimator update(const RiskEstimator& estimator, double chi);

/// 1 iff Risky.
int risk_value(const RiskEstimator& estimator);

/// Prevention reward of a binary risk value: 1 - rho.
double risk_reward(int rho);

/// Updates every estimator from the observable map and returns the resulting
/// risk vector. ConfigError naming the parameter if an observable is missing.
RiskVector update_all(std::vector<RiskEstimator>& risks,
                      const std::map<std::string, double>& observables);

/// Real-world spill mapping: (max_z - z_bowl) / (2 r), clamped below at 0.
double spill_volume_from_height(double max_z, double z_bowl, double r);

}  // namespace safestir::risk
