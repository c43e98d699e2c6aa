#include <doctest.h>

#include "safestir/errors.hpp"
#include "safestir/risk/risk.hpp"
#include "safestir/rng.hpp"

using namespace safestir;
using namespace safestir::risk;

namespace {

RiskEstimator slide_est() { return make_estimator(kSlide, "d", 0.05, 0.02); }
RiskEstimator spill_est() { return make_estimator(kSpill, "V", 0.66, 0.33); }

}  // namespace

TEST_CASE("activation and deactivation thresholds") {
    RiskEstimator e = slide_est();
    e = update(e, 0.06);
    CHECK(e.state == FsmState::Risky);

    // Inside the hysteresis band the state holds.
    e = update(e, 0.03);
    CHECK(e.state == FsmState::Risky);

    RiskEstimator sp = spill_est();
    sp.state = FsmState::Risky;
    sp = update(sp, 0.2);
    CHECK(sp.state == FsmState::Safe);
}

TEST_CASE("equality with a threshold holds the state") {
    RiskEstimator e = slide_est();
    e = update(e, 0.05);
    CHECK(e.state == FsmState::Safe);
    e.state = FsmState::Risky;
    e = update(e, 0.02);
    CHECK(e.state == FsmState::Risky);
}

TEST_CASE("risk_value and risk_reward") {
    RiskEstimator e = slide_est();
    CHECK(risk_value(e) == 0);  // fresh estimators start Safe
    e.state = FsmState::Risky;
    CHECK(risk_value(e) == 1);

    CHECK(risk_reward(1) == 0.0);
    CHECK(risk_reward(0) == 1.0);
    double cumulative = 0.0;
    for (int rho : {1, 1, 0, 0}) cumulative += risk_reward(rho);
    CHECK(cumulative == 2.0);
    CHECK_THROWS_AS(risk_reward(2), std::logic_error);
}

TEST_CASE("sequences confined to the band never change state") {
    Rng rng(2);
    for (FsmState start : {FsmState::Safe, FsmState::Risky}) {
        RiskEstimator e = slide_est();
        e.state = start;
        for (int i = 0; i < 200; ++i) {
            e = update(e, rng.uniform(0.02 + 1e-9, 0.05 - 1e-9));
            CHECK(e.state == start);
        }
    }
}

TEST_CASE("no chattering under oscillation inside the band") {
    RiskEstimator e = slide_est();
    e = update(e, 0.06);  // first entry
    int transitions = 0;
    FsmState prev = e.state;
    for (int i = 0; i < 100; ++i) {
        double chi = (i % 2 == 0) ? 0.02 + 1e-6 : 0.05 - 1e-6;
        e = update(e, chi);
        if (e.state != prev) ++transitions;
        prev = e.state;
    }
    CHECK(transitions == 0);
}

TEST_CASE("monotone trigger") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        double chi1 = rng.uniform(0.0, 0.1);
        RiskEstimator a = slide_est();
        a = update(a, chi1);
        if (a.state == FsmState::Risky) {
            double chi2 = chi1 + rng.uniform(0.0, 0.05);
            RiskEstimator b = slide_est();
            b = update(b, chi2);
            CHECK(b.state == FsmState::Risky);
        }
    }
}

TEST_CASE("update is idempotent for a repeated observation") {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        RiskEstimator e = slide_est();
        e.state = rng.uniform() < 0.5 ? FsmState::Safe : FsmState::Risky;
        double chi = rng.uniform(0.0, 0.1);
        RiskEstimator once = update(e, chi);
        RiskEstimator twice = update(once, chi);
        CHECK(once == twice);
    }
}

TEST_CASE("update_all drives every estimator independently") {
    auto risks = default_estimators();
    RiskVector rv = update_all(risks, {{"d", 0.0}, {"theta", 0.0}, {"V", 0.0}});
    CHECK_FALSE(rv.any_active());

    rv = update_all(risks, {{"d", 0.06}, {"theta", 0.31}, {"V", 0.7}});
    CHECK(rv.get(kSlide) == 1);
    CHECK(rv.get(kOverturn) == 1);
    CHECK(rv.get(kSpill) == 1);

    auto missing = default_estimators();
    CHECK_THROWS_WITH_AS(update_all(missing, {{"d", 0.0}, {"V", 0.0}}),
                         doctest::Contains("theta"), ConfigError);
}

TEST_CASE("update_all matches the per-estimator oracle on random inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto risks = default_estimators();
        for (auto& e : risks)
            e.state = rng.uniform() < 0.5 ? FsmState::Safe : FsmState::Risky;
        std::map<std::string, double> obs{{"d", rng.uniform(0.0, 0.1)},
                                          {"theta", rng.uniform(0.0, 0.5)},
                                          {"V", rng.uniform(0.0, 1.0)}};
        auto expected = risks;
        for (auto& e : expected) e = update(e, obs.at(e.parameter_id));

        RiskVector rv = update_all(risks, obs);
        for (size_t i = 0; i < risks.size(); ++i) {
            CHECK(risks[i] == expected[i]);
            CHECK(rv.get(risks[i].id) == risk_value(expected[i]));
        }
    }
}

TEST_CASE("risk vector lookups") {
    RiskVector rv;
    rv.set(kSlide, 1);
    CHECK(rv.contains(kSlide));
    CHECK_FALSE(rv.contains(kSpill));
    CHECK_THROWS_AS(rv.get(kSpill), ConfigError);
}

TEST_CASE("estimator construction requires kappa_d < kappa_a") {
    CHECK_THROWS_AS(make_estimator("x", "d", 0.05, 0.05), ConfigError);
    CHECK_THROWS_AS(make_estimator("x", "d", 0.02, 0.05), ConfigError);
}

TEST_CASE("spill volume mapping") {
    CHECK(spill_volume_from_height(0.10, 0.08, 0.01) == doctest::Approx(1.0));
    CHECK(spill_volume_from_height(0.08, 0.08, 0.01) == 0.0);
    CHECK(spill_volume_from_height(0.085, 0.08, 0.005) == doctest::Approx(0.5));
    CHECK(spill_volume_from_height(0.05, 0.08, 0.01) == 0.0);  // clamped at 0
    CHECK_THROWS_AS(spill_volume_from_height(0.1, 0.08, 0.0), ConfigError);
    CHECK_THROWS_AS(spill_volume_from_height(0.1, 0.08, -1.0), ConfigError);
}
