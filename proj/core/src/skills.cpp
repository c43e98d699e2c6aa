#include "safestir/skills/skills.hpp"

#include <cmath>

#include "safestir/errors.hpp"

namespace safestir::skills {

std::string SkillKind::label() const {
    switch (type_) {
        case Type::Base: return "base";
        case Type::Prevention: return "prevention";
        case Type::Compound: return "compound";
    }
    return "base";
}

SkillKind SkillKind::from_label(const std::string& label, const RiskId& risk) {
    if (label == "base") return base();
    if (label == "compound") return compound();
    if (label == "prevention") {
        if (risk.empty()) throw ConfigError("prevention skill needs a risk binding");
        return prevention(risk);
    }
    throw ConfigError("unknown skill kind: " + label);
}

bool SkillLibrary::contains(const std::string& name) const {
    for (const auto& s : skills_)
        if (s.name == name) return true;
    return false;
}

const SkillSpec& SkillLibrary::at(const std::string& name) const {
    for (const auto& s : skills_)
        if (s.name == name) return s;
    throw ConfigError("no skill named '" + name + "' in library");
}

const SkillSpec* SkillLibrary::executable_default() const {
    for (const auto& s : skills_)
        if (s.kind.is_base() || s.kind.is_compound()) return &s;
    return nullptr;
}

const SkillSpec* SkillLibrary::prevention_for(const RiskId& risk) const {
    for (const auto& s : skills_)
        if (s.kind.is_prevention() && s.kind.risk() == risk) return &s;
    return nullptr;
}

SkillLibrary register_skill(const SkillLibrary& library, SkillSpec spec) {
    if (library.contains(spec.name))
        throw ConfigError("skill '" + spec.name + "' already registered");
    SkillLibrary out = library;
    out.skills_.push_back(std::move(spec));
    return out;
}

std::map<std::string, double> observables(const sim::WorldState& state) {
    return {{"d", sim::observe_d(state)},
            {"theta", sim::observe_theta(state)},
            {"V", sim::observe_V(state)}};
}

double observable_for(const sim::WorldState& state, const std::string& parameter_id) {
    if (parameter_id == "d") return sim::observe_d(state);
    if (parameter_id == "theta") return sim::observe_theta(state);
    if (parameter_id == "V") return sim::observe_V(state);
    throw ConfigError("unknown observable parameter: " + parameter_id);
}

namespace {

std::string parameter_for_risk(const RiskId& risk_id,
                               const std::vector<risk::RiskEstimator>* risks) {
    if (risks) {
        for (const auto& est : *risks)
            if (est.id == risk_id) return est.parameter_id;
        throw ConfigError("risk '" + risk_id + "' is not registered");
    }
    if (risk_id == risk::kSlide) return "d";
    if (risk_id == risk::kOverturn) return "theta";
    if (risk_id == risk::kSpill) return "V";
    throw ConfigError("risk '" + risk_id + "' is not registered");
}

const risk::RiskEstimator& estimator_for(const std::vector<risk::RiskEstimator>& risks,
                                         const RiskId& risk_id) {
    for (const auto& est : risks)
        if (est.id == risk_id) return est;
    throw ConfigError("risk '" + risk_id + "' is not registered");
}

}  // namespace

std::vector<double> stir_observation(const sim::WorldState& state) {
    Vec2 pos = state.config.spoon_frame_bowl_relative
                   ? state.spoon - state.bowl.center
                   : state.spoon;
    return {pos.x, pos.y,
            static_cast<double>(state.phase) / static_cast<double>(state.config.phi_max)};
}

std::vector<double> prevention_observation(const sim::WorldState& state,
                                           const RiskId& risk_id,
                                           const std::vector<risk::RiskEstimator>* risks) {
    std::vector<double> obs = stir_observation(state);
    obs.push_back(observable_for(state, parameter_for_risk(risk_id, risks)));
    return obs;
}

std::vector<double> stir_observation_scale(const sim::SimConfig& config) {
    return {1.0 / config.eta, 1.0 / config.eta, 1.0};
}

std::vector<double> prevention_observation_scale(
    const sim::SimConfig& config, const RiskId& risk_id,
    const std::vector<risk::RiskEstimator>* risks) {
    std::vector<double> scale = stir_observation_scale(config);
    double kappa_a = 0.0;
    if (risks) {
        kappa_a = estimator_for(*risks, risk_id).kappa_a;
    } else {
        for (const auto& est : risk::default_estimators())
            if (est.id == risk_id) kappa_a = est.kappa_a;
    }
    if (kappa_a <= 0.0) throw ConfigError("risk '" + risk_id + "' is not registered");
    scale.push_back(1.0 / kappa_a);
    return scale;
}

double stir_reward(const sim::WorldState& prev, const sim::WorldState& next) {
    double total = 0.0;
    for (const auto& d : sim::displacements(prev, next))
        if (d.in_bowl) total += d.distance;
    return total;
}

double prevention_reward(const risk::RiskVector& risks, const RiskId& risk_id) {
    return risk::risk_reward(risks.get(risk_id));
}

double compound_reward(const sim::WorldState& prev, const sim::WorldState& next,
                       const risk::RiskVector& risks) {
    double total = stir_reward(prev, next);
    for (const auto& id : {risk::kSlide, risk::kOverturn, risk::kSpill})
        total += prevention_reward(risks, id);
    return total;
}

sim::WorldState initial_procedure(sim::WorldState state, const RiskId& risk_id,
                                  const std::vector<risk::RiskEstimator>& risks,
                                  int step_budget) {
    const risk::RiskEstimator& est = estimator_for(risks, risk_id);
    const double act = state.config.max_action_norm;

    if (risk_id == risk::kSlide) {
        if (state.bowl.fixed)
            throw ConfigError("slide initial procedure requires the unrestricted setup");
        double angle = state.rng.uniform(0.0, 2.0 * M_PI);
        double mag = state.rng.uniform(1.02 * est.kappa_a, 2.0 * est.kappa_a);
        Vec2 offset{mag * std::cos(angle), mag * std::sin(angle)};
        state.bowl.center += offset;
        for (auto& p : state.particles) p.position += offset;
        // The bowl slid away from the pressing spoon, so the spoon sits
        // inside the bowl on the side it came from; sample such an interior
        // point (clamped to the workspace).
        double home = std::atan2(-offset.y, -offset.x) + state.rng.uniform(-0.5, 0.5);
        double sr = state.bowl.radius * state.rng.uniform(0.35, 0.75);
        state.spoon = state.bowl.center + Vec2{sr * std::cos(home), sr * std::sin(home)};
        state.spoon.x = clamp(state.spoon.x, -state.config.eta, state.config.eta);
        state.spoon.y = clamp(state.spoon.y, -state.config.eta, state.config.eta);
        return state;
    }

    if (risk_id == risk::kOverturn) {
        if (state.bowl.fixed)
            throw ConfigError("overturn initial procedure requires the unrestricted setup");
        double angle = state.rng.uniform(0.0, 2.0 * M_PI);
        Vec2 dir{std::cos(angle), std::sin(angle)};
        for (int s = 0; s < step_budget; ++s) {
            Vec2 before = state.spoon;
            sim::step(state, dir * act);
            if (sim::observe_theta(state) > est.kappa_a) return state;
            // Pinned at the workspace edge without a trigger: re-engage by
            // pressing back through the bowl, with a little jitter.
            if (distance(before, state.spoon) < 0.05 * act) {
                Vec2 jitter{state.rng.uniform(-0.3, 0.3), state.rng.uniform(-0.3, 0.3)};
                dir = ((state.bowl.center - state.spoon).normalized() + jitter)
                          .normalized(dir);
            }
        }
        throw ProcedureError("overturn initial procedure exhausted its budget");
    }

    if (risk_id == risk::kSpill) {
        // Plow toward a stream of random in-bowl locations; the constant
        // motion grinds the contents together until they ride past the rim
        // threshold.
        Vec2 target = state.bowl.center;
        for (int s = 0; s < step_budget; ++s) {
            if (distance(state.spoon, target) < act) {
                double angle = state.rng.uniform(0.0, 2.0 * M_PI);
                double rho = 0.8 * state.bowl.radius * std::sqrt(state.rng.uniform());
                target = state.bowl.center +
                         Vec2{rho * std::cos(angle), rho * std::sin(angle)};
            }
            sim::step(state, clip_norm(target - state.spoon, act));
            if (sim::observe_V(state) > est.kappa_a) return state;
        }
        throw ProcedureError("spill initial procedure exhausted its budget");
    }

    throw ConfigError("no initial procedure for risk '" + risk_id + "'");
}

SkillSpec make_stir_skill(nn::DenseNet policy) {
    SkillSpec spec;
    spec.name = "stir";
    spec.kind = SkillKind::base();
    spec.observation = [](const sim::WorldState& s) { return stir_observation(s); };
    spec.reward = [](const sim::WorldState& prev, const sim::WorldState& next,
                     const risk::RiskVector&) { return stir_reward(prev, next); };
    spec.policy = std::move(policy);
    return spec;
}

SkillSpec make_prevention_skill(const RiskId& risk_id, nn::DenseNet policy,
                                const std::vector<risk::RiskEstimator>& risks) {
    SkillSpec spec;
    spec.name = "prevent_" + risk_id;
    spec.kind = SkillKind::prevention(risk_id);
    std::vector<risk::RiskEstimator> bound = risks;
    spec.observation = [risk_id, bound](const sim::WorldState& s) {
        return prevention_observation(s, risk_id, &bound);
    };
    spec.reward = [risk_id](const sim::WorldState&, const sim::WorldState&,
                            const risk::RiskVector& rv) {
        return prevention_reward(rv, risk_id);
    };
    spec.initial_procedure = [risk_id, bound](sim::WorldState s) {
        return initial_procedure(std::move(s), risk_id, bound);
    };
    spec.policy = std::move(policy);
    return spec;
}

SkillSpec make_compound_skill(nn::DenseNet policy) {
    SkillSpec spec;
    spec.name = "compound";
    spec.kind = SkillKind::compound();
    spec.observation = [](const sim::WorldState& s) { return stir_observation(s); };
    spec.reward = [](const sim::WorldState& prev, const sim::WorldState& next,
                     const risk::RiskVector& rv) {
        return compound_reward(prev, next, rv);
    };
    spec.policy = std::move(policy);
    return spec;
}

SkillEnvironment::SkillEnvironment(sim::SimConfig config, sim::Setup setup,
                                   SkillSpec skill,
                                   std::vector<risk::RiskEstimator> risks,
                                   std::uint64_t seed, int procedure_budget)
    : config_(config),
      setup_(setup),
      skill_(std::move(skill)),
      risks_template_(std::move(risks)),
      risks_(risks_template_),
      episode_rng_(seed),
      procedure_budget_(procedure_budget),
      world_(sim::reset(config, setup)) {
    obs_size_ = static_cast<int>(skill_.observation(world_).size());
    if (skill_.kind.is_prevention())
        obs_scale_ = prevention_observation_scale(config_, skill_.kind.risk(),
                                                  &risks_template_);
    else
        obs_scale_ = stir_observation_scale(config_);
}

std::vector<double> SkillEnvironment::reset() {
    // A procedure failure is logged by resampling: draw a fresh episode seed
    // and try again, a bounded number of times.
    for (int attempt = 0; attempt < 16; ++attempt) {
        sim::SimConfig cfg = config_;
        cfg.seed = episode_rng_.fork_seed();
        world_ = sim::reset(cfg, setup_);
        risks_ = risks_template_;
        if (!skill_.initial_procedure) break;
        try {
            world_ = skill_.initial_procedure(world_);
            break;
        } catch (const ProcedureError&) {
            if (attempt == 15) throw;
        }
    }
    risk::update_all(risks_, observables(world_));
    return skill_.observation(world_);
}

rl::EnvStep SkillEnvironment::step(std::span<const double> action) {
    SAFESTIR_REQUIRE(action.size() == 2, "skill environment expects 2D actions");
    sim::WorldState prev = world_;
    sim::step(world_, {action[0], action[1]});
    risk::RiskVector rv = risk::update_all(risks_, observables(world_));
    double reward = skill_.reward(prev, world_, rv);
    return {skill_.observation(world_), reward};
}

}  // namespace safestir::skills
