#include "safestir/arb/arbiter.hpp"

#include <sstream>

#include "safestir/errors.hpp"
#include "safestir/nn/net.hpp"

namespace safestir::arb {

const skills::SkillSpec& select(const risk::RiskVector& risks,
                                const PriorityTable& priorities,
                                const skills::SkillLibrary& library) {
    if (!risks.any_active()) {
        const skills::SkillSpec* base = library.executable_default();
        if (!base) throw ConfigError("library has no base skill");
        return *base;
    }
    for (const auto& id : priorities.order) {
        if (risks.contains(id) && risks.get(id) == 1) {
            const skills::SkillSpec* p = library.prevention_for(id);
            if (!p)
                throw ArbitrationError(id, "active risk '" + id +
                                               "' has no registered prevention skill");
            return *p;
        }
    }
    for (const auto& [id, value] : risks.entries()) {
        if (value == 1)
            throw ArbitrationError(id, "active risk '" + id +
                                           "' is missing from the priority table");
    }
    throw std::logic_error("select: unreachable");
}

EpisodeResult run_episode(const skills::SkillLibrary& library,
                          const PriorityTable& priorities,
                          std::vector<risk::RiskEstimator> risks,
                          sim::WorldState world, const EpisodeOptions& options) {
    EpisodeResult result;
    bool arbitrated = false;
    for (const auto& s : library.skills())
        if (s.kind.is_prevention()) arbitrated = true;

    if (options.start_risk)
        world = skills::initial_procedure(world, *options.start_risk, risks);

    if (options.trace_particle >= 0)
        SAFESTIR_REQUIRE(options.trace_particle <
                             static_cast<int>(world.particles.size()),
                         "trace particle index out of range");

    double sum_d = 0.0, sum_theta = 0.0;
    int observed = 0;
    int spill_prev = 0;
    for (const auto& est : risks)
        if (est.id == risk::kSpill) spill_prev = risk::risk_value(est);

    for (int step = 0; step < options.steps; ++step) {
        auto obs_map = skills::observables(world);
        risk::RiskVector rv = risk::update_all(risks, obs_map);

        if (rv.contains(risk::kSpill)) {
            int spill_now = rv.get(risk::kSpill);
            if (spill_now == 1 && spill_prev == 0) result.metrics.spill_activations += 1;
            spill_prev = spill_now;
        }
        sum_d += obs_map.at("d");
        sum_theta += obs_map.at("theta");
        result.metrics.max_V = std::max(result.metrics.max_V, obs_map.at("V"));
        observed += 1;

        const skills::SkillSpec* skill = nullptr;
        try {
            skill = arbitrated ? &select(rv, priorities, library)
                               : library.executable_default();
            if (!skill) throw ConfigError("library has no base skill");
        } catch (const ArbitrationError& e) {
            result.metrics.aborted = true;
            result.metrics.abort_reason = e.what();
            break;
        }

        TraceRecord rec;
        rec.step = step;
        rec.d = obs_map.at("d");
        rec.theta = obs_map.at("theta");
        rec.V = obs_map.at("V");
        rec.rho = rv.entries();
        rec.skill = skill->name;
        result.trace.push_back(std::move(rec));

        std::vector<double> obs = skill->observation(world);
        std::vector<double> action = nn::forward(skill->policy, obs);
        sim::WorldState prev = world;
        sim::step(world, {action[0], action[1]});
        result.metrics.stir_reward += skills::stir_reward(prev, world);
        if (options.trace_particle >= 0)
            result.particle_track.push_back(
                world.particles[options.trace_particle].position);
        result.metrics.steps += 1;
    }

    if (observed > 0) {
        result.metrics.mean_d = sum_d / observed;
        result.metrics.mean_theta = sum_theta / observed;
    }
    return result;
}

std::string trace_csv_header(const std::vector<risk::RiskEstimator>& risks) {
    std::ostringstream os;
    os << "step,d,theta,V";
    for (const auto& est : risks) os << ",rho_" << est.id;
    os << ",skill";
    return os.str();
}

std::string trace_csv_row(const TraceRecord& rec) {
    std::ostringstream os;
    os.precision(17);
    os << rec.step << ',' << rec.d << ',' << rec.theta << ',' << rec.V;
    for (const auto& [id, value] : rec.rho) os << ',' << value;
    os << ',' << rec.skill;
    return os.str();
}

}  // namespace safestir::arb
