#include "safestir/sim/world.hpp"

#include <cmath>
#include <sstream>

#include "safestir/errors.hpp"

namespace safestir::sim {

namespace {

constexpr int kRelaxIterations = 8;
constexpr double kPackingLimit = 0.78;  // slope-assisted settling packs well past random placement
constexpr double kFullExclusion = 1.0 - 1e-12;  // cap-ratio rounding guard
constexpr double kPileSettleFraction = 0.2;     // seep rate of a supported pile

void validate_config(const SimConfig& c) {
    if (c.n_particles < 0) throw ConfigError("n_particles must be >= 0");
    if (c.eta <= 0) throw ConfigError("eta must be > 0");
    if (c.phi_max <= 0) throw ConfigError("phi_max must be > 0");
    if (c.phi_step < 1) throw ConfigError("phi_step must be >= 1");
    if (c.max_action_norm <= 0) throw ConfigError("max_action_norm must be > 0");
    if (c.bowl_radius <= 0 || c.rim_height <= 0)
        throw ConfigError("bowl dimensions must be > 0");
    if (c.particle_radius <= 0 || c.spoon_radius <= 0)
        throw ConfigError("particle/spoon radius must be > 0");
    if (c.static_friction_threshold <= 0 || c.bowl_slide_gain <= 0 ||
        c.tilt_gain <= 0 || c.tilt_press_threshold <= 0 || c.tilt_restoring <= 0 ||
        c.pile_packing_coefficient <= 0 || c.pile_decay <= 0 ||
        c.bowl_flat_radius <= 0 || c.rim_return_rate <= 0 ||
        c.rim_climb_factor <= 0 || c.rim_climb_factor > 1)
        throw ConfigError("physics coefficients must be > 0");
    if (c.bowl_flat_radius >= c.bowl_radius)
        throw ConfigError("bowl_flat_radius must be smaller than bowl_radius");

    double free_radius = c.bowl_radius - c.particle_radius;
    if (free_radius <= 0) throw ConfigError("particle radius exceeds bowl radius");
    double area_fraction = c.n_particles * c.particle_radius * c.particle_radius /
                           (free_radius * free_radius);
    if (area_fraction > kPackingLimit) {
        std::ostringstream os;
        os << "packing failure: " << c.n_particles << " particles of radius "
           << c.particle_radius << " cannot fit in bowl of radius " << c.bowl_radius;
        throw ConfigError(os.str());
    }
}

void assert_finite(const WorldState& s) {
    bool ok = s.spoon.finite() && s.bowl.center.finite() && std::isfinite(s.bowl.tilt);
    for (const auto& p : s.particles)
        ok = ok && p.position.finite() && std::isfinite(p.height);
    SAFESTIR_REQUIRE(ok, "non-finite component in world state");
}

// The bowl sides slope toward a flat center disc; contents on the slope
// slide inward unless another particle is in the way. Blocked particles stay
// put, so resting clusters are static.
bool apply_slope_pull(WorldState& state, const std::vector<bool>& in_bowl) {
    const SimConfig& cfg = state.config;
    const int n = static_cast<int>(state.particles.size());
    bool moved = false;
    for (int i = 0; i < n; ++i) {
        if (!in_bowl[i]) continue;
        Particle& p = state.particles[i];
        Vec2 delta = p.position - state.bowl.center;
        double rho = delta.norm();
        if (rho <= cfg.bowl_flat_radius) continue;
        double pull = std::min(cfg.rim_return_rate, rho - cfg.bowl_flat_radius);
        Vec2 candidate = p.position - delta.normalized() * pull;
        bool blocked = false;
        for (int j = 0; j < n && !blocked; ++j) {
            if (j == i) continue;
            double min_dist = p.radius + state.particles[j].radius;
            if (distance(candidate, state.particles[j].position) < min_dist - 1e-12)
                blocked = true;
        }
        if (!blocked) {
            p.position = candidate;
            moved = true;
        }
    }
    return moved;
}

// One pass of pairwise overlap relaxation plus wall containment; returns
// whether anything had to move.
bool relax_overlaps_once(WorldState& s) {
    bool moved = false;
    for (size_t i = 0; i < s.particles.size(); ++i) {
        for (size_t j = i + 1; j < s.particles.size(); ++j) {
            Vec2 delta = s.particles[j].position - s.particles[i].position;
            double dist = delta.norm();
            double min_dist = s.particles[i].radius + s.particles[j].radius;
            if (dist < min_dist - 1e-12) {
                Vec2 nrm = delta.normalized();
                double push = 0.5 * (min_dist - dist);
                s.particles[i].position -= nrm * push;
                s.particles[j].position += nrm * push;
                moved = true;
            }
        }
    }
    for (auto& p : s.particles) {
        double rho = distance(p.position, s.bowl.center);
        double max_rho = s.bowl.radius - p.radius;
        if (rho > max_rho + 1e-12) {
            p.position = s.bowl.center +
                         (p.position - s.bowl.center).normalized() * max_rho;
            moved = true;
        }
    }
    return moved;
}

}  // namespace

double cap_ratio(double height, double radius, double rim_height) {
    double c = clamp(height + radius - rim_height, 0.0, 2.0 * radius);
    return c * c * (3.0 * radius - c) / (4.0 * radius * radius * radius);
}

bool particle_in_bowl(const WorldState& state, const Particle& p) {
    if (distance(p.position, state.bowl.center) > state.bowl.radius) return false;
    return cap_ratio(p.height, p.radius, state.bowl.rim_height) < kFullExclusion;
}

WorldState reset(const SimConfig& config, Setup setup) {
    validate_config(config);

    WorldState s;
    s.config = config;
    s.rng = Rng(config.seed);
    s.spoon = {0.0, 0.0};
    s.bowl.center = {0.0, 0.0};
    s.bowl.initial_center = {0.0, 0.0};
    s.bowl.tilt = 0.0;
    s.bowl.radius = config.bowl_radius;
    s.bowl.rim_height = config.rim_height;
    s.bowl.fixed = (setup == Setup::Fixed);
    s.phase = 0;
    s.step_count = 0;

    // Sunflower spiral packing with a small seeded jitter, then a settle
    // loop (slope pull + overlap relaxation) to a resting fixpoint. Particle
    // order is the placement order.
    double r = config.particle_radius;
    double fit_radius = config.bowl_radius - 1.3 * r;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    s.particles.resize(config.n_particles);
    for (int i = 0; i < config.n_particles; ++i) {
        double rho = fit_radius * std::sqrt((i + 0.5) / std::max(1, config.n_particles));
        double ang = golden * i;
        Vec2 jitter{s.rng.uniform(-0.3 * r, 0.3 * r), s.rng.uniform(-0.3 * r, 0.3 * r)};
        s.particles[i].position = Vec2{rho * std::cos(ang), rho * std::sin(ang)} + jitter;
        s.particles[i].height = 0.0;
        s.particles[i].radius = r;
    }
    std::vector<bool> all_in(s.particles.size(), true);
    for (int it = 0; it < 500; ++it) {
        bool pulled = apply_slope_pull(s, all_in);
        bool relaxed = false;
        for (int pass = 0; pass < kRelaxIterations; ++pass)
            relaxed = relax_overlaps_once(s) || relaxed;
        if (!pulled && !relaxed) break;
    }

    assert_finite(s);
    return s;
}

StepInfo step(WorldState& state, Vec2 action) {
    const SimConfig& cfg = state.config;
    const int n = static_cast<int>(state.particles.size());

    if (!std::isfinite(action.x)) action.x = 0.0;
    if (!std::isfinite(action.y)) action.y = 0.0;
    action = clip_norm(action, cfg.max_action_norm);

    std::vector<Vec2> prev_pos(n);
    std::vector<bool> was_in(n);
    for (int i = 0; i < n; ++i) {
        prev_pos[i] = state.particles[i].position;
        was_in[i] = particle_in_bowl(state, state.particles[i]);
    }

    // The spoon binds against the sloped wall: while engaged with the rim
    // zone from inside, only a fraction of the outward motion takes effect.
    // The full commanded outward push is what bears on the rim and feeds the
    // tilt torque below.
    double rim_drive = 0.0;
    {
        Vec2 delta = state.spoon - state.bowl.center;
        double q = delta.norm();
        if (q > state.bowl.radius - cfg.spoon_radius && q <= state.bowl.radius) {
            Vec2 dir = delta.normalized();
            double outward = action.dot(dir);
            if (outward > 0.0) {
                rim_drive = outward;
                action -= dir * (outward * (1.0 - cfg.rim_climb_factor));
            }
        }
    }

    Vec2 spoon_prev = state.spoon;
    state.spoon += action;
    state.spoon.x = clamp(state.spoon.x, -cfg.eta, cfg.eta);
    state.spoon.y = clamp(state.spoon.y, -cfg.eta, cfg.eta);

    std::vector<double> squeeze(n, 0.0);
    std::vector<int> contacts(n, 0);

    // Spoon pushes overlapping particles straight out along the contact
    // normal (kinematic spoon, infinite effective mass).
    for (int i = 0; i < n; ++i) {
        Particle& p = state.particles[i];
        double min_dist = p.radius + cfg.spoon_radius;
        Vec2 delta = p.position - state.spoon;
        double dist = delta.norm();
        if (dist < min_dist - 1e-12) {
            Vec2 normal = delta.normalized();
            p.position = state.spoon + normal * min_dist;
            squeeze[i] += min_dist - dist;
            contacts[i] += 1;
        }
    }

    // Iterative pairwise overlap relaxation, deterministic index order.
    for (int it = 0; it < kRelaxIterations; ++it) {
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Particle& a = state.particles[i];
                Particle& b = state.particles[j];
                double min_dist = a.radius + b.radius;
                Vec2 delta = b.position - a.position;
                double dist = delta.norm();
                if (dist < min_dist - 1e-12) {
                    Vec2 normal = delta.normalized();
                    double push = 0.5 * (min_dist - dist);
                    a.position -= normal * push;
                    b.position += normal * push;
                    squeeze[i] += push;
                    squeeze[j] += push;
                    if (it == 0) {
                        contacts[i] += 1;
                        contacts[j] += 1;
                    }
                }
            }
        }
    }

    // Wall containment. In-bowl particles are kept inside the rim circle and
    // press the wall outward; spilled particles roll outside and are kept
    // out. The spoon presses the wall only while its center is inside the
    // rim (it lifts over otherwise).
    Vec2 wall_force{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        Particle& p = state.particles[i];
        Vec2 delta = p.position - state.bowl.center;
        double rho = delta.norm();
        if (was_in[i]) {
            double max_rho = state.bowl.radius - p.radius;
            if (rho > max_rho + 1e-12) {
                Vec2 normal = delta.normalized();
                double overlap = rho - max_rho;
                p.position = state.bowl.center + normal * max_rho;
                wall_force += normal * overlap;
                squeeze[i] += overlap;
                contacts[i] += 1;
            }
        } else {
            double min_rho = state.bowl.radius + p.radius;
            if (rho < min_rho - 1e-12)
                p.position = state.bowl.center + delta.normalized() * min_rho;
        }
    }
    // Curved-side recirculation: contents on the slope slide back toward the
    // flat center unless blocked by a neighbor.
    apply_slope_pull(state, was_in);

    // Spoon-wall ring contact: active while the spoon disc overlaps the rim
    // circle, penetration peaking when the disc is centered on the wall.
    // Pressing from inside shoves the bowl outward, pressing from outside
    // shoves it away from the spoon. The spoon itself is kinematic (it lifts
    // over the rim).
    // Spoon-wall ring contact, from the inside only: the spoon engages the
    // wall while its disc overlaps the rim circle with the spoon center
    // still inside; outside the rim it lifts over and the wall is ignored.
    {
        Vec2 delta = state.spoon - state.bowl.center;
        double q = delta.norm();
        if (q <= state.bowl.radius) {
            double pen = cfg.spoon_radius - (state.bowl.radius - q);
            if (pen > 0.0) wall_force += delta.normalized() * pen;
        }
    }

    if (!state.bowl.fixed) {
        // Stick/slip translation: the bowl yields once the summed wall
        // overlap exceeds the static friction threshold. The sliding speed
        // cap is below the spoon speed, so a determined press digs in deeper
        // instead of being relieved.
        double force = wall_force.norm();
        if (force > cfg.static_friction_threshold) {
            double excess = force - cfg.static_friction_threshold;
            double slide = std::min(cfg.bowl_slide_gain * excess,
                                    cfg.max_action_norm);
            state.bowl.center += wall_force.normalized() * slide;
        }
        // Rim-height lever arm: gentle holds make the bowl slide; a hard
        // commanded drive against the rim acts on the hinge and integrates
        // into tilt.
        state.bowl.tilt +=
            cfg.tilt_gain * std::max(0.0, rim_drive - cfg.tilt_press_threshold) -
            cfg.tilt_restoring * state.bowl.tilt;
        state.bowl.tilt = clamp(state.bowl.tilt, 0.0, M_PI / 2.0);
    }

    // Pile heuristic: squeezed particles ride up in proportion to how hard
    // and how crowded they are. A crowded pile holds its height (slow seep
    // only); once a particle has at most one close neighbor the pile support
    // is gone and the height relaxes quickly. Fully excluded particles are
    // ejected onto the table.
    for (int i = 0; i < n; ++i) {
        Particle& p = state.particles[i];
        if (!was_in[i]) {
            p.height = 0.0;
            continue;
        }
        int crowd = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i || !was_in[j]) continue;
            double reach = 1.3 * (p.radius + state.particles[j].radius);
            if (distance(p.position, state.particles[j].position) < reach) ++crowd;
        }
        p.height += cfg.pile_packing_coefficient * squeeze[i] * contacts[i];
        double decay = crowd >= 2 ? kPileSettleFraction * cfg.pile_decay : cfg.pile_decay;
        p.height -= decay * p.height;
        p.height = clamp(p.height, 0.0, state.bowl.rim_height + 2.0 * p.radius);
        if (cap_ratio(p.height, p.radius, state.bowl.rim_height) >= kFullExclusion) {
            Vec2 dir = (p.position - state.bowl.center).normalized();
            p.position = state.bowl.center + dir * (state.bowl.radius + 2.0 * p.radius);
            p.height = 0.0;
        }
    }

    state.phase = advance_phase(state.phase, cfg.phi_step, cfg.phi_max);
    state.step_count += 1;
    assert_finite(state);

    StepInfo info;
    info.displacements.resize(n);
    info.in_bowl.resize(n);
    for (int i = 0; i < n; ++i) {
        info.displacements[i] = distance(prev_pos[i], state.particles[i].position);
        info.in_bowl[i] = particle_in_bowl(state, state.particles[i]);
    }
    return info;
}

int advance_phase(int phase, int phi_step, int phi_max) {
    if (phi_max <= 0) throw ConfigError("phi_max must be > 0");
    return (phase + phi_step) % phi_max;
}

double observe_d(const WorldState& state) {
    return distance(state.bowl.center, state.bowl.initial_center);
}

double observe_theta(const WorldState& state) {
    return state.bowl.tilt;
}

double observe_V(const WorldState& state) {
    double v = 0.0;
    for (const auto& p : state.particles)
        v = std::max(v, cap_ratio(p.height, p.radius, state.bowl.rim_height));
    return v;
}

std::vector<Displacement> displacements(const WorldState& prev, const WorldState& next) {
    SAFESTIR_REQUIRE(prev.particles.size() == next.particles.size(),
                     "displacements: mismatched particle counts");
    std::vector<Displacement> out(prev.particles.size());
    for (size_t i = 0; i < prev.particles.size(); ++i) {
        out[i].distance = distance(prev.particles[i].position, next.particles[i].position);
        out[i].in_bowl = particle_in_bowl(next, next.particles[i]);
    }
    return out;
}

std::string trajectory_csv_header(int n_particles) {
    std::ostringstream os;
    os << "step,spoon_x,spoon_y,bowl_dx,bowl_dy,tilt,V";
    for (int i = 0; i < n_particles; ++i)
        os << ",p" << i << "_x,p" << i << "_y";
    return os.str();
}

std::string trajectory_csv_row(const WorldState& state) {
    std::ostringstream os;
    os.precision(17);
    Vec2 bowl_off = state.bowl.center - state.bowl.initial_center;
    os << state.step_count << ',' << state.spoon.x << ',' << state.spoon.y << ','
       << bowl_off.x << ',' << bowl_off.y << ',' << state.bowl.tilt << ','
       << observe_V(state);
    for (const auto& p : state.particles)
        os << ',' << p.position.x << ',' << p.position.y;
    return os.str();
}

}  // namespace safestir::sim
