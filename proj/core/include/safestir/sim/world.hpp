#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safestir/rng.hpp"
#include "safestir/vec2.hpp"

namespace safestir::sim {

/// Sphere-shaped particle: planar position plus a pseudo-vertical height used
/// only by the spill observable. Heights model transient agitation (particles
/// riding up the heap/wall while squeezed), not static stacking.
struct Particle {
    Vec2 position;
    double height = 0.0;  // center height above the bowl floor, meters
    double radius = 0.01;

    bool operator==(const Particle&) const = default;
};

struct BowlState {
    Vec2 center;
    Vec2 initial_center;
    double tilt = 0.0;       // radians, 0 = upright
    double radius = 0.08;    // inner radius
    double rim_height = 0.08;
    bool fixed = false;      // fixed setup: never translates or tilts

    bool operator==(const BowlState&) const = default;
};

/// All tunables of the simulation. Physics coefficients (friction, tilt,
/// pile) have no counterpart in a real engine; they are calibrated so the
/// three failures (slide, overturn, spill) are reachable at desk scale.
struct SimConfig {
    int n_particles = 10;
    double eta = 0.10;               // spoon workspace half-extent, meters
    int phi_max = 50;
    int phi_step = 1;
    double max_action_norm = 0.01;   // meters per step

    double bowl_radius = 0.08;
    double rim_height = 0.08;
    double particle_radius = 0.016;
    double spoon_radius = 0.015;

    double static_friction_threshold = 0.001;  // summed wall overlap, meters
    double bowl_slide_gain = 2.5;    // bowl displacement per excess overlap
    double tilt_gain = 10.0;         // rad per meter of deep rim penetration
    double tilt_press_threshold = 0.006;  // commanded rim drive where tipping starts
    double tilt_restoring = 0.05;    // proportional tilt decay per step
    double rim_climb_factor = 0.15;  // fraction of outward motion left in the wall zone
    double pile_packing_coefficient = 0.25;  // height gain per overlap*contact
    double pile_decay = 0.05;        // height decay per step once unsupported
    double bowl_flat_radius = 0.005; // flat center; the sides slope inward
    double rim_return_rate = 0.003;  // inward slide per step on the slope

    // Skill observations report the spoon relative to the bowl center by
    // default; switch off for table-absolute coordinates.
    bool spoon_frame_bowl_relative = true;

    std::uint64_t seed = 0;

    bool operator==(const SimConfig&) const = default;
};

enum class Setup { Fixed, Unrestricted };

struct WorldState {
    Vec2 spoon;
    BowlState bowl;
    std::vector<Particle> particles;
    int phase = 0;
    long step_count = 0;
    Rng rng;
    SimConfig config;

    bool operator==(const WorldState&) const = default;
};

/// Per-step data needed by reward functions.
struct StepInfo {
    std::vector<double> displacements;  // per-particle planar displacement
    std::vector<bool> in_bowl;          // membership after the step
};

struct Displacement {
    double distance = 0.0;
    bool in_bowl = false;
};

/// Fraction of a sphere's volume above the rim plane (spherical cap over
/// full sphere volume). 0 fully below, 1 fully above, 0.5 centered at rim.
double cap_ratio(double height, double radius, double rim_height);

/// Particle membership: planar distance <= bowl radius and not fully above
/// the rim.
bool particle_in_bowl(const WorldState& state, const Particle& p);

/// Validates config; throws ConfigError on bad parameters or when the
/// particles cannot be packed into the bowl.
WorldState reset(const SimConfig& config, Setup setup);

/// Advances the world by one control step (one 50 ms window). The action is
/// sanitized (non-finite components zeroed, norm clipped) and the spoon is
/// clamped to the workspace box.
StepInfo step(WorldState& state, Vec2 action);

/// (phase + phi_step) mod phi_max. ConfigError if phi_max <= 0.
int advance_phase(int phase, int phi_step, int phi_max);

/// Distance between current and initial bowl center.
double observe_d(const WorldState& state);

/// Current bowl tilt minus initial tilt (initial tilt is always 0).
double observe_theta(const WorldState& state);

/// Maximum excluded volume ratio over all particles.
double observe_V(const WorldState& state);

/// Per-particle planar displacement between two states plus membership in
/// `next`. Particle counts must match.
std::vector<Displacement> displacements(const WorldState& prev, const WorldState& next);

/// CSV trace of a trajectory: step, spoon, bowl offset, tilt, V, particles.
std::string trajectory_csv_header(int n_particles);
std::string trajectory_csv_row(const WorldState& state);

}  // namespace safestir::sim
