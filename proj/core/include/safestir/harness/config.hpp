#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safestir/arb/arbiter.hpp"
#include "safestir/risk/risk.hpp"
#include "safestir/rl/ddpg.hpp"
#include "safestir/sim/world.hpp"

namespace safestir::harness {

struct RiskSpec {
    std::string id;
    std::string parameter;
    double kappa_a = 0.0;
    double kappa_d = 0.0;
};

struct EvalConfig {
    int episodes = 20;
    int steps = 300;
    int trace_particle = 0;
};

/// Full experiment description. A condition id fixes the setup (trailing -F
/// fixed, -U unrestricted) and the library composition; "custom" takes both
/// from custom_setup / custom_skills.
struct ExperimentConfig {
    int schema_version = 1;
    std::string condition = "L4-U";
    std::string preset = "desk";  // desk | paper
    std::uint64_t seed = 7;
    sim::SimConfig sim;
    rl::TrainConfig train;
    std::vector<RiskSpec> risks;
    std::vector<std::string> priority;
    EvalConfig eval;
    std::string output_dir = "runs";
    std::string custom_setup = "unrestricted";
    std::vector<std::string> custom_skills;
};

/// Built-in presets: `desk` (10 particles, 200x200 training, 40/30 nets) and
/// `paper` (40 particles, 1500x500 training, 400/300 nets).
ExperimentConfig default_config(const std::string& preset = "desk");

/// Reads a JSON config; absent fields fall back to the preset named in the
/// file. Parse errors report the line number.
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of the fully resolved config (written as config.snapshot).
std::string config_json(const ExperimentConfig& config);

/// FNV-1a hash of the canonical JSON, stamped into every produced CSV.
std::string config_hash(const ExperimentConfig& config);

std::vector<risk::RiskEstimator> estimators(const ExperimentConfig& config);
arb::PriorityTable priority_table(const ExperimentConfig& config);

struct Condition {
    std::string id;
    sim::Setup setup = sim::Setup::Unrestricted;
    std::vector<std::string> skill_names;  // library composition, in order
};

/// Maps a condition id onto setup + library composition. ConfigError on an
/// unknown id.
Condition resolve_condition(const ExperimentConfig& config);

/// Setup a skill is trained in: stir and spill prevention use the fixed
/// bowl, slide/overturn prevention and the compound baseline train
/// unrestricted.
sim::Setup training_setup(const std::string& skill_name);

/// Known trainable skill names: stir, slide, overturn, spill, compound.
bool known_skill(const std::string& skill_name);

}  // namespace safestir::harness
