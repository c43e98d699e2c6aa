#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "safestir/nn/net.hpp"
#include "safestir/risk/risk.hpp"
#include "safestir/rl/env.hpp"
#include "safestir/sim/world.hpp"

namespace safestir::skills {

using risk::RiskId;

/// Base skills pursue the task; prevention skills drive one risk's observable
/// back below its deactivation threshold. Compound is the monolithic baseline
/// trained on the summed task-plus-safety reward; it is executed like a base
/// skill but its training reward reads the risk vector.
class SkillKind {
public:
    static SkillKind base() { return SkillKind(Type::Base, {}); }
    static SkillKind prevention(RiskId risk) {
        return SkillKind(Type::Prevention, std::move(risk));
    }
    static SkillKind compound() { return SkillKind(Type::Compound, {}); }

    bool is_base() const { return type_ == Type::Base; }
    bool is_prevention() const { return type_ == Type::Prevention; }
    bool is_compound() const { return type_ == Type::Compound; }
    const RiskId& risk() const { return risk_; }
    std::string label() const;
    static SkillKind from_label(const std::string& label, const RiskId& risk);

    bool operator==(const SkillKind&) const = default;

private:
    enum class Type { Base, Prevention, Compound };
    SkillKind(Type t, RiskId r) : type_(t), risk_(std::move(r)) {}
    Type type_;
    RiskId risk_;
};

using ObservationFn = std::function<std::vector<double>(const sim::WorldState&)>;
using RewardFn = std::function<double(const sim::WorldState& prev,
                                      const sim::WorldState& next,
                                      const risk::RiskVector& risks)>;
using InitialProcedureFn = std::function<sim::WorldState(sim::WorldState)>;

struct SkillSpec {
    std::string name;
    SkillKind kind = SkillKind::base();
    ObservationFn observation;
    RewardFn reward;
    InitialProcedureFn initial_procedure;  // null for skills without one
    nn::DenseNet policy;
};

/// Ordered, append-only skill container with unique names.
class SkillLibrary {
public:
    const std::vector<SkillSpec>& skills() const { return skills_; }
    size_t size() const { return skills_.size(); }
    bool contains(const std::string& name) const;
    const SkillSpec& at(const std::string& name) const;  // ConfigError if absent
    const SkillSpec* executable_default() const;         // first base or compound skill
    const SkillSpec* prevention_for(const RiskId& risk) const;

    friend SkillLibrary register_skill(const SkillLibrary& library, SkillSpec spec);

private:
    std::vector<SkillSpec> skills_;
};

/// Returns a library extended with `spec`; existing skills are untouched.
/// ConfigError on duplicate names.
SkillLibrary register_skill(const SkillLibrary& library, SkillSpec spec);

/// All scalar observables the risk estimators read.
std::map<std::string, double> observables(const sim::WorldState& state);
double observable_for(const sim::WorldState& state, const std::string& parameter_id);

/// [spoon position (2, bowl-relative by default), phase / phi_max].
std::vector<double> stir_observation(const sim::WorldState& state);

/// stir_observation extended with the single observable of the risk.
std::vector<double> prevention_observation(
    const sim::WorldState& state, const RiskId& risk_id,
    const std::vector<risk::RiskEstimator>* risks = nullptr);

/// Network input normalization matching the observation builders.
std::vector<double> stir_observation_scale(const sim::SimConfig& config);
std::vector<double> prevention_observation_scale(
    const sim::SimConfig& config, const RiskId& risk_id,
    const std::vector<risk::RiskEstimator>* risks = nullptr);

/// Sum of per-particle displacements, counting particles in the bowl after
/// the step.
double stir_reward(const sim::WorldState& prev, const sim::WorldState& next);

/// 1 - rho for the given risk. ConfigError if the risk is not in the vector.
double prevention_reward(const risk::RiskVector& risks, const RiskId& risk_id);

/// stir_reward plus the three prevention rewards (slide, overturn, spill).
double compound_reward(const sim::WorldState& prev, const sim::WorldState& next,
                       const risk::RiskVector& risks);

/// Drives the world into a state where the named risk is active, using the
/// world's own generator: slide teleports the bowl, overturn presses the wall
/// along a random direction, spill plows through the contents. Throws
/// ProcedureError once the step budget is exhausted.
sim::WorldState initial_procedure(sim::WorldState state, const RiskId& risk_id,
                                  const std::vector<risk::RiskEstimator>& risks,
                                  int step_budget = 200);

/// Skill factories wiring the standard observation/reward pairs.
SkillSpec make_stir_skill(nn::DenseNet policy);
SkillSpec make_prevention_skill(const RiskId& risk_id, nn::DenseNet policy,
                                const std::vector<risk::RiskEstimator>& risks);
SkillSpec make_compound_skill(nn::DenseNet policy);

/// Library manifest (JSON): skill names, kinds, risk bindings and checkpoint
/// paths. Loading reconstructs the library with policies read back from the
/// referenced checkpoints (paths relative to the manifest directory).
struct ManifestEntry {
    std::string name;
    SkillKind kind = SkillKind::base();
    std::string checkpoint;  // relative path
};

void save_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);
SkillLibrary load_library(const std::string& manifest_path,
                          const std::vector<risk::RiskEstimator>& risks);

/// Training environment for one skill: seeded episode resets, the skill's
/// initial procedure (resampled on procedure failure), per-step risk updates
/// and the skill's own reward.
class SkillEnvironment : public rl::Environment {
public:
    SkillEnvironment(sim::SimConfig config, sim::Setup setup, SkillSpec skill,
                     std::vector<risk::RiskEstimator> risks, std::uint64_t seed,
                     int procedure_budget = 200);

    int observation_size() const override { return obs_size_; }
    int action_size() const override { return 2; }
    double action_bound() const override { return config_.max_action_norm; }
    std::vector<double> reset() override;
    rl::EnvStep step(std::span<const double> action) override;
    std::vector<double> observation_scale() const override { return obs_scale_; }

    const sim::WorldState& world() const { return world_; }
    const std::vector<risk::RiskEstimator>& risks() const { return risks_; }

private:
    sim::SimConfig config_;
    sim::Setup setup_;
    SkillSpec skill_;
    std::vector<risk::RiskEstimator> risks_template_;
    std::vector<risk::RiskEstimator> risks_;
    Rng episode_rng_;
    int procedure_budget_;
    sim::WorldState world_;
    int obs_size_ = 0;
    std::vector<double> obs_scale_;
};

}  // namespace safestir::skills
