#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safestir/risk/risk.hpp"
#include "safestir/skills/skills.hpp"

namespace safestir::arb {

using risk::RiskId;

/// Risk ids in descending priority. The default encodes overturn > spill >
/// slide; it is config data because failure importance is setup-dependent.
struct PriorityTable {
    std::vector<RiskId> order;

    static PriorityTable standard() {
        return {{risk::kOverturn, risk::kSpill, risk::kSlide}};
    }
};

/// Base skill when every risk reads 0, otherwise the prevention skill of the
/// highest-priority active risk. ArbitrationError (naming the risk) when an
/// active risk has no registered prevention skill.
const skills::SkillSpec& select(const risk::RiskVector& risks,
                                const PriorityTable& priorities,
                                const skills::SkillLibrary& library);

struct TraceRecord {
    int step = 0;
    double d = 0.0;
    double theta = 0.0;
    double V = 0.0;
    std::vector<std::pair<RiskId, int>> rho;
    std::string skill;
};

using SelectionTrace = std::vector<TraceRecord>;

/// Table-row material for one episode.
struct EpisodeMetrics {
    double stir_reward = 0.0;     // episode sum of the stir reward
    int spill_activations = 0;    // Safe -> Risky transitions of the spill FSM
    double mean_d = 0.0;
    double mean_theta = 0.0;
    double max_V = 0.0;
    int steps = 0;
    bool aborted = false;
    std::string abort_reason;
};

struct EpisodeOptions {
    int steps = 300;
    std::optional<RiskId> start_risk;  // run this risk's initial procedure first
    int trace_particle = -1;           // >= 0 records that particle's positions
};

struct EpisodeResult {
    EpisodeMetrics metrics;
    SelectionTrace trace;
    std::vector<Vec2> particle_track;
};

/// Sequential control loop: update risk FSMs from the observables, select a
/// skill, query its policy without exploration noise, step the world. When
/// the library holds no prevention skills the single base/compound skill
/// runs throughout with risks tracked passively (the baseline conditions).
/// Arbitration errors abort the episode with the partial trace kept.
EpisodeResult run_episode(const skills::SkillLibrary& library,
                          const PriorityTable& priorities,
                          std::vector<risk::RiskEstimator> risks,
                          sim::WorldState world, const EpisodeOptions& options);

std::string trace_csv_header(const std::vector<risk::RiskEstimator>& risks);
std::string trace_csv_row(const TraceRecord& rec);

}  // namespace safestir::arb
