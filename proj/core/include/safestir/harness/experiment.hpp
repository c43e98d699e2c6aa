#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safestir/harness/config.hpp"
#include "safestir/rl/ddpg.hpp"
#include "safestir/skills/skills.hpp"

namespace safestir::harness {

/// Atomic write (temp file + rename).
void write_file(const std::string& path, const std::string& content);

/// Skill spec (without a trained policy) for a trainable skill id:
/// stir, slide, overturn, spill, compound.
skills::SkillSpec skill_spec_for(const std::string& skill_name,
                                 const ExperimentConfig& config);

/// Per-skill training configuration (seed plus skill-specific adjustments).
rl::TrainConfig training_config_for(const std::string& skill_name,
                                    const ExperimentConfig& config);

/// Deterministic per-skill seeds derived from the master seed.
std::uint64_t train_seed(const ExperimentConfig& config, const std::string& skill_name);

struct TrainOutcome {
    std::string checkpoint;  // <out_root>/<skill>_best.ckpt
    std::string curve_csv;   // <out_root>/<skill>_curve.csv
    double best_eval = 0.0;
    int best_episode = -1;
};

/// Trains one skill and writes its best checkpoint (plus numbered improvement
/// checkpoints) and training curve.
TrainOutcome cmd_train(const std::string& skill_name, const ExperimentConfig& config,
                       const std::string& out_root);

/// Loads the condition's library from <out_root>/<skill>_best.ckpt files.
/// MissingArtifactError names the first absent checkpoint.
skills::SkillLibrary build_library(const ExperimentConfig& config,
                                   const Condition& condition,
                                   const std::string& out_root);

/// Writes a manifest referencing the skills' best checkpoints.
std::string write_library_manifest(const ExperimentConfig& config,
                                   const std::vector<std::string>& skill_names,
                                   const std::string& out_root,
                                   const std::string& file_name);

struct AggregateMetrics {
    std::string model;
    int episodes = 0;
    double stir_mean = 0.0, stir_std = 0.0;
    double spill_mean = 0.0, spill_std = 0.0;
    double slide_mean = 0.0, slide_std = 0.0;
    double overturn_mean = 0.0, overturn_std = 0.0;
    bool slide_na = false;
    bool overturn_na = false;
};

/// Runs the condition for the configured number of episodes and writes
/// episodes.csv, metrics.csv, trace_episode0.csv, library.manifest.json and
/// config.snapshot under <out_root>/<condition>/.
AggregateMetrics cmd_eval(const ExperimentConfig& config, const std::string& out_root);

/// Reads metrics.csv back from a condition directory.
AggregateMetrics read_metrics(const std::string& metrics_csv);

struct ComparePair {
    std::string metric;
    std::string model_a, model_b;
    double mean_a = 0.0, mean_b = 0.0;
    char ordering = '=';  // '<', '>', '='
};

struct CompareReport {
    std::vector<AggregateMetrics> models;
    std::vector<ComparePair> pairs;
    // Paper-direction flags; unset when the involved conditions are absent.
    std::optional<bool> stir_tradeoff_holds;   // pi_b-F > pi_b-U > L4-U
    std::optional<bool> spill_reduction_holds; // spill(L4-U) < spill(pi_b-U)
    std::optional<bool> slide_reduction_holds; // d(L4-U) < d(pi_b-U)
    std::string text;
};

/// Scans <results_dir>/*/metrics.csv, emits pairwise orderings and checks the
/// qualitative orderings; also writes <results_dir>/compare.csv.
CompareReport cmd_compare(const std::string& results_dir);

/// One matched-seed episode of the condition recording particle K; writes
/// <out_root>/<condition>/trace_particle<K>.csv (step, x, y, skill) and
/// returns its path.
std::string cmd_trace(const ExperimentConfig& config, int particle,
                      const std::string& out_root);

}  // namespace safestir::harness
