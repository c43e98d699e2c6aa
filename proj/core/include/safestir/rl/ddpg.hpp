#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "safestir/nn/net.hpp"
#include "safestir/rl/env.hpp"
#include "safestir/rl/ou_noise.hpp"
#include "safestir/rl/replay.hpp"
#include "safestir/rng.hpp"

namespace safestir::rl {

/// Linear decay from `start` to `floor` over the first `decay_fraction` of
/// episodes, flat afterwards.
struct EpsilonSchedule {
    double start = 1.0;
    double floor = 0.05;
    double decay_fraction = 0.8;

    double value(int episode, int total_episodes) const;
    int horizon(int total_episodes) const;
};

struct TrainConfig {
    int episodes = 200;
    int steps_per_episode = 200;
    int batch_size = 128;
    double gamma = 0.99;
    double actor_lr = 1e-4;
    double critic_lr = 1e-4;
    double tau = 0.005;
    size_t replay_capacity = 100000;
    int eval_period = 10;    // evaluate every K episodes
    int eval_rollouts = 5;
    int warmup_steps = 1000;  // transitions collected before updates start
    int updates_per_step = 1;
    // Decoupled actor weight decay; keeps the squashed outputs responsive on
    // sparse-reward tasks where a lucky early direction would otherwise pin
    // the policy.
    double actor_weight_decay = 0.0;
    EpsilonSchedule epsilon;
    double noise_mu = 0.0;
    double noise_sigma = 1.0;
    double noise_theta = 0.15;
    double noise_dt = 2e-3;
    std::vector<int> hidden_sizes = {40, 30};
    std::uint64_t seed = 0;
};

/// Actor/critic pair plus slowly tracking target copies.
struct AgentNets {
    nn::DenseNet actor;
    nn::DenseNet critic;
    nn::DenseNet actor_target;
    nn::DenseNet critic_target;
    nn::OptimizerState actor_opt;
    nn::OptimizerState critic_opt;
};

/// Networks sized for the environment: actor obs->hidden->action (tanh output
/// scaled to the action bound), critic [obs, action]->hidden->1.
AgentNets make_agent(const Environment& env, const TrainConfig& cfg, Rng& rng);

/// actor(state) + epsilon * noise, clipped per component to the bound.
std::vector<double> select_action(const nn::DenseNet& actor,
                                  std::span<const double> state, OUNoise& noise,
                                  Rng& rng, double epsilon, double action_bound);

/// Bootstrapped critic targets r + gamma * (1 - terminal) * Q'(s', pi'(s'))
/// for the given buffer rows; uses target networks only.
std::vector<double> td_targets(const nn::DenseNet& critic_target,
                               const nn::DenseNet& actor_target,
                               const ReplayBuffer& buffer,
                               std::span<const size_t> indices, double gamma);

struct StepLosses {
    double critic_loss = 0.0;
    double actor_loss = 0.0;  // minus the mean critic value of pi(s)
};

/// One gradient step on a sampled batch: critic regression toward the TD
/// target, actor ascent through the critic, soft target update.
StepLosses train_step(AgentNets& nets, const ReplayBuffer& buffer,
                      const TrainConfig& cfg, Rng& rng);

/// Mean return of noise-free rollouts.
double evaluate(Environment& env, const nn::DenseNet& actor, int rollouts,
                int steps_per_episode);

struct EpisodeStats {
    int episode = 0;
    double train_return = 0.0;
    double eval_return = std::numeric_limits<double>::quiet_NaN();
    bool evaluated = false;
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double epsilon = 0.0;
};

struct TrainingResult {
    nn::DenseNet best_actor;
    double best_eval = -std::numeric_limits<double>::infinity();
    int best_episode = -1;
    nn::DenseNet final_actor;
    nn::DenseNet final_critic;
    std::vector<EpisodeStats> curve;
};

/// Called after each evaluation with the current actor; `is_best` marks a new
/// best checkpoint.
using ProgressFn = std::function<void(int episode, const nn::DenseNet& actor,
                                      double eval_return, bool is_best)>;

/// Full training loop: per episode, roll out with exploration noise and train
/// per step once the buffer holds a batch; every eval_period episodes run
/// noise-free evaluations and keep the best actor seen.
TrainingResult run_training(Environment& env, const TrainConfig& cfg,
                            const ProgressFn& progress = nullptr);

/// Training curve CSV (episode, train_return, eval_return, actor_loss,
/// critic_loss, epsilon).
std::string curve_csv_header();
std::string curve_csv_row(const EpisodeStats& s);

}  // namespace safestir::rl
