#include "safestir/rl/ddpg.hpp"

#include <cmath>
#include <sstream>

#include "safestir/errors.hpp"
#include "safestir/vec2.hpp"

namespace safestir::rl {

int EpsilonSchedule::horizon(int total_episodes) const {
    return static_cast<int>(std::ceil(decay_fraction * total_episodes));
}

double EpsilonSchedule::value(int episode, int total_episodes) const {
    int h = horizon(total_episodes);
    if (h <= 0 || episode >= h) return floor;
    return start + (floor - start) * (static_cast<double>(episode) / h);
}

AgentNets make_agent(const Environment& env, const TrainConfig& cfg, Rng& rng) {
    const int obs = env.observation_size();
    const int act = env.action_size();
    const double bound = env.action_bound();

    std::vector<int> actor_sizes{obs};
    std::vector<int> critic_sizes{obs + act};
    std::vector<nn::Activation> actor_acts, critic_acts;
    for (int h : cfg.hidden_sizes) {
        actor_sizes.push_back(h);
        critic_sizes.push_back(h);
        actor_acts.push_back(nn::Activation::ReLU);
        critic_acts.push_back(nn::Activation::ReLU);
    }
    actor_sizes.push_back(act);
    critic_sizes.push_back(1);
    actor_acts.push_back(nn::Activation::Tanh);
    critic_acts.push_back(nn::Activation::Identity);

    std::vector<double> obs_scale = env.observation_scale();
    std::vector<double> critic_scale = obs_scale;
    for (int i = 0; i < act; ++i) critic_scale.push_back(bound > 0 ? 1.0 / bound : 1.0);

    AgentNets nets;
    nets.actor = nn::make_net(actor_sizes, actor_acts, obs_scale, bound);
    nets.critic = nn::make_net(critic_sizes, critic_acts, critic_scale, 1.0);
    nn::init_uniform_fanin(nets.actor, rng, 3e-3);
    nn::init_uniform_fanin(nets.critic, rng, 3e-3);
    nets.actor_target = nets.actor;
    nets.critic_target = nets.critic;
    nets.actor_opt = nn::make_adam(cfg.actor_lr);
    nets.critic_opt = nn::make_adam(cfg.critic_lr);
    return nets;
}

std::vector<double> select_action(const nn::DenseNet& actor,
                                  std::span<const double> state, OUNoise& noise,
                                  Rng& rng, double epsilon, double action_bound) {
    SAFESTIR_REQUIRE(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must be in [0, 1]");
    std::vector<double> action = forward(actor, state);
    const auto& n = noise.sample(rng);
    SAFESTIR_REQUIRE(n.size() == action.size(), "noise dimension mismatch");
    for (size_t i = 0; i < action.size(); ++i)
        action[i] = clamp(action[i] + epsilon * n[i], -action_bound, action_bound);
    return action;
}

namespace {

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

std::vector<double> td_targets(const nn::DenseNet& critic_target,
                               const nn::DenseNet& actor_target,
                               const ReplayBuffer& buffer,
                               std::span<const size_t> indices, double gamma) {
    std::vector<double> targets(indices.size());
    for (size_t k = 0; k < indices.size(); ++k) {
        const Transition& t = buffer.at(indices[k]);
        double boot = 0.0;
        if (!t.terminal) {
            std::vector<double> a2 = forward(actor_target, t.next_state);
            std::vector<double> q2 = forward(critic_target, concat(t.next_state, a2));
            boot = gamma * q2[0];
        }
        targets[k] = t.reward + boot;
    }
    return targets;
}

StepLosses train_step(AgentNets& nets, const ReplayBuffer& buffer,
                      const TrainConfig& cfg, Rng& rng) {
    SAFESTIR_REQUIRE(buffer.size() >= static_cast<size_t>(cfg.batch_size),
                     "train_step: buffer smaller than batch");
    const double inv_batch = 1.0 / cfg.batch_size;
    std::vector<size_t> idx = buffer.sample_indices(cfg.batch_size, rng);
    std::vector<double> targets =
        td_targets(nets.critic_target, nets.actor_target, buffer, idx, cfg.gamma);

    StepLosses losses;

    // Critic regression toward the bootstrapped targets.
    nn::Gradients critic_grads = nn::zero_gradients(nets.critic);
    for (size_t k = 0; k < idx.size(); ++k) {
        const Transition& t = buffer.at(idx[k]);
        nn::GradientTape tape;
        std::vector<double> in = concat(t.state, t.action);
        double q = forward(nets.critic, in, &tape)[0];
        double err = q - targets[k];
        losses.critic_loss += err * err * inv_batch;
        double dq = 2.0 * err * inv_batch;
        nn::Gradients g = backward(nets.critic, tape, std::span<const double>(&dq, 1));
        nn::accumulate(critic_grads, g);
    }
    if (!std::isfinite(losses.critic_loss))
        throw TrainingError("critic loss is not finite");
    nn::apply_gradients(nets.critic, critic_grads, nets.critic_opt);

    // Actor ascent on the (updated) critic via chained gradients.
    nn::Gradients actor_grads = nn::zero_gradients(nets.actor);
    const int obs = nets.actor.input_size();
    for (size_t k = 0; k < idx.size(); ++k) {
        const Transition& t = buffer.at(idx[k]);
        nn::GradientTape actor_tape;
        std::vector<double> a = forward(nets.actor, t.state, &actor_tape);
        nn::GradientTape critic_tape;
        std::vector<double> in = concat(t.state, a);
        double q = forward(nets.critic, in, &critic_tape)[0];
        losses.actor_loss -= q * inv_batch;
        double dq = 1.0;
        nn::Gradients cg = backward(nets.critic, critic_tape, std::span<const double>(&dq, 1));
        std::vector<double> dq_da(cg.input.begin() + obs, cg.input.end());
        for (auto& v : dq_da) v *= -inv_batch;  // ascend Q
        nn::Gradients g = backward(nets.actor, actor_tape, dq_da);
        nn::accumulate(actor_grads, g);
    }
    if (!std::isfinite(losses.actor_loss))
        throw TrainingError("actor loss is not finite");
    nn::apply_gradients(nets.actor, actor_grads, nets.actor_opt);
    if (cfg.actor_weight_decay > 0.0) {
        double shrink = 1.0 - cfg.actor_lr * cfg.actor_weight_decay;
        for (auto& w : nets.actor.weights)
            for (auto& v : w.data) v *= shrink;
        for (auto& b : nets.actor.biases)
            for (auto& v : b) v *= shrink;
    }

    if (cfg.tau > 0.0) {  // tau == 0 freezes the targets
        nn::soft_update_inplace(nets.actor_target, nets.actor, cfg.tau);
        nn::soft_update_inplace(nets.critic_target, nets.critic, cfg.tau);
    }
    return losses;
}

double evaluate(Environment& env, const nn::DenseNet& actor, int rollouts,
                int steps_per_episode) {
    double total = 0.0;
    for (int r = 0; r < rollouts; ++r) {
        std::vector<double> obs = env.reset();
        double ret = 0.0;
        for (int s = 0; s < steps_per_episode; ++s) {
            std::vector<double> a = forward(actor, obs);
            EnvStep step = env.step(a);
            ret += step.reward;
            obs = std::move(step.observation);
        }
        total += ret;
    }
    return rollouts > 0 ? total / rollouts : 0.0;
}

TrainingResult run_training(Environment& env, const TrainConfig& cfg,
                            const ProgressFn& progress) {
    Rng rng(cfg.seed);
    AgentNets nets = make_agent(env, cfg, rng);
    ReplayBuffer buffer(cfg.replay_capacity);
    OUNoise noise(env.action_size(), cfg.noise_mu, cfg.noise_sigma, cfg.noise_theta,
                  cfg.noise_dt);
    const double bound = env.action_bound();

    TrainingResult result;
    result.best_actor = nets.actor;
    result.final_actor = nets.actor;
    result.final_critic = nets.critic;

    for (int episode = 0; episode < cfg.episodes; ++episode) {
        double epsilon = cfg.epsilon.value(episode, cfg.episodes);
        std::vector<double> obs = env.reset();
        noise.reset();

        EpisodeStats stats;
        stats.episode = episode;
        stats.epsilon = epsilon;
        int train_steps = 0;
        for (int s = 0; s < cfg.steps_per_episode; ++s) {
            std::vector<double> action =
                select_action(nets.actor, obs, noise, rng, epsilon, bound);
            EnvStep step = env.step(action);
            stats.train_return += step.reward;
            // Fixed-length episodes are time-limit truncations, not true
            // terminals; bootstrapping continues through them.
            buffer.insert({obs, action, step.observation, step.reward, false});
            obs = std::move(step.observation);
            size_t ready = std::max<size_t>(cfg.batch_size, cfg.warmup_steps);
            if (buffer.size() >= ready) {
                for (int u = 0; u < std::max(1, cfg.updates_per_step); ++u) {
                    StepLosses l = train_step(nets, buffer, cfg, rng);
                    stats.actor_loss += l.actor_loss;
                    stats.critic_loss += l.critic_loss;
                    ++train_steps;
                }
            }
        }
        if (train_steps > 0) {
            stats.actor_loss /= train_steps;
            stats.critic_loss /= train_steps;
        }

        bool eval_now = ((episode + 1) % cfg.eval_period == 0) ||
                        (episode == cfg.episodes - 1);
        if (eval_now) {
            stats.eval_return =
                evaluate(env, nets.actor, cfg.eval_rollouts, cfg.steps_per_episode);
            stats.evaluated = true;
            bool is_best = stats.eval_return > result.best_eval;
            if (is_best) {
                result.best_eval = stats.eval_return;
                result.best_episode = episode;
                result.best_actor = nets.actor;
            }
            if (progress) progress(episode, nets.actor, stats.eval_return, is_best);
        }
        result.curve.push_back(stats);
    }

    result.final_actor = nets.actor;
    result.final_critic = nets.critic;
    return result;
}

std::string curve_csv_header() {
    return "episode,train_return,eval_return,actor_loss,critic_loss,epsilon";
}

std::string curve_csv_row(const EpisodeStats& s) {
    std::ostringstream os;
    os.precision(17);
    os << s.episode << ',' << s.train_return << ',';
    if (s.evaluated)
        os << s.eval_return;
    else
        os << "nan";
    os << ',' << s.actor_loss << ',' << s.critic_loss << ',' << s.epsilon;
    return os.str();
}

}  // namespace safestir::rl
