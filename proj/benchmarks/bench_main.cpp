#include <benchmark/benchmark.h>

#include "safestir/nn/net.hpp"
#include "safestir/rl/ddpg.hpp"
#include "safestir/sim/world.hpp"
#include "safestir/skills/skills.hpp"

using namespace safestir;

static void SimStep(benchmark::State& state) {
    sim::SimConfig cfg;
    cfg.n_particles = static_cast<int>(state.range(0));
    cfg.particle_radius = cfg.n_particles > 20 ? 0.007 : 0.01;
    sim::WorldState world = sim::reset(cfg, sim::Setup::Unrestricted);
    Rng rng(1);
    for (auto _ : state) {
        sim::StepInfo info =
            sim::step(world, {rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)});
        benchmark::DoNotOptimize(info);
    }
}
BENCHMARK(SimStep)->Arg(10)->Arg(40);

static void NetForward(benchmark::State& state) {
    Rng rng(2);
    int h1 = static_cast<int>(state.range(0));
    int h2 = static_cast<int>(state.range(1));
    nn::DenseNet net = nn::make_net(
        {4, h1, h2, 2},
        {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Tanh});
    nn::init_uniform_fanin(net, rng);
    std::vector<double> input{0.02, -0.01, 0.5, 0.04};
    for (auto _ : state) {
        auto y = nn::forward(net, input);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(NetForward)->Args({40, 30})->Args({400, 300});

static void NetBackward(benchmark::State& state) {
    Rng rng(3);
    int h1 = static_cast<int>(state.range(0));
    int h2 = static_cast<int>(state.range(1));
    nn::DenseNet net = nn::make_net(
        {4, h1, h2, 1},
        {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Identity});
    nn::init_uniform_fanin(net, rng);
    std::vector<double> input{0.02, -0.01, 0.5, 0.04};
    double one = 1.0;
    for (auto _ : state) {
        nn::GradientTape tape;
        nn::forward(net, input, &tape);
        auto grads = nn::backward(net, tape, std::span<const double>(&one, 1));
        benchmark::DoNotOptimize(grads);
    }
}
BENCHMARK(NetBackward)->Args({40, 30})->Args({400, 300});

static void TrainStep(benchmark::State& state) {
    Rng rng(4);
    sim::SimConfig cfg;
    auto risks = risk::default_estimators();
    skills::SkillEnvironment env(cfg, sim::Setup::Fixed, skills::make_stir_skill({}),
                                 risks, 9);
    rl::TrainConfig tc;
    tc.hidden_sizes = {static_cast<int>(state.range(0)),
                       static_cast<int>(state.range(1))};
    rl::AgentNets nets = rl::make_agent(env, tc, rng);
    rl::ReplayBuffer buffer(tc.replay_capacity);
    auto obs = env.reset();
    for (int i = 0; i < 256; ++i) {
        std::vector<double> action{rng.uniform(-0.01, 0.01), rng.uniform(-0.01, 0.01)};
        auto step = env.step(action);
        buffer.insert({obs, action, step.observation, step.reward, false});
        obs = step.observation;
    }
    for (auto _ : state) {
        auto losses = rl::train_step(nets, buffer, tc, rng);
        benchmark::DoNotOptimize(losses);
    }
}
BENCHMARK(TrainStep)->Args({40, 30})->Args({400, 300});

static void RiskUpdateAll(benchmark::State& state) {
    auto risks = risk::default_estimators();
    std::map<std::string, double> obs{{"d", 0.03}, {"theta", 0.2}, {"V", 0.5}};
    for (auto _ : state) {
        auto rv = risk::update_all(risks, obs);
        benchmark::DoNotOptimize(rv);
    }
}
BENCHMARK(RiskUpdateAll);

BENCHMARK_MAIN();
