#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "safestir/errors.hpp"
#include "safestir/nn/net.hpp"
#include "safestir/rng.hpp"

using namespace safestir;
using namespace safestir::nn;

namespace {

// Independent naive forward: plain nested loops, no shared code path.
std::vector<double> naive_forward(const DenseNet& net, const std::vector<double>& input) {
    std::vector<double> z(input.size());
    for (size_t i = 0; i < input.size(); ++i) z[i] = input[i] * net.input_scale[i];
    for (int l = 0; l < net.layer_count(); ++l) {
        std::vector<double> a(net.sizes[l + 1], 0.0);
        for (int r = 0; r < net.sizes[l + 1]; ++r) {
            a[r] = net.biases[l][r];
            for (int c = 0; c < net.sizes[l]; ++c) a[r] += net.weights[l](r, c) * z[c];
            switch (net.activations[l]) {
                case Activation::Identity: break;
                case Activation::ReLU: a[r] = a[r] > 0 ? a[r] : 0.0; break;
                case Activation::Tanh: a[r] = std::tanh(a[r]); break;
            }
        }
        z = a;
    }
    for (auto& v : z) v *= net.output_scale;
    return z;
}

double probe_loss(const DenseNet& net, const std::vector<double>& input,
                  const std::vector<double>& coeff) {
    std::vector<double> y = naive_forward(net, input);
    double loss = 0.0;
    for (size_t i = 0; i < y.size(); ++i) loss += coeff[i] * y[i];
    return loss;
}

// Central finite differences over every parameter for the linear probe loss
// sum_i coeff_i * y_i. Inputs near ReLU kinks are rejected by the caller.
bool gradcheck(DenseNet net, Rng& rng, double rel_tol, double h = 1e-5) {
    std::vector<double> input(net.input_size());
    // Resample until no pre-activation sits within h of a ReLU kink.
    for (int attempt = 0; attempt < 100; ++attempt) {
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        GradientTape tape;
        forward(net, input, &tape);
        bool near_kink = false;
        for (int l = 0; l < net.layer_count(); ++l) {
            if (net.activations[l] != Activation::ReLU) continue;
            for (double a : tape.pre_activations[l])
                if (std::abs(a) < 1e-3) near_kink = true;
        }
        if (!near_kink) break;
    }

    std::vector<double> coeff(net.output_size());
    for (auto& c : coeff) c = rng.uniform(-1.0, 1.0);

    GradientTape tape;
    forward(net, input, &tape);
    Gradients analytic = backward(net, tape, coeff);

    auto check = [&](double* param, double grad) {
        double keep = *param;
        *param = keep + h;
        double up = probe_loss(net, input, coeff);
        *param = keep - h;
        double down = probe_loss(net, input, coeff);
        *param = keep;
        double fd = (up - down) / (2.0 * h);
        double denom = std::max({std::abs(fd), std::abs(grad), 1e-6});
        return std::abs(fd - grad) / denom <= rel_tol;
    };

    for (int l = 0; l < net.layer_count(); ++l) {
        for (size_t i = 0; i < net.weights[l].data.size(); ++i)
            if (!check(&net.weights[l].data[i], analytic.weights[l].data[i])) return false;
        for (size_t i = 0; i < net.biases[l].size(); ++i)
            if (!check(&net.biases[l][i], analytic.biases[l][i])) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("forward of a zero-weight net returns the bias") {
    DenseNet net = make_net({3, 2}, {Activation::Identity});
    net.biases[0] = {0.5, -0.25};
    auto y = forward(net, std::vector<double>{1.0, 2.0, 3.0});
    CHECK(y[0] == 0.5);
    CHECK(y[1] == -0.25);
}

TEST_CASE("identity-initialized single layer passes the input through") {
    DenseNet net = make_net({3, 3}, {Activation::Identity});
    for (int i = 0; i < 3; ++i) net.weights[0](i, i) = 1.0;
    std::vector<double> v{0.3, -1.2, 4.5};
    auto y = forward(net, v);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == v[i]);
}

TEST_CASE("forward matches a naive matrix-multiply oracle") {
    Rng rng(41);
    DenseNet net = make_net({3, 4, 2}, {Activation::ReLU, Activation::Tanh},
                            {2.0, 0.5, 1.0}, 0.7);
    init_uniform_fanin(net, rng);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> input{rng.uniform(-1, 1), rng.uniform(-1, 1),
                                  rng.uniform(-1, 1)};
        auto got = forward(net, input);
        auto want = naive_forward(net, input);
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("forward is pure") {
    Rng rng(42);
    DenseNet net = make_net({4, 8, 2}, {Activation::ReLU, Activation::Identity});
    init_uniform_fanin(net, rng);
    std::vector<double> input{0.1, -0.2, 0.3, -0.4};
    CHECK(forward(net, input) == forward(net, input));
}

TEST_CASE("backward on a scalar linear net applies the chain rule") {
    DenseNet net = make_net({1, 1}, {Activation::Identity});
    net.weights[0](0, 0) = 3.0;
    GradientTape tape;
    forward(net, std::vector<double>{2.0}, &tape);
    double one = 1.0;
    Gradients g = backward(net, tape, std::span<const double>(&one, 1));
    CHECK(g.weights[0](0, 0) == 2.0);   // dL/dw = x
    CHECK(g.biases[0][0] == 1.0);
    CHECK(g.input[0] == 3.0);           // dL/dx = w
}

TEST_CASE("rectifier blocks gradients at negative pre-activations") {
    DenseNet net = make_net({1, 1}, {Activation::ReLU});
    net.weights[0](0, 0) = 1.0;
    net.biases[0][0] = -5.0;
    GradientTape tape;
    forward(net, std::vector<double>{1.0}, &tape);
    double one = 1.0;
    Gradients g = backward(net, tape, std::span<const double>(&one, 1));
    CHECK(g.weights[0](0, 0) == 0.0);
    CHECK(g.input[0] == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(43);
    SUBCASE("small mixed nets") {
        for (int trial = 0; trial < 20; ++trial) {
            DenseNet net = make_net({3, 8, 5, 2},
                                    {Activation::ReLU, Activation::ReLU, Activation::Tanh},
                                    {1.5, 1.0, 0.5}, 0.01);
            init_uniform_fanin(net, rng);
            CHECK(gradcheck(net, rng, 1e-4));
        }
    }
    SUBCASE("reduced-width actor and critic shapes") {
        DenseNet actor = make_net({3, 40, 30, 2},
                                  {Activation::ReLU, Activation::ReLU, Activation::Tanh},
                                  {}, 0.01);
        init_uniform_fanin(actor, rng, 3e-3);
        CHECK(gradcheck(actor, rng, 1e-4));

        DenseNet critic = make_net({5, 40, 30, 1},
                                   {Activation::ReLU, Activation::ReLU, Activation::Identity});
        init_uniform_fanin(critic, rng, 3e-3);
        CHECK(gradcheck(critic, rng, 1e-4));
    }
}

TEST_CASE("stale tapes are rejected") {
    Rng rng(44);
    DenseNet net = make_net({2, 4, 1}, {Activation::ReLU, Activation::Identity});
    init_uniform_fanin(net, rng);
    GradientTape tape;
    forward(net, std::vector<double>{0.1, 0.2}, &tape);
    OptimizerState opt = make_adam(0.01);
    Gradients fake = zero_gradients(net);
    fake.weights[0](0, 0) = 1.0;
    apply_gradients(net, fake, opt);
    double one = 1.0;
    CHECK_THROWS_AS(backward(net, tape, std::span<const double>(&one, 1)),
                    std::logic_error);
}

TEST_CASE("apply_gradients: zero gradient leaves the net unchanged under SGD") {
    Rng rng(45);
    DenseNet net = make_net({2, 3, 1}, {Activation::ReLU, Activation::Identity});
    init_uniform_fanin(net, rng);
    DenseNet before = net;
    OptimizerState opt = make_sgd(0.1);
    apply_gradients(net, zero_gradients(net), opt);
    CHECK(net == before);
}

TEST_CASE("plain gradient descent on a scalar parameter") {
    DenseNet net = make_net({1, 1}, {Activation::Identity});
    net.weights[0](0, 0) = 0.5;
    OptimizerState opt = make_sgd(0.1);
    Gradients g = zero_gradients(net);
    g.weights[0](0, 0) = 1.0;
    apply_gradients(net, g, opt);
    CHECK(net.weights[0](0, 0) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("adaptive steps match the reference update formula") {
    DenseNet net = make_net({1, 1}, {Activation::Identity});
    net.weights[0](0, 0) = 0.5;
    OptimizerState opt = make_adam(0.01);

    // Hand-rolled Adam on a scalar.
    double p = 0.5, m = 0.0, v = 0.0;
    std::vector<double> grads{1.0, -0.5, 0.25, 2.0, 0.1};
    for (size_t t = 0; t < grads.size(); ++t) {
        Gradients g = zero_gradients(net);
        g.weights[0](0, 0) = grads[t];
        apply_gradients(net, g, opt);

        m = 0.9 * m + 0.1 * grads[t];
        v = 0.999 * v + 0.001 * grads[t] * grads[t];
        double mhat = m / (1.0 - std::pow(0.9, static_cast<double>(t + 1)));
        double vhat = v / (1.0 - std::pow(0.999, static_cast<double>(t + 1)));
        p -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
        CHECK(net.weights[0](0, 0) == doctest::Approx(p).epsilon(1e-14));
    }
}

TEST_CASE("non-finite gradients raise a training error") {
    DenseNet net = make_net({1, 1}, {Activation::Identity});
    OptimizerState opt = make_adam(0.01);
    Gradients g = zero_gradients(net);
    g.weights[0](0, 0) = std::nan("");
    CHECK_THROWS_AS(apply_gradients(net, g, opt), TrainingError);
}

TEST_CASE("soft_update blends parameters") {
    Rng rng(46);
    DenseNet target = make_net({1, 1}, {Activation::Identity});
    DenseNet source = target;
    source.weights[0](0, 0) = 1.0;

    CHECK(soft_update(target, source, 1.0) == source);
    DenseNet blended = soft_update(target, source, 0.001);
    CHECK(blended.weights[0](0, 0) == doctest::Approx(0.001).epsilon(1e-15));

    DenseNet a = make_net({2, 3, 1}, {Activation::ReLU, Activation::Identity});
    DenseNet b = a;
    init_uniform_fanin(a, rng);
    init_uniform_fanin(b, rng);
    double tau = 0.25;
    DenseNet mixed = soft_update(a, b, tau);
    for (int l = 0; l < a.layer_count(); ++l)
        for (size_t i = 0; i < a.weights[l].data.size(); ++i)
            CHECK(mixed.weights[l].data[i] ==
                  doctest::Approx(tau * b.weights[l].data[i] +
                                  (1 - tau) * a.weights[l].data[i]).epsilon(1e-14));

    // Repeated updates converge geometrically onto the source.
    DenseNet t = a;
    double prev = std::abs(t.weights[0](0, 0) - b.weights[0](0, 0));
    for (int i = 0; i < 30; ++i) {
        soft_update_inplace(t, b, 0.5);
        double now = std::abs(t.weights[0](0, 0) - b.weights[0](0, 0));
        CHECK(now <= prev * 0.5 + 1e-12);
        prev = now;
    }

    DenseNet other = make_net({2, 4, 1}, {Activation::ReLU, Activation::Identity});
    CHECK_THROWS_AS(soft_update(a, other, 0.5), std::logic_error);
}

TEST_CASE("seeded initialization is deterministic") {
    Rng r1(7), r2(7);
    DenseNet a = make_net({3, 40, 30, 2},
                          {Activation::ReLU, Activation::ReLU, Activation::Tanh});
    DenseNet b = a;
    init_uniform_fanin(a, r1, 3e-3);
    init_uniform_fanin(b, r2, 3e-3);
    CHECK(a == b);
}

TEST_CASE("checkpoint round trip and version rejection") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "safestir_nn_test";
    fs::create_directories(dir);
    std::string path = (dir / "net.ckpt").string();

    Rng rng(48);
    DenseNet net = make_net({3, 8, 2}, {Activation::ReLU, Activation::Tanh},
                            {10.0, 10.0, 1.0}, 0.01);
    init_uniform_fanin(net, rng, 3e-3);
    OptimizerState opt = make_adam(1e-4);
    Gradients g = zero_gradients(net);
    g.weights[0](0, 0) = 0.5;
    apply_gradients(net, g, opt);

    save_checkpoint(path, net, &opt, &rng);
    Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.net == net);
    REQUIRE(loaded.optimizer.has_value());
    CHECK(*loaded.optimizer == opt);
    REQUIRE(loaded.rng.has_value());
    CHECK(*loaded.rng == rng);

    // Flip a byte in the version field.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8);
        char bad = 99;
        f.write(&bad, 1);
    }
    CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
    CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()),
                    MissingArtifactError);
    fs::remove_all(dir);
}
