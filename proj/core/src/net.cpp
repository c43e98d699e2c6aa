#include "safestir/nn/net.hpp"

#include <cmath>

#include "safestir/errors.hpp"

namespace safestir::nn {

namespace {

double activate(Activation act, double a) {
    switch (act) {
        case Activation::Identity: return a;
        case Activation::ReLU: return a > 0.0 ? a : 0.0;
        case Activation::Tanh: return std::tanh(a);
    }
    return a;
}

double activate_grad(Activation act, double a) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::ReLU: return a > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            double t = std::tanh(a);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

double param_probe(const DenseNet& net) {
    double probe = static_cast<double>(net.parameter_count());
    if (!net.weights.empty() && !net.weights.front().data.empty())
        probe += net.weights.front().data.front();
    if (!net.biases.empty() && !net.biases.back().empty())
        probe += net.biases.back().back();
    return probe;
}

}  // namespace

size_t DenseNet::parameter_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += w.data.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

bool DenseNet::same_architecture(const DenseNet& o) const {
    return sizes == o.sizes && activations == o.activations;
}

DenseNet make_net(std::vector<int> sizes, std::vector<Activation> activations,
                  std::vector<double> input_scale, double output_scale) {
    SAFESTIR_REQUIRE(sizes.size() >= 2, "network needs at least input and output layers");
    SAFESTIR_REQUIRE(activations.size() == sizes.size() - 1,
                     "one activation per layer required");
    DenseNet net;
    net.sizes = std::move(sizes);
    net.activations = std::move(activations);
    if (input_scale.empty())
        input_scale.assign(net.sizes.front(), 1.0);
    SAFESTIR_REQUIRE(static_cast<int>(input_scale.size()) == net.sizes.front(),
                     "input_scale length must match input size");
    net.input_scale = std::move(input_scale);
    net.output_scale = output_scale;
    for (size_t l = 0; l + 1 < net.sizes.size(); ++l) {
        net.weights.emplace_back(net.sizes[l + 1], net.sizes[l]);
        net.biases.emplace_back(net.sizes[l + 1], 0.0);
    }
    return net;
}

void init_uniform_fanin(DenseNet& net, Rng& rng, double final_layer_range) {
    for (int l = 0; l < net.layer_count(); ++l) {
        double range = 1.0 / std::sqrt(static_cast<double>(net.sizes[l]));
        if (final_layer_range > 0.0 && l == net.layer_count() - 1)
            range = final_layer_range;
        for (auto& w : net.weights[l].data) w = rng.uniform(-range, range);
        for (auto& b : net.biases[l]) b = rng.uniform(-range, range);
    }
}

std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            GradientTape* tape) {
    SAFESTIR_REQUIRE(static_cast<int>(input.size()) == net.input_size(),
                     "forward: input length mismatch");
    std::vector<double> z(input.size());
    for (size_t i = 0; i < input.size(); ++i) z[i] = input[i] * net.input_scale[i];

    if (tape) {
        tape->layer_inputs.assign(1, z);
        tape->pre_activations.clear();
    }
    for (int l = 0; l < net.layer_count(); ++l) {
        const Matrix& w = net.weights[l];
        std::vector<double> a(w.rows);
        for (int r = 0; r < w.rows; ++r) {
            double sum = net.biases[l][r];
            const double* wrow = &w.data[static_cast<size_t>(r) * w.cols];
            for (int c = 0; c < w.cols; ++c) sum += wrow[c] * z[c];
            a[r] = sum;
        }
        if (tape) tape->pre_activations.push_back(a);
        z.resize(a.size());
        for (size_t i = 0; i < a.size(); ++i) z[i] = activate(net.activations[l], a[i]);
        if (tape && l + 1 < net.layer_count()) tape->layer_inputs.push_back(z);
    }
    for (auto& v : z) v *= net.output_scale;
    if (tape) {
        tape->param_probe = param_probe(net);
        tape->valid = true;
    }
    return z;
}

Gradients backward(const DenseNet& net, const GradientTape& tape,
                   std::span<const double> output_gradient) {
    SAFESTIR_REQUIRE(tape.valid, "backward: tape not produced by a forward pass");
    SAFESTIR_REQUIRE(static_cast<int>(tape.layer_inputs.size()) == net.layer_count() &&
                         static_cast<int>(tape.pre_activations.size()) == net.layer_count(),
                     "backward: tape does not match network depth");
    SAFESTIR_REQUIRE(tape.param_probe == param_probe(net),
                     "backward: stale tape (parameters changed since forward)");
    SAFESTIR_REQUIRE(static_cast<int>(output_gradient.size()) == net.output_size(),
                     "backward: output gradient length mismatch");

    Gradients grads = zero_gradients(net);
    std::vector<double> g(output_gradient.begin(), output_gradient.end());
    for (auto& v : g) v *= net.output_scale;

    for (int l = net.layer_count() - 1; l >= 0; --l) {
        const Matrix& w = net.weights[l];
        const auto& a = tape.pre_activations[l];
        const auto& zin = tape.layer_inputs[l];
        SAFESTIR_REQUIRE(static_cast<int>(zin.size()) == w.cols &&
                             static_cast<int>(a.size()) == w.rows,
                         "backward: tape shape mismatch");
        std::vector<double> da(w.rows);
        for (int r = 0; r < w.rows; ++r)
            da[r] = g[r] * activate_grad(net.activations[l], a[r]);
        for (int r = 0; r < w.rows; ++r) {
            double* grow = &grads.weights[l].data[static_cast<size_t>(r) * w.cols];
            for (int c = 0; c < w.cols; ++c) grow[c] = da[r] * zin[c];
            grads.biases[l][r] = da[r];
        }
        std::vector<double> gprev(w.cols, 0.0);
        for (int r = 0; r < w.rows; ++r) {
            const double* wrow = &w.data[static_cast<size_t>(r) * w.cols];
            for (int c = 0; c < w.cols; ++c) gprev[c] += wrow[c] * da[r];
        }
        g = std::move(gprev);
    }
    grads.input.resize(g.size());
    for (size_t i = 0; i < g.size(); ++i) grads.input[i] = g[i] * net.input_scale[i];
    return grads;
}

Gradients zero_gradients(const DenseNet& net) {
    Gradients g;
    for (int l = 0; l < net.layer_count(); ++l) {
        g.weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    g.input.assign(net.input_size(), 0.0);
    return g;
}

void accumulate(Gradients& acc, const Gradients& g) {
    for (size_t l = 0; l < acc.weights.size(); ++l) {
        for (size_t i = 0; i < acc.weights[l].data.size(); ++i)
            acc.weights[l].data[i] += g.weights[l].data[i];
        for (size_t i = 0; i < acc.biases[l].size(); ++i)
            acc.biases[l][i] += g.biases[l][i];
    }
    for (size_t i = 0; i < acc.input.size() && i < g.input.size(); ++i)
        acc.input[i] += g.input[i];
}

void scale(Gradients& g, double factor) {
    for (auto& w : g.weights)
        for (auto& v : w.data) v *= factor;
    for (auto& b : g.biases)
        for (auto& v : b) v *= factor;
    for (auto& v : g.input) v *= factor;
}

OptimizerState make_sgd(double learning_rate) {
    OptimizerState o;
    o.kind = OptimizerKind::Sgd;
    o.learning_rate = learning_rate;
    return o;
}

OptimizerState make_adam(double learning_rate) {
    OptimizerState o;
    o.kind = OptimizerKind::Adam;
    o.learning_rate = learning_rate;
    return o;
}

void apply_gradients(DenseNet& net, const Gradients& grads, OptimizerState& opt) {
    SAFESTIR_REQUIRE(grads.weights.size() == net.weights.size(),
                     "apply_gradients: layer count mismatch");
    for (size_t l = 0; l < net.weights.size(); ++l) {
        SAFESTIR_REQUIRE(grads.weights[l].rows == net.weights[l].rows &&
                             grads.weights[l].cols == net.weights[l].cols &&
                             grads.biases[l].size() == net.biases[l].size(),
                         "apply_gradients: shape mismatch");
        for (double v : grads.weights[l].data)
            if (!std::isfinite(v)) throw TrainingError("non-finite weight gradient");
        for (double v : grads.biases[l])
            if (!std::isfinite(v)) throw TrainingError("non-finite bias gradient");
    }

    if (opt.kind == OptimizerKind::Sgd) {
        for (size_t l = 0; l < net.weights.size(); ++l) {
            for (size_t i = 0; i < net.weights[l].data.size(); ++i)
                net.weights[l].data[i] -= opt.learning_rate * grads.weights[l].data[i];
            for (size_t i = 0; i < net.biases[l].size(); ++i)
                net.biases[l][i] -= opt.learning_rate * grads.biases[l][i];
        }
        opt.step += 1;
        return;
    }

    if (opt.m_weights.empty()) {
        for (size_t l = 0; l < net.weights.size(); ++l) {
            opt.m_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
            opt.v_weights.emplace_back(net.weights[l].rows, net.weights[l].cols);
            opt.m_biases.emplace_back(net.biases[l].size(), 0.0);
            opt.v_biases.emplace_back(net.biases[l].size(), 0.0);
        }
    }
    opt.step += 1;
    double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    auto adam_update = [&](double& p, double g, double& m, double& v) {
        m = opt.beta1 * m + (1.0 - opt.beta1) * g;
        v = opt.beta2 * v + (1.0 - opt.beta2) * g * g;
        p -= opt.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + opt.epsilon);
    };
    for (size_t l = 0; l < net.weights.size(); ++l) {
        for (size_t i = 0; i < net.weights[l].data.size(); ++i)
            adam_update(net.weights[l].data[i], grads.weights[l].data[i],
                        opt.m_weights[l].data[i], opt.v_weights[l].data[i]);
        for (size_t i = 0; i < net.biases[l].size(); ++i)
            adam_update(net.biases[l][i], grads.biases[l][i], opt.m_biases[l][i],
                        opt.v_biases[l][i]);
    }
}

DenseNet soft_update(const DenseNet& target, const DenseNet& source, double tau) {
    DenseNet out = target;
    soft_update_inplace(out, source, tau);
    return out;
}

void soft_update_inplace(DenseNet& target, const DenseNet& source, double tau) {
    SAFESTIR_REQUIRE(target.same_architecture(source),
                     "soft_update: architecture mismatch");
    SAFESTIR_REQUIRE(tau > 0.0 && tau <= 1.0, "soft_update: tau must be in (0, 1]");
    for (size_t l = 0; l < target.weights.size(); ++l) {
        for (size_t i = 0; i < target.weights[l].data.size(); ++i)
            target.weights[l].data[i] = tau * source.weights[l].data[i] +
                                        (1.0 - tau) * target.weights[l].data[i];
        for (size_t i = 0; i < target.biases[l].size(); ++i)
            target.biases[l][i] =
                tau * source.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
}

}  // namespace safestir::nn
