#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safestir/rng.hpp"

namespace safestir::nn {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1, Tanh = 2 };

/// Row-major dense matrix of doubles.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    double& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    bool operator==(const Matrix&) const = default;
};

/// Fully connected feed-forward network. Inputs are multiplied elementwise
/// by `input_scale` before the first layer; the final activation output is
/// multiplied by `output_scale`. Both are fixed architecture data (carried
/// through checkpoints), letting raw physical observations feed a network
/// that trains on normalized values.
struct DenseNet {
    std::vector<int> sizes;                  // widths, input first
    std::vector<Activation> activations;     // one per layer
    std::vector<Matrix> weights;             // [out x in] per layer
    std::vector<std::vector<double>> biases;
    std::vector<double> input_scale;
    double output_scale = 1.0;

    int input_size() const { return sizes.empty() ? 0 : sizes.front(); }
    int output_size() const { return sizes.empty() ? 0 : sizes.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    size_t parameter_count() const;
    bool same_architecture(const DenseNet& o) const;
    bool operator==(const DenseNet&) const = default;
};

/// Zero-initialized network. `input_scale` defaults to all ones.
DenseNet make_net(std::vector<int> sizes, std::vector<Activation> activations,
                  std::vector<double> input_scale = {}, double output_scale = 1.0);

/// Uniform fan-in initialization (+-1/sqrt(fan_in)); the last layer can be
/// overridden with a small range (the usual choice for actor output layers).
void init_uniform_fanin(DenseNet& net, Rng& rng, double final_layer_range = 0.0);

/// Cached forward-pass values; valid only for the pass that produced it.
struct GradientTape {
    std::vector<std::vector<double>> layer_inputs;    // scaled input, then post-activations
    std::vector<std::vector<double>> pre_activations;
    double param_probe = 0.0;  // cheap staleness check
    bool valid = false;
};

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> input;  // gradient w.r.t. the raw (unscaled) input
};

/// Affine + activation composition. Fills `tape` when given.
std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                            GradientTape* tape = nullptr);

/// Exact reverse-mode gradients for the forward pass recorded in `tape`.
Gradients backward(const DenseNet& net, const GradientTape& tape,
                   std::span<const double> output_gradient);

/// Accumulate: acc += g (same shapes).
void accumulate(Gradients& acc, const Gradients& g);
void scale(Gradients& g, double factor);
Gradients zero_gradients(const DenseNet& net);

enum class OptimizerKind : std::uint8_t { Sgd = 0, Adam = 1 };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    // Adam moments, lazily shaped on first apply.
    std::vector<Matrix> m_weights, v_weights;
    std::vector<std::vector<double>> m_biases, v_biases;

    bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_sgd(double learning_rate);
OptimizerState make_adam(double learning_rate);

/// One optimizer step. Throws TrainingError on non-finite gradients.
void apply_gradients(DenseNet& net, const Gradients& grads, OptimizerState& opt);

/// target' = tau * source + (1 - tau) * target, elementwise.
DenseNet soft_update(const DenseNet& target, const DenseNet& source, double tau);
void soft_update_inplace(DenseNet& target, const DenseNet& source, double tau);

/// Versioned binary checkpoint: network, optionally optimizer state and rng.
struct Checkpoint {
    DenseNet net;
    std::optional<OptimizerState> optimizer;
    std::optional<Rng> rng;
};

void save_checkpoint(const std::string& path, const DenseNet& net,
                     const OptimizerState* optimizer = nullptr,
                     const Rng* rng = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace safestir::nn
