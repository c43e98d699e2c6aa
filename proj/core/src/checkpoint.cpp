#include <cstring>
#include <fstream>

#include "safestir/errors.hpp"
#include "safestir/nn/net.hpp"

namespace safestir::nn {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'F', 'E', 'S', 'T', 'N', 'N'};
constexpr std::uint32_t kSchemaVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("checkpoint truncated");
    return v;
}

void put_doubles(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
    auto n = get<std::uint64_t>(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw ConfigError("checkpoint truncated");
    return v;
}

void put_matrix(std::ostream& os, const Matrix& m) {
    put<std::int32_t>(os, m.rows);
    put<std::int32_t>(os, m.cols);
    put_doubles(os, m.data);
}

Matrix get_matrix(std::istream& is) {
    Matrix m;
    m.rows = get<std::int32_t>(is);
    m.cols = get<std::int32_t>(is);
    m.data = get_doubles(is);
    if (m.data.size() != static_cast<size_t>(m.rows) * m.cols)
        throw ConfigError("checkpoint matrix shape mismatch");
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const DenseNet& net,
                     const OptimizerState* optimizer, const Rng* rng) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw MissingArtifactError("cannot open checkpoint for writing: " + path);

    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kSchemaVersion);

    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.sizes.size()));
    for (int s : net.sizes) put<std::int32_t>(os, s);
    for (Activation a : net.activations) put<std::uint8_t>(os, static_cast<std::uint8_t>(a));
    put_doubles(os, net.input_scale);
    put<double>(os, net.output_scale);
    for (int l = 0; l < net.layer_count(); ++l) {
        put_matrix(os, net.weights[l]);
        put_doubles(os, net.biases[l]);
    }

    put<std::uint8_t>(os, optimizer ? 1 : 0);
    if (optimizer) {
        put<std::uint8_t>(os, static_cast<std::uint8_t>(optimizer->kind));
        put<double>(os, optimizer->learning_rate);
        put<double>(os, optimizer->beta1);
        put<double>(os, optimizer->beta2);
        put<double>(os, optimizer->epsilon);
        put<std::int64_t>(os, optimizer->step);
        put<std::uint32_t>(os, static_cast<std::uint32_t>(optimizer->m_weights.size()));
        for (size_t l = 0; l < optimizer->m_weights.size(); ++l) {
            put_matrix(os, optimizer->m_weights[l]);
            put_matrix(os, optimizer->v_weights[l]);
            put_doubles(os, optimizer->m_biases[l]);
            put_doubles(os, optimizer->v_biases[l]);
        }
    }

    put<std::uint8_t>(os, rng ? 1 : 0);
    if (rng) {
        put<std::uint64_t>(os, rng->state());
        put<std::uint8_t>(os, rng->has_spare() ? 1 : 0);
        put<double>(os, rng->spare());
    }
    if (!os) throw MissingArtifactError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw MissingArtifactError("cannot open checkpoint: " + path);

    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ConfigError("not a checkpoint file: " + path);
    auto version = get<std::uint32_t>(is);
    if (version != kSchemaVersion)
        throw ConfigError("checkpoint schema version mismatch in " + path);

    Checkpoint ckpt;
    auto n_sizes = get<std::uint32_t>(is);
    std::vector<int> sizes(n_sizes);
    for (auto& s : sizes) s = get<std::int32_t>(is);
    std::vector<Activation> acts(n_sizes - 1);
    for (auto& a : acts) a = static_cast<Activation>(get<std::uint8_t>(is));
    auto input_scale = get_doubles(is);
    double output_scale = get<double>(is);
    ckpt.net = make_net(sizes, acts, input_scale, output_scale);
    for (int l = 0; l < ckpt.net.layer_count(); ++l) {
        ckpt.net.weights[l] = get_matrix(is);
        ckpt.net.biases[l] = get_doubles(is);
    }

    if (get<std::uint8_t>(is)) {
        OptimizerState opt;
        opt.kind = static_cast<OptimizerKind>(get<std::uint8_t>(is));
        opt.learning_rate = get<double>(is);
        opt.beta1 = get<double>(is);
        opt.beta2 = get<double>(is);
        opt.epsilon = get<double>(is);
        opt.step = get<std::int64_t>(is);
        auto n_layers = get<std::uint32_t>(is);
        for (std::uint32_t l = 0; l < n_layers; ++l) {
            opt.m_weights.push_back(get_matrix(is));
            opt.v_weights.push_back(get_matrix(is));
            opt.m_biases.push_back(get_doubles(is));
            opt.v_biases.push_back(get_doubles(is));
        }
        ckpt.optimizer = std::move(opt);
    }

    if (get<std::uint8_t>(is)) {
        auto state = get<std::uint64_t>(is);
        bool has_spare = get<std::uint8_t>(is) != 0;
        double spare = get<double>(is);
        Rng rng;
        rng.restore(state, has_spare, spare);
        ckpt.rng = rng;
    }
    return ckpt;
}

}  // namespace safestir::nn
