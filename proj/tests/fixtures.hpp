// Networks and inputs shared by the tests. Everything is built from a fixed
// seed so failures reproduce.
#pragma once

#include "concolic/lipschitz.hpp"
#include "concolic/network.hpp"

#include <cmath>
#include <vector>

namespace fixtures {

using namespace concolic;

inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * rng.uniform();
}

inline std::size_t pick(Rng& rng, std::size_t n)
{
    return static_cast<std::size_t>(rng.next() % n);
}

inline Vector random_input(Rng& rng, std::size_t n)
{
    Vector x(n);
    for (double& v : x) {
        v = rng.uniform();
    }
    return x;
}

/// Inputs on the 1/steps grid.
inline Vector grid_input(Rng& rng, std::size_t n, int steps)
{
    Vector x(n);
    for (double& v : x) {
        v = static_cast<double>(pick(rng, static_cast<std::size_t>(steps) + 1)) / steps;
    }
    return x;
}

inline DenseLayer random_dense(Rng& rng, std::size_t in, std::size_t out, bool relu, double bias_range = 0.5)
{
    DenseLayer d;
    d.inputs = in;
    d.outputs = out;
    d.relu = relu;
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) {
        d.weights.push_back(uniform(rng, -2.0, 2.0) * scale);
    }
    for (std::size_t i = 0; i < out; ++i) {
        d.bias.push_back(uniform(rng, -bias_range, bias_range));
    }
    return d;
}

/// Dense network with ReLU on every hidden layer. sizes = {inputs, h1, ..., outputs}.
inline Network random_mlp(Rng& rng, const std::vector<std::size_t>& sizes)
{
    std::vector<LayerSpec> layers;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        layers.push_back(random_dense(rng, sizes[i - 1], sizes[i], i + 1 < sizes.size()));
    }
    return Network({sizes.front()}, std::move(layers));
}

inline DenseLayer dense(std::size_t in, std::size_t out, std::vector<double> weights, std::vector<double> bias, bool relu)
{
    return DenseLayer{in, out, std::move(weights), std::move(bias), relu};
}

/// ReLU identity followed by a linear identity: out(x) = x on [0, 1]^n.
inline Network identity_net(std::size_t n)
{
    std::vector<double> eye(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        eye[i * n + i] = 1.0;
    }
    return Network({n}, {dense(n, n, eye, Vector(n, 0.0), true), dense(n, n, eye, Vector(n, 0.0), false)});
}

/// Output ignores the input entirely.
inline Network constant_net(std::size_t n)
{
    Rng rng(5);
    DenseLayer hidden = random_dense(rng, n, 3, true);
    return Network({n}, {hidden, dense(3, 2, Vector(6, 0.0), {0.25, -0.5}, false)});
}

struct PlantedNet {
    Network net;
    std::vector<NeuronId> dead;
    NeuronId hard;
};

/// 4-16-16-3 dense network. Neuron (2,2) has a bias below minus the sum of
/// its positive weights; neuron (3,7) has nonpositive weights and a negative
/// bias; both can never activate. Neuron (2,5) activates only when the
/// inputs sum to at least 3.96, which uniform sampling essentially never hits.
/// With the default seed every other neuron can be activated.
inline PlantedNet planted_net(std::uint64_t seed = 20240617)
{
    Rng rng(seed);
    DenseLayer l2 = random_dense(rng, 4, 16, true, 0.3);
    DenseLayer l3 = random_dense(rng, 16, 16, true, 0.3);
    DenseLayer l4 = random_dense(rng, 16, 3, false, 0.1);
    double positive = 0.0;
    for (std::size_t h = 0; h < 4; ++h) {
        positive += std::max(l2.weights[h * 16 + 2], 0.0);
    }
    l2.bias[2] = -positive - 0.5;
    for (std::size_t h = 0; h < 4; ++h) {
        l2.weights[h * 16 + 5] = 1.0;
    }
    l2.bias[5] = -3.96;
    for (std::size_t h = 0; h < 16; ++h) {
        l3.weights[h * 16 + 7] = -std::abs(l3.weights[h * 16 + 7]);
    }
    l3.bias[7] = -0.1;
    return {Network({4}, {l2, l3, l4}), {{2, 2}, {3, 7}}, {2, 5}};
}

/// Two inputs. Hidden neuron (2,0) computes x0 - 0.5 and decides the label:
/// logits are [0.001, 10 * relu(x0 - 0.5)]. Seeds at x0 = 127/255 sit one
/// grid step below the boundary.
inline Network boundary_net()
{
    return Network({2}, {dense(2, 2, {1.0, 0.0, 0.0, 1.0}, {-0.5, 0.0}, true), dense(2, 2, {0.0, 10.0, 0.0, 0.0}, {0.001, 0.0}, false)});
}

}  // namespace fixtures

#include <filesystem>
#include <string>
#include <unistd.h>

namespace fixtures {

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& name)
        : path_(std::filesystem::temp_directory_path() / ("concolic_" + name + "_" + std::to_string(::getpid())))
    {
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

}  // namespace fixtures
