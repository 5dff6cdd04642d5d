// Feedforward ReLU networks: layer definitions, forward evaluation and
// activation patterns.
//
// Layers are numbered the usual way for this kind of analysis: the input
// layer is k = 1, the i-th entry of the layer list is layer k = i + 2, and the
// output layer is k = K. Neuron indices within a layer are 0-based and follow
// the flattened (row-major, channels-last) order of the layer's shape.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace concolic {

using Vector = std::vector<double>;
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

struct NeuronId {
    int layer = 0;
    int index = 0;

    auto operator<=>(const NeuronId&) const = default;
};

std::string to_string(NeuronId n);

/// Fully connected layer. `weights` is inputs x outputs, row-major, so
/// weights[h * outputs + l] connects input neuron h to output neuron l.
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;
    std::vector<double> bias;
    bool relu = false;

    double weight(std::size_t h, std::size_t l) const { return weights[h * outputs + l]; }
};

/// 2-D convolution over a channels-last [H, W, C] input. `kernels` has shape
/// [kernel_h, kernel_w, in_channels, out_channels], row-major. Padding is
/// symmetric zero padding.
struct Conv2DLayer {
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::vector<double> kernels;
    std::vector<double> bias;
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::size_t pad_h = 0;
    std::size_t pad_w = 0;
    bool relu = false;

    double kernel(std::size_t ky, std::size_t kx, std::size_t ci, std::size_t co) const
    {
        return kernels[((ky * kernel_w + kx) * in_channels + ci) * out_channels + co];
    }
};

/// Non-overlapping max pooling over [H, W, C]; the window must divide H and W.
struct MaxPoolLayer {
    std::size_t window_h = 2;
    std::size_t window_w = 2;
};

struct FlattenLayer {};

using LayerSpec = std::variant<DenseLayer, Conv2DLayer, MaxPoolLayer, FlattenLayer>;

class Layer {
public:
    Layer(LayerSpec spec, Shape input_shape);

    const LayerSpec& spec() const { return spec_; }
    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return output_shape_; }
    std::size_t size() const { return shape_size(output_shape_); }
    bool relu() const;
    /// Dense and conv layers compute u = W v + b.
    bool affine() const;
    std::string kind_name() const;

    /// Bias of output neuron `l` (affine layers only).
    double bias(std::size_t l) const;

    /// Calls fn(input_index, weight) for every input neuron feeding output
    /// neuron `l` of an affine layer.
    template <class Fn>
    void for_each_term(std::size_t l, Fn&& fn) const;

private:
    LayerSpec spec_;
    Shape input_shape_;
    Shape output_shape_;
};

class Network {
public:
    /// Validates shapes, weights and the layer-structure invariants; throws
    /// ShapeError or DomainError.
    Network(Shape input_shape, std::vector<LayerSpec> layers);

    const Shape& input_shape() const { return input_shape_; }
    std::size_t input_size() const { return shape_size(input_shape_); }

    /// K: number of layers including the input layer.
    int layer_count() const { return static_cast<int>(layers_.size()) + 1; }

    /// Layer k, for 2 <= k <= K.
    const Layer& layer(int k) const;

    /// Neuron count s_k, for 1 <= k <= K.
    std::size_t size(int k) const;
    std::size_t output_size() const { return size(layer_count()); }

    bool is_relu(int k) const;
    /// Layers 2..K-1 that apply ReLU, ascending.
    std::vector<int> relu_layers() const;
    /// Every ReLU neuron, ordered by (layer, index).
    std::vector<NeuronId> relu_neurons() const;

    bool operator==(const Network& other) const;

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
};

/// Pre- and post-ReLU values of every layer for one input. Layers without
/// ReLU have v == u; for k = 1 both hold the input.
struct Activations {
    std::vector<Vector> u;  // indexed by layer k; entry 0 unused
    std::vector<Vector> v;
    std::vector<bool> relu_layer;
    /// For max-pool layers: flat input index of each output's window maximum.
    std::vector<std::vector<std::size_t>> pool_winners;
    std::size_t label = 0;

    int layer_count() const { return static_cast<int>(u.size()) - 1; }
    double pre(NeuronId n) const { return u[n.layer][n.index]; }
    double post(NeuronId n) const { return v[n.layer][n.index]; }
    std::span<const double> input() const { return v[1]; }
    std::span<const double> output() const { return v.back(); }

    bool operator==(const Activations&) const = default;
};

/// Evaluates the network. Throws ShapeError on a length mismatch and
/// DomainError on non-finite input. Deterministic: the same input yields
/// bitwise-identical activations under every kernel table.
Activations forward(const Network& net, std::span<const double> input);

/// Output layer values only.
Vector logits(const Network& net, std::span<const double> input);

/// Index of the largest element, lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// Activation bits, one per ReLU neuron. Partial patterns (used as LP
/// targets) leave some neurons unconstrained.
class ActivationPattern {
public:
    ActivationPattern() = default;
    /// An empty pattern shaped like the network's ReLU layers.
    explicit ActivationPattern(const Network& net);

    int layer_count() const { return static_cast<int>(bits_.size()) - 1; }
    std::size_t layer_size(int k) const { return bits_[k].size(); }

    std::optional<bool> bit(NeuronId n) const;
    bool constrained(NeuronId n) const { return bit(n).has_value(); }
    void set(NeuronId n, bool active);
    void clear(NeuronId n);
    /// Drop every bit of layers strictly above k.
    void clear_above(int k);
    std::size_t constrained_count() const;

    bool operator==(const ActivationPattern&) const = default;

private:
    friend ActivationPattern pattern_of(const Activations& acts);
    std::vector<std::vector<std::int8_t>> bits_;  // -1 free, 0 inactive, 1 active
};

/// Bit (k, l) is true iff u_{k,l} >= 0 (u == v == 0 counts as activated).
ActivationPattern pattern_of(const Activations& acts);

Network load_model(const std::filesystem::path& path);
void save_model(const Network& net, const std::filesystem::path& path);
Network parse_model(const std::string& json_text);
std::string serialize_model(const Network& net);

// ---------------------------------------------------------------------------

template <class Fn>
void Layer::for_each_term(std::size_t l, Fn&& fn) const
{
    if (const auto* d = std::get_if<DenseLayer>(&spec_)) {
        for (std::size_t h = 0; h < d->inputs; ++h) {
            fn(h, d->weight(h, l));
        }
        return;
    }
    if (const auto* c = std::get_if<Conv2DLayer>(&spec_)) {
        const std::size_t in_h = input_shape_[0];
        const std::size_t in_w = input_shape_[1];
        const std::size_t out_w = output_shape_[1];
        const std::size_t co = l % c->out_channels;
        const std::size_t pos = l / c->out_channels;
        const std::size_t oy = pos / out_w;
        const std::size_t ox = pos % out_w;
        for (std::size_t ky = 0; ky < c->kernel_h; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * c->stride_h + ky) - static_cast<std::ptrdiff_t>(c->pad_h);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) {
                continue;
            }
            for (std::size_t kx = 0; kx < c->kernel_w; ++kx) {
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * c->stride_w + kx) - static_cast<std::ptrdiff_t>(c->pad_w);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) {
                    continue;
                }
                const std::size_t base = (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * c->in_channels;
                for (std::size_t ci = 0; ci < c->in_channels; ++ci) {
                    fn(base + ci, c->kernel(ky, kx, ci, co));
                }
            }
        }
    }
}

}  // namespace concolic
