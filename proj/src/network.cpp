#include "concolic/network.hpp"

#include "concolic/error.hpp"
#include "concolic/kernels.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace concolic {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::string to_string(NeuronId n)
{
    return "n(" + std::to_string(n.layer) + "," + std::to_string(n.index) + ")";
}

namespace {

void require_finite(std::span<const double> values, const std::string& what)
{
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DomainError(what + ": non-finite value at position " + std::to_string(i));
        }
    }
}

Shape dense_output(const DenseLayer& d, const Shape& in)
{
    if (in.size() != 1) {
        throw ShapeError("dense layer expects a flat input, got " + shape_string(in) + " (add a flatten layer)");
    }
    if (d.inputs != in[0]) {
        throw ShapeError("dense layer declares " + std::to_string(d.inputs) + " inputs but receives " + std::to_string(in[0]));
    }
    if (d.outputs == 0) {
        throw ShapeError("dense layer with zero outputs");
    }
    if (d.weights.size() != d.inputs * d.outputs) {
        throw ShapeError("dense weights hold " + std::to_string(d.weights.size()) + " values, expected " +
                         std::to_string(d.inputs) + "x" + std::to_string(d.outputs));
    }
    if (d.bias.size() != d.outputs) {
        throw ShapeError("dense bias has " + std::to_string(d.bias.size()) + " entries, expected " + std::to_string(d.outputs));
    }
    require_finite(d.weights, "dense weights");
    require_finite(d.bias, "dense bias");
    return {d.outputs};
}

Shape conv_output(const Conv2DLayer& c, const Shape& in)
{
    if (in.size() != 3) {
        throw ShapeError("conv2d expects an [H,W,C] input, got " + shape_string(in));
    }
    if (c.in_channels != in[2]) {
        throw ShapeError("conv2d declares " + std::to_string(c.in_channels) + " input channels but receives " + std::to_string(in[2]));
    }
    if (c.kernel_h == 0 || c.kernel_w == 0 || c.out_channels == 0 || c.stride_h == 0 || c.stride_w == 0) {
        throw ShapeError("conv2d with zero kernel size, channel count or stride");
    }
    if (c.kernels.size() != c.kernel_h * c.kernel_w * c.in_channels * c.out_channels) {
        throw ShapeError("conv2d kernels hold " + std::to_string(c.kernels.size()) + " values, expected " +
                         shape_string({c.kernel_h, c.kernel_w, c.in_channels, c.out_channels}));
    }
    if (c.bias.size() != c.out_channels) {
        throw ShapeError("conv2d bias has " + std::to_string(c.bias.size()) + " entries, expected " + std::to_string(c.out_channels));
    }
    const std::size_t padded_h = in[0] + 2 * c.pad_h;
    const std::size_t padded_w = in[1] + 2 * c.pad_w;
    if (padded_h < c.kernel_h || padded_w < c.kernel_w) {
        throw ShapeError("conv2d kernel larger than padded input " + shape_string(in));
    }
    require_finite(c.kernels, "conv2d kernels");
    require_finite(c.bias, "conv2d bias");
    return {(padded_h - c.kernel_h) / c.stride_h + 1, (padded_w - c.kernel_w) / c.stride_w + 1, c.out_channels};
}

Shape pool_output(const MaxPoolLayer& p, const Shape& in)
{
    if (in.size() != 3) {
        throw ShapeError("maxpool expects an [H,W,C] input, got " + shape_string(in));
    }
    if (p.window_h == 0 || p.window_w == 0 || in[0] % p.window_h != 0 || in[1] % p.window_w != 0) {
        throw ShapeError("maxpool window " + shape_string({p.window_h, p.window_w}) + " does not divide input " + shape_string(in));
    }
    return {in[0] / p.window_h, in[1] / p.window_w, in[2]};
}

struct OutputShape {
    const Shape& in;
    Shape operator()(const DenseLayer& d) const { return dense_output(d, in); }
    Shape operator()(const Conv2DLayer& c) const { return conv_output(c, in); }
    Shape operator()(const MaxPoolLayer& p) const { return pool_output(p, in); }
    Shape operator()(const FlattenLayer&) const { return {shape_size(in)}; }
};

}  // namespace

Layer::Layer(LayerSpec spec, Shape input_shape)
    : spec_(std::move(spec))
    , input_shape_(std::move(input_shape))
{
    output_shape_ = std::visit(OutputShape{input_shape_}, spec_);
}

bool Layer::relu() const
{
    if (const auto* d = std::get_if<DenseLayer>(&spec_)) {
        return d->relu;
    }
    if (const auto* c = std::get_if<Conv2DLayer>(&spec_)) {
        return c->relu;
    }
    return false;
}

bool Layer::affine() const
{
    return std::holds_alternative<DenseLayer>(spec_) || std::holds_alternative<Conv2DLayer>(spec_);
}

std::string Layer::kind_name() const
{
    static const char* names[] = {"dense", "conv2d", "maxpool", "flatten"};
    return names[spec_.index()];
}

double Layer::bias(std::size_t l) const
{
    if (const auto* d = std::get_if<DenseLayer>(&spec_)) {
        return d->bias[l];
    }
    if (const auto* c = std::get_if<Conv2DLayer>(&spec_)) {
        return c->bias[l % c->out_channels];
    }
    return 0.0;
}

Network::Network(Shape input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape))
{
    if (input_shape_.empty() || shape_size(input_shape_) == 0) {
        throw ShapeError("input shape " + shape_string(input_shape_) + " is empty");
    }
    if (layers.size() < 2) {
        throw ShapeError("network needs at least one hidden layer and an output layer");
    }
    Shape current = input_shape_;
    layers_.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        try {
            layers_.emplace_back(std::move(layers[i]), current);
        } catch (const DomainError& e) {
            throw DomainError("layer " + std::to_string(i + 2) + ": " + e.what());
        } catch (const Error& e) {
            throw ShapeError("layer " + std::to_string(i + 2) + ": " + e.what());
        }
        current = layers_.back().output_shape();
    }
    if (layers_.back().relu()) {
        throw ShapeError("output layer must not apply ReLU");
    }
    if (layers_.back().size() < 2) {
        throw ShapeError("output layer needs at least 2 neurons");
    }
    if (relu_layers().empty()) {
        throw ShapeError("network has no hidden ReLU layer");
    }
}

const Layer& Network::layer(int k) const
{
    if (k < 2 || k > layer_count()) {
        throw ShapeError("layer index " + std::to_string(k) + " outside [2," + std::to_string(layer_count()) + "]");
    }
    return layers_[static_cast<std::size_t>(k - 2)];
}

std::size_t Network::size(int k) const
{
    if (k == 1) {
        return input_size();
    }
    return layer(k).size();
}

bool Network::is_relu(int k) const
{
    return k >= 2 && k <= layer_count() && layer(k).relu();
}

std::vector<int> Network::relu_layers() const
{
    std::vector<int> out;
    for (int k = 2; k < layer_count(); ++k) {
        if (is_relu(k)) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<NeuronId> Network::relu_neurons() const
{
    std::vector<NeuronId> out;
    for (int k : relu_layers()) {
        for (std::size_t l = 0; l < size(k); ++l) {
            out.push_back({k, static_cast<int>(l)});
        }
    }
    return out;
}

namespace {

bool same_spec(const LayerSpec& a, const LayerSpec& b)
{
    if (a.index() != b.index()) {
        return false;
    }
    if (const auto* d = std::get_if<DenseLayer>(&a)) {
        const auto& e = std::get<DenseLayer>(b);
        return d->inputs == e.inputs && d->outputs == e.outputs && d->weights == e.weights && d->bias == e.bias && d->relu == e.relu;
    }
    if (const auto* c = std::get_if<Conv2DLayer>(&a)) {
        const auto& e = std::get<Conv2DLayer>(b);
        return c->kernel_h == e.kernel_h && c->kernel_w == e.kernel_w && c->in_channels == e.in_channels &&
               c->out_channels == e.out_channels && c->kernels == e.kernels && c->bias == e.bias && c->stride_h == e.stride_h &&
               c->stride_w == e.stride_w && c->pad_h == e.pad_h && c->pad_w == e.pad_w && c->relu == e.relu;
    }
    if (const auto* p = std::get_if<MaxPoolLayer>(&a)) {
        const auto& e = std::get<MaxPoolLayer>(b);
        return p->window_h == e.window_h && p->window_w == e.window_w;
    }
    return true;
}

}  // namespace

bool Network::operator==(const Network& other) const
{
    if (input_shape_ != other.input_shape_ || layers_.size() != other.layers_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!same_spec(layers_[i].spec(), other.layers_[i].spec())) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Forward evaluation

namespace {

void dense_forward(const DenseLayer& d, std::span<const double> in, Vector& u)
{
    // u = b, then u += v_h * W[h, :] for h in order: each u_l accumulates its
    // terms in the same sequence regardless of vector width.
    u.assign(d.bias.begin(), d.bias.end());
    for (std::size_t h = 0; h < d.inputs; ++h) {
        if (in[h] != 0.0) {
            kernels::axpy(in[h], std::span<const double>(d.weights).subspan(h * d.outputs, d.outputs), u);
        }
    }
}

void conv_forward(const Conv2DLayer& c, const Shape& in_shape, const Shape& out_shape, std::span<const double> in, Vector& u)
{
    const std::size_t in_h = in_shape[0];
    const std::size_t in_w = in_shape[1];
    const std::size_t out_h = out_shape[0];
    const std::size_t out_w = out_shape[1];
    const std::size_t co_n = c.out_channels;
    u.resize(out_h * out_w * co_n);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            std::span<double> acc(u.data() + (oy * out_w + ox) * co_n, co_n);
            std::copy(c.bias.begin(), c.bias.end(), acc.begin());
            for (std::size_t ky = 0; ky < c.kernel_h; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * c.stride_h + ky) - static_cast<std::ptrdiff_t>(c.pad_h);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < c.kernel_w; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * c.stride_w + kx) - static_cast<std::ptrdiff_t>(c.pad_w);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) {
                        continue;
                    }
                    const std::size_t base = (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * c.in_channels;
                    for (std::size_t ci = 0; ci < c.in_channels; ++ci) {
                        const double a = in[base + ci];
                        if (a != 0.0) {
                            const std::size_t off = ((ky * c.kernel_w + kx) * c.in_channels + ci) * co_n;
                            kernels::axpy(a, std::span<const double>(c.kernels).subspan(off, co_n), acc);
                        }
                    }
                }
            }
        }
    }
}

void pool_forward(const MaxPoolLayer& p, const Shape& in_shape, const Shape& out_shape, std::span<const double> in, Vector& u,
                  std::vector<std::size_t>& winners)
{
    const std::size_t in_w = in_shape[1];
    const std::size_t ch = in_shape[2];
    const std::size_t out_h = out_shape[0];
    const std::size_t out_w = out_shape[1];
    u.resize(out_h * out_w * ch);
    winners.resize(u.size());
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            for (std::size_t c = 0; c < ch; ++c) {
                std::size_t best = ((oy * p.window_h) * in_w + ox * p.window_w) * ch + c;
                for (std::size_t wy = 0; wy < p.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < p.window_w; ++wx) {
                        const std::size_t idx = ((oy * p.window_h + wy) * in_w + (ox * p.window_w + wx)) * ch + c;
                        if (in[idx] > in[best]) {
                            best = idx;
                        }
                    }
                }
                const std::size_t out = (oy * out_w + ox) * ch + c;
                u[out] = in[best];
                winners[out] = best;
            }
        }
    }
}

}  // namespace

Activations forward(const Network& net, std::span<const double> input)
{
    if (input.size() != net.input_size()) {
        throw ShapeError("input has " + std::to_string(input.size()) + " values, network expects " + std::to_string(net.input_size()) +
                         " (shape " + shape_string(net.input_shape()) + ")");
    }
    require_finite(input, "input");

    const int K = net.layer_count();
    Activations acts;
    acts.u.resize(static_cast<std::size_t>(K) + 1);
    acts.v.resize(static_cast<std::size_t>(K) + 1);
    acts.relu_layer.assign(static_cast<std::size_t>(K) + 1, false);
    acts.pool_winners.resize(static_cast<std::size_t>(K) + 1);
    acts.u[1].assign(input.begin(), input.end());
    acts.v[1] = acts.u[1];

    for (int k = 2; k <= K; ++k) {
        const Layer& layer = net.layer(k);
        const std::span<const double> in = acts.v[k - 1];
        Vector& u = acts.u[k];
        if (const auto* d = std::get_if<DenseLayer>(&layer.spec())) {
            dense_forward(*d, in, u);
        } else if (const auto* c = std::get_if<Conv2DLayer>(&layer.spec())) {
            conv_forward(*c, layer.input_shape(), layer.output_shape(), in, u);
        } else if (const auto* p = std::get_if<MaxPoolLayer>(&layer.spec())) {
            pool_forward(*p, layer.input_shape(), layer.output_shape(), in, u, acts.pool_winners[k]);
        } else {
            u.assign(in.begin(), in.end());
        }
        if (layer.relu()) {
            acts.relu_layer[k] = true;
            acts.v[k].resize(u.size());
            kernels::relu(u, acts.v[k]);
        } else {
            acts.v[k] = u;
        }
    }
    acts.label = argmax(acts.v[K]);
    return acts;
}

Vector logits(const Network& net, std::span<const double> input)
{
    return std::move(forward(net, input).v.back());
}

std::size_t argmax(std::span<const double> values)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Activation patterns

ActivationPattern::ActivationPattern(const Network& net)
    : bits_(static_cast<std::size_t>(net.layer_count()) + 1)
{
    for (int k : net.relu_layers()) {
        bits_[k].assign(net.size(k), -1);
    }
}

std::optional<bool> ActivationPattern::bit(NeuronId n) const
{
    if (n.layer < 0 || n.layer >= static_cast<int>(bits_.size()) || n.index < 0 ||
        n.index >= static_cast<int>(bits_[n.layer].size())) {
        return std::nullopt;
    }
    const std::int8_t b = bits_[n.layer][n.index];
    if (b < 0) {
        return std::nullopt;
    }
    return b == 1;
}

void ActivationPattern::set(NeuronId n, bool active)
{
    if (n.layer < 0 || n.layer >= static_cast<int>(bits_.size()) || n.index < 0 ||
        n.index >= static_cast<int>(bits_[n.layer].size())) {
        throw ShapeError("pattern has no ReLU neuron " + to_string(n));
    }
    bits_[n.layer][n.index] = active ? 1 : 0;
}

void ActivationPattern::clear(NeuronId n)
{
    if (n.layer >= 0 && n.layer < static_cast<int>(bits_.size()) && n.index >= 0 &&
        n.index < static_cast<int>(bits_[n.layer].size())) {
        bits_[n.layer][n.index] = -1;
    }
}

void ActivationPattern::clear_above(int k)
{
    for (std::size_t layer = static_cast<std::size_t>(std::max(k + 1, 0)); layer < bits_.size(); ++layer) {
        std::fill(bits_[layer].begin(), bits_[layer].end(), std::int8_t{-1});
    }
}

std::size_t ActivationPattern::constrained_count() const
{
    std::size_t n = 0;
    for (const auto& layer : bits_) {
        for (std::int8_t b : layer) {
            n += b >= 0 ? 1 : 0;
        }
    }
    return n;
}

ActivationPattern pattern_of(const Activations& acts)
{
    ActivationPattern p;
    p.bits_.resize(acts.u.size());
    for (std::size_t k = 2; k + 1 < acts.u.size(); ++k) {
        if (!acts.relu_layer[k]) {
            continue;
        }
        auto& layer = p.bits_[k];
        layer.resize(acts.u[k].size());
        for (std::size_t l = 0; l < layer.size(); ++l) {
            layer[l] = acts.u[k][l] >= 0.0 ? 1 : 0;
        }
    }
    return p;
}

}  // namespace concolic
