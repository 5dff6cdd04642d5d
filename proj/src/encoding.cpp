#include "concolic/encoding.hpp"
#include "concolic/error.hpp"

#include <algorithm>

namespace concolic {

namespace {

std::string var_name(char prefix, NeuronId n)
{
    return std::string(1, prefix) + std::to_string(n.layer) + "_" + std::to_string(n.index);
}

}  // namespace

PatternEncoding encode_pattern(const Network& net, const ActivationPattern& pattern, int last_layer, const Activations* source,
                               const EncodeOptions& options)
{
    const int K = net.layer_count();
    if (last_layer < 1 || last_layer > K) {
        throw EncodingError("cannot encode up to layer " + std::to_string(last_layer) + " of a " + std::to_string(K) +
                            "-layer network");
    }
    if (pattern.layer_count() != K) {
        throw EncodingError("pattern shape does not match the network");
    }
    PatternEncoding enc;
    enc.last_layer = last_layer;
    for (std::size_t i = 0; i < net.input_size(); ++i) {
        enc.input.push_back(enc.lp.add_variable("x" + std::to_string(i), 0.0, 1.0));
    }
    std::vector<VarId> prev = enc.input;

    for (int k = 2; k <= last_layer; ++k) {
        const Layer& layer = net.layer(k);
        std::vector<VarId> cur(layer.size());
        if (layer.affine()) {
            for (std::size_t l = 0; l < layer.size(); ++l) {
                const NeuronId n{k, static_cast<int>(l)};
                const VarId u = enc.lp.add_variable(var_name('u', n), -kInf, kInf);
                std::vector<LinearTerm> terms{{u, 1.0}};
                layer.for_each_term(l, [&](std::size_t h, double w) {
                    if (w != 0.0) {
                        terms.push_back({prev[h], -w});
                    }
                });
                enc.lp.add_constraint(std::move(terms), Sense::Equal, layer.bias(l), "aff" + std::to_string(k) + "_" + std::to_string(l));
                enc.pre[n] = u;
                cur[l] = u;
            }
            if (layer.relu()) {
                for (std::size_t l = 0; l < layer.size(); ++l) {
                    const NeuronId n{k, static_cast<int>(l)};
                    const std::optional<bool> b = pattern.bit(n);
                    if (!b) {
                        if (k < last_layer) {
                            throw EncodingError("neuron " + to_string(n) + " is unconstrained below layer " +
                                                std::to_string(last_layer));
                        }
                        continue;
                    }
                    const VarId u = cur[l];
                    const VarId v = enc.lp.add_variable(var_name('v', n), -kInf, kInf);
                    const std::string tag = std::to_string(k) + "_" + std::to_string(l);
                    if (*b) {
                        enc.lp.add_constraint({{u, 1.0}}, Sense::GreaterEq, options.active_margin, "on" + tag);
                        enc.lp.add_constraint({{v, 1.0}, {u, -1.0}}, Sense::Equal, 0.0, "pass" + tag);
                    } else {
                        enc.lp.add_constraint({{u, 1.0}}, Sense::LessEq, -options.strict_slack, "off" + tag);
                        enc.lp.add_constraint({{v, 1.0}}, Sense::Equal, 0.0, "zero" + tag);
                    }
                    enc.post[n] = v;
                    cur[l] = v;
                }
            } else {
                for (std::size_t l = 0; l < layer.size(); ++l) {
                    enc.post[{k, static_cast<int>(l)}] = cur[l];
                }
            }
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer.spec())) {
            if (source == nullptr || source->pool_winners.size() <= static_cast<std::size_t>(k) ||
                source->pool_winners[k].size() != layer.size()) {
                throw EncodingError("max-pool layer " + std::to_string(k) + " needs the winners of a source run");
            }
            const Shape& in = layer.input_shape();
            const std::size_t W = in[1], C = in[2];
            const std::size_t out_w = layer.output_shape()[1];
            for (std::size_t l = 0; l < layer.size(); ++l) {
                const std::size_t winner = source->pool_winners[k][l];
                const std::size_t c = l % C;
                const std::size_t oy = l / C / out_w;
                const std::size_t ox = l / C % out_w;
                for (std::size_t dy = 0; dy < pool->window_h; ++dy) {
                    for (std::size_t dx = 0; dx < pool->window_w; ++dx) {
                        const std::size_t idx = ((oy * pool->window_h + dy) * W + ox * pool->window_w + dx) * C + c;
                        if (idx != winner) {
                            enc.lp.add_constraint({{prev[winner], 1.0}, {prev[idx], -1.0}}, Sense::GreaterEq, 0.0,
                                                  "pool" + std::to_string(k) + "_" + std::to_string(l) + "_" + std::to_string(idx));
                        }
                    }
                }
                cur[l] = prev[winner];
                enc.pre[{k, static_cast<int>(l)}] = cur[l];
                enc.post[{k, static_cast<int>(l)}] = cur[l];
            }
        } else {
            cur = prev;
            for (std::size_t l = 0; l < layer.size(); ++l) {
                enc.pre[{k, static_cast<int>(l)}] = cur[l];
                enc.post[{k, static_cast<int>(l)}] = cur[l];
            }
        }
        prev = std::move(cur);
    }
    return enc;
}

void add_chebyshev_objective(PatternEncoding& enc, std::span<const double> anchor)
{
    if (anchor.size() != enc.input.size()) {
        throw EncodingError("anchor has " + std::to_string(anchor.size()) + " coordinates, encoding has " +
                            std::to_string(enc.input.size()));
    }
    const VarId d = enc.lp.add_variable("d", 0.0, kInf);
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const VarId x = enc.input[i];
        enc.lp.add_constraint({{x, 1.0}, {d, -1.0}}, Sense::LessEq, anchor[i], "dup" + std::to_string(i));
        enc.lp.add_constraint({{x, -1.0}, {d, -1.0}}, Sense::LessEq, -anchor[i], "ddn" + std::to_string(i));
    }
    enc.lp.set_objective({{d, 1.0}});
    enc.distance = d;
}

TargetPattern nc_target_pattern(const ActivationPattern& source, NeuronId n)
{
    const std::optional<bool> b = source.bit(n);
    if (!b) {
        throw EncodingError("source pattern has no bit for " + to_string(n));
    }
    TargetPattern tp{source, n.layer};
    tp.pattern.clear_above(n.layer - 1);
    tp.pattern.set(n, !*b);
    return tp;
}

TargetPattern ssc_target_pattern(const ActivationPattern& source, NeuronId condition, NeuronId decision)
{
    const std::optional<bool> bc = source.bit(condition);
    const std::optional<bool> bd = source.bit(decision);
    if (!bc || !bd) {
        throw EncodingError("source pattern has no bit for " + to_string(condition) + " or " + to_string(decision));
    }
    if (decision.layer != condition.layer + 1) {
        throw EncodingError("decision neuron must sit one layer above the condition neuron");
    }
    TargetPattern tp{source, decision.layer};
    tp.pattern.clear_above(condition.layer);
    tp.pattern.set(condition, !*bc);
    tp.pattern.set(decision, !*bd);
    return tp;
}

NeuronConstraint nbc_constraint(const Activations& acts, NeuronId n, double high, double low, double slack)
{
    const double u = acts.pre(n);
    if (u - high > low - u) {
        return {n, Sense::GreaterEq, high + slack};
    }
    return {n, Sense::LessEq, low - slack};
}

SynthesisResult symbolic_lp(const Network& net, const Activations& acts, const Requirement& r, const SynthesisOptions& options,
                            const LpSolver* solver)
{
    const ActivationPattern source = pattern_of(acts);
    TargetPattern tp;
    std::optional<NeuronConstraint> extra;
    switch (r.tag.family) {
    case Family::NC:
        tp = nc_target_pattern(source, r.tag.neuron);
        break;
    case Family::SSC:
        tp = ssc_target_pattern(source, r.tag.neuron, r.tag.decision);
        break;
    case Family::NBCHigh:
    case Family::NBCLow: {
        const bool high = r.tag.family == Family::NBCHigh;
        const double slack = options.encode.strict_slack;
        extra = NeuronConstraint{r.tag.neuron, high ? Sense::GreaterEq : Sense::LessEq, high ? r.bound + slack : r.bound - slack};
        tp = {source, net.layer_count() - 1};
        // The bound decides the target neuron's own sign where it can.
        if (tp.pattern.constrained(r.tag.neuron)) {
            if (high && extra->rhs >= 0.0) {
                tp.pattern.set(r.tag.neuron, true);
            } else if (!high && extra->rhs < 0.0) {
                tp.pattern.set(r.tag.neuron, false);
            }
        }
        break;
    }
    default:
        throw ConfigError("symbolic synthesis does not handle " + std::string(family_name(r.tag.family)) + " requirements");
    }

    PatternEncoding enc = encode_pattern(net, tp.pattern, tp.last_layer, &acts, options.encode);
    if (extra) {
        const auto it = enc.pre.find(extra->neuron);
        if (it == enc.pre.end()) {
            throw EncodingError("neuron " + to_string(extra->neuron) + " is not encoded");
        }
        enc.lp.add_constraint({{it->second, 1.0}}, extra->sense, extra->rhs, "bound");
    }
    add_chebyshev_objective(enc, acts.input());

    const SimplexSolver fallback(options.simplex);
    const LpOutcome out = (solver ? *solver : static_cast<const LpSolver&>(fallback)).solve(enc.lp);
    SynthesisResult res;
    res.status = out.status;
    if (out.status == LpStatus::Optimal) {
        Vector x(enc.input.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = std::clamp(out.values[enc.input[i]], 0.0, 1.0);
        }
        res.input = std::move(x);
        res.distance = out.values[*enc.distance];
    }
    if (options.keep_problem) {
        res.problem = std::move(enc.lp);
    }
    return res;
}

}  // namespace concolic
