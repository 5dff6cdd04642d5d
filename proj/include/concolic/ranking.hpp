// Heuristic ranking of (test, requirement) pairs: how close a test is to
// satisfying an open requirement, on a scale comparable across layers.
#pragma once

#include "concolic/dr_logic.hpp"

#include <functional>
#include <optional>

namespace concolic {

/// c_k = 1 / mean |u_k| over sample activations, per layer k.
struct LayerFactors {
    std::vector<double> c;  // indexed by layer

    double at(int k) const { return c.at(static_cast<std::size_t>(k)); }
};

LayerFactors estimate_layer_factors(const Network& net, std::span<const Activations> samples);

/// c_k * u[t]_{k,i}
double rank_nc(const Activations& t, NeuronId n, const LayerFactors& f);
/// -c_k * |u[t]| at the condition neuron.
double rank_ssc(const Activations& t, NeuronId condition, const LayerFactors& f);
/// c_k * (u - h) for the high side, c_k * (l - u) for the low side.
double rank_nbc(const Activations& t, NeuronId n, bool high, double bound, const LayerFactors& f);
/// ||y1 - y2|| - c * ||x1 - x2|| on the compared layer.
double rank_lipschitz(const Activations& t1, const Activations& t2, const LipschitzParams& p);

struct RankedCandidate {
    std::size_t requirement = 0;
    std::vector<std::size_t> witnesses;  // test indices
    double score = 0.0;
};

/// Return true to skip a (requirement, first witness) pair already tried.
using SkipFn = std::function<bool(std::size_t requirement, std::size_t test)>;

/// Highest-scoring pair over open requirements. Ties go to the smaller tag,
/// then the earlier test. Lipschitz candidates are ordered pairs of in-box
/// tests, a test paired with itself included.
std::optional<RankedCandidate> rank_requirements(std::span<const Activations> suite, std::span<const Requirement> reqs,
                                                 const LayerFactors& factors, const SkipFn& skip = {});

}  // namespace concolic
