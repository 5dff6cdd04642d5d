// Activation patterns as linear programs, and LP-based synthesis of a new
// input that flips a chosen part of a test's pattern.
#pragma once

#include "concolic/dr_logic.hpp"
#include "concolic/lp.hpp"
#include "concolic/network.hpp"

#include <map>
#include <optional>

namespace concolic {

struct EncodeOptions {
    /// Inactive neurons satisfy u <= -strict_slack.
    double strict_slack = 1e-6;
    /// Active neurons satisfy u >= active_margin.
    double active_margin = 0.0;
};

struct PatternEncoding {
    LpProblem lp;
    std::vector<VarId> input;
    std::map<NeuronId, VarId> pre;
    std::map<NeuronId, VarId> post;
    int last_layer = 1;
    std::optional<VarId> distance;
};

/// Encodes the input box [0, 1], the affine map of layers 2..last_layer and
/// the sign constraints of `pattern`. Every ReLU neuron below last_layer must
/// be constrained; bits at last_layer may be free. Max-pool layers use the
/// window winners recorded in `source` (required when one is encoded).
/// Throws EncodingError.
PatternEncoding encode_pattern(const Network& net, const ActivationPattern& pattern, int last_layer,
                               const Activations* source = nullptr, const EncodeOptions& options = {});

/// Adds d >= |x_i - anchor_i| for every input coordinate and sets the
/// objective to minimize d.
void add_chebyshev_objective(PatternEncoding& enc, std::span<const double> anchor);

struct TargetPattern {
    ActivationPattern pattern;
    int last_layer = 1;
};

/// Layers below k as in `source`, (k, i) negated, everything else free.
TargetPattern nc_target_pattern(const ActivationPattern& source, NeuronId n);

/// Layers below k and the other layer-k neurons as in `source`, condition and
/// decision negated, the rest of layer k + 1 free.
TargetPattern ssc_target_pattern(const ActivationPattern& source, NeuronId condition, NeuronId decision);

/// A bound constraint on one pre-activation value.
struct NeuronConstraint {
    NeuronId neuron;
    Sense sense = Sense::GreaterEq;
    double rhs = 0.0;
};

/// Pushes u[t]_{k,i} past the nearer-violated boundary: above h when
/// u - h > l - u, below l otherwise.
NeuronConstraint nbc_constraint(const Activations& acts, NeuronId n, double high, double low, double slack = 1e-6);

struct SynthesisOptions {
    EncodeOptions encode{1e-6, 1e-6};
    SimplexOptions simplex;
    bool keep_problem = false;
};

struct SynthesisResult {
    LpStatus status = LpStatus::Infeasible;
    std::optional<Vector> input;  // clamped to [0, 1]
    double distance = 0.0;
    std::optional<LpProblem> problem;
};

/// Builds the family's target LP around test t (with activations `acts`),
/// minimizes the L-infinity distance to t and returns the minimizer. NC, SSC
/// and NBC requirements only; throws ConfigError for other families.
SynthesisResult symbolic_lp(const Network& net, const Activations& acts, const Requirement& r,
                            const SynthesisOptions& options = {}, const LpSolver* solver = nullptr);

}  // namespace concolic
