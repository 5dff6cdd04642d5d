// Greedy few-pixel search for NC and NBC requirements under the L0 norm.
#pragma once

#include "concolic/dr_logic.hpp"

#include <optional>

namespace concolic {

struct L0Options {
    /// Maximum number of modified pixels.
    std::size_t budget = 100;
};

struct L0Result {
    /// Set on success; equal to t when t already satisfies r.
    std::optional<Vector> input;
    std::size_t changed = 0;
    bool satisfied = false;
    std::size_t evaluations = 0;
    double objective = 0.0;
};

/// Quantity the search maximizes: u for NC, u - h (high) or l - u (low) for NBC.
double l0_objective(const Activations& acts, const Requirement& r);

/// Each step sets one not-yet-modified pixel to 0 or 1, whichever raises the
/// objective most (lowest pixel, then 0 before 1, on ties). Stops when r is
/// satisfied, the budget is spent, or no move strictly improves.
/// Throws ConfigError for families other than NC and NBC.
L0Result l0_search(const Network& net, const Activations& t, const Requirement& r, const L0Options& options = {});

}  // namespace concolic
