// Search for input pairs that refute a Lipschitz constant: an alternating
// compass search inside an L-infinity box around a seed, and a uniform
// random baseline for comparison.
#pragma once

#include "concolic/network.hpp"
#include "concolic/norms.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>

namespace concolic {

struct LipConfig {
    double c = 1.0;
    double delta = 0.1;  // box radius around the seed
    double eps = 1e-9;   // keeps the ratio finite for coincident inputs
    std::size_t max_iters = 150;
    std::size_t max_executions = 30;
    double sigma0 = 0.0;  // 0 means delta / 4
    double theta = 0.5;
    double sigma_min = 1e-5;
    double progress = 1e-6;
    /// Forward evaluations allowed for one seed; 0 means unlimited.
    std::size_t max_evaluations = 0;
    Norm norm = Norm::Linf;
    /// Layer whose values are compared; 0 means the output layer.
    int out_layer = 0;

    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

struct LipWitness {
    Vector t1, t2;
    double ratio = 0.0;
    bool satisfied = false;
    std::size_t evaluations = 0;
    std::size_t executions = 0;
};

/// ||out(t1) - out(t2)|| / (||t1 - t2|| + eps).
double lip_ratio(const Network& net, std::span<const double> t1, std::span<const double> t2, double eps,
                 Norm norm = Norm::Linf, int out_layer = 0);

struct CompassOptions {
    double sigma0 = 0.25;
    double theta = 0.5;
    double sigma_min = 1e-5;
    std::size_t max_iters = 150;
    std::size_t max_evaluations = 0;  // 0 means unlimited
};

struct CompassResult {
    Vector best;
    double value = 0.0;
    /// Start point followed by every accepted iterate.
    std::vector<Vector> trace;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool stopped_early = false;
};

using Objective = std::function<double(std::span<const double>)>;
using StopPredicate = std::function<bool(std::span<const double>)>;

/// Polls x + sigma e_i then x - sigma e_i for i = 0, 1, ..., projected onto
/// [lower, upper], and moves to the first strictly better point. A round
/// without improvement multiplies sigma by theta. early_stop is checked at
/// the start point and after every accepted move, right after the objective
/// was evaluated there.
CompassResult compass_minimize(const Objective& f, Vector start, const Vector& lower, const Vector& upper,
                               const CompassOptions& options, const StopPredicate& early_stop = {});

/// Maximizes ||out(t1) - out(t0)|| over the box of t0. The returned witness
/// pairs (t1, t0); when unsatisfied, t1 is the converged point.
LipWitness stage_one(const Network& net, std::span<const double> t0, const LipConfig& cfg);

/// Continues from stage one: maximizes ||out(t2) - out(t1*)|| over the box of
/// t0 (each run starting at t0), re-anchoring t1* at the converged t2 until
/// the ratio stops improving or the execution budget runs out.
LipWitness stage_two_loop(const Network& net, std::span<const double> t0, const LipWitness& first, const LipConfig& cfg);

/// Both stages.
LipWitness lipschitz_search(const Network& net, std::span<const double> t0, const LipConfig& cfg);

/// Uniform doubles in [0, 1) built from raw engine output, so the sequence
/// does not depend on the standard library's distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    double uniform();
    std::uint64_t next();

private:
    std::mt19937_64 engine_;
};

/// Uniform pairs in the box of t0; first pair with ratio > c wins, otherwise
/// the best of `pairs` attempts (two forward evaluations each).
LipWitness random_baseline(const Network& net, std::span<const double> t0, const LipConfig& cfg, std::size_t pairs, Rng& rng);

struct LipCsvRow {
    std::string seed;
    std::string method;
    double best_ratio = 0.0;
    bool satisfied = false;
    std::size_t evaluations = 0;
};

void write_lipschitz_csv(std::ostream& os, const std::vector<LipCsvRow>& rows);

}  // namespace concolic
