// Validity and robustness oracles over a finished test suite, and the
// coverage report.
#pragma once

#include "concolic/dr_logic.hpp"
#include "concolic/format.hpp"

#include <optional>

namespace concolic {

/// Inputs with trusted labels that generated tests are compared against.
struct ReferenceSet {
    std::vector<Vector> inputs;
    std::vector<std::size_t> labels;
    Norm norm = Norm::Linf;
};

/// Uses the trusted labels when the input set has them, the network's
/// labels otherwise. Throws ConfigError for an empty set and ShapeError or
/// DomainError for bad inputs or labels.
ReferenceSet make_reference_set(const Network& net, InputSet set, Norm norm);

struct Nearest {
    std::size_t index = 0;
    double distance = 0.0;
};

/// Linear scan; the earliest reference wins ties.
Nearest nearest(const ReferenceSet& refs, std::span<const double> t);

/// A test is valid when some reference lies within distance b.
bool validity_check(const ReferenceSet& refs, std::span<const double> t, double b);

struct AdversarialRecord {
    std::size_t test = 0;
    Vector input;
    std::size_t reference = 0;
    double distance = 0.0;
    std::size_t label = 0;            // network on the test
    std::size_t reference_label = 0;  // network on the nearest reference
    std::size_t trusted_label = 0;    // recorded label of the nearest reference
    Norm norm = Norm::Linf;
};

/// Compares the network's labels on t and on its nearest reference; returns
/// a record when they differ. The caller checks validity first.
std::optional<AdversarialRecord> robustness_check(const Network& net, const ReferenceSet& refs, std::span<const double> t,
                                                  std::size_t test_index = 0);

struct RequirementOutcome {
    std::string tag;
    Status status = Status::Open;
};

struct CoverageReport {
    /// Unset when there are no requirements.
    std::optional<double> coverage;
    std::vector<RequirementOutcome> requirements;
    std::size_t satisfied = 0;
    std::size_t open = 0;
    std::size_t failed = 0;
    std::size_t tests = 0;
    std::size_t valid_tests = 0;
    std::vector<AdversarialRecord> adversarial;
    double adversary_rate = 0.0;  // adversarial / tests
    std::optional<double> min_distance;
    std::optional<double> mean_distance;
};

/// Recomputes satisfaction of every requirement on the suite. Requirements
/// not satisfied keep their Failed mark if they carry one, Open otherwise.
/// Robustness is checked on each test that is valid under bound b.
CoverageReport suite_report(const Network& net, const ReferenceSet& refs, std::span<const Vector> suite,
                            std::span<const Requirement> reqs, double b);

}  // namespace concolic
