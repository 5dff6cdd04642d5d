#include "concolic/error.hpp"
#include "concolic/oracle.hpp"

#include <cmath>

namespace concolic {

ReferenceSet make_reference_set(const Network& net, InputSet set, Norm norm)
{
    if (set.inputs.empty()) {
        throw ConfigError("reference set is empty");
    }
    ReferenceSet refs;
    refs.norm = norm;
    for (std::size_t i = 0; i < set.inputs.size(); ++i) {
        if (set.inputs[i].size() != net.input_size()) {
            throw ShapeError("reference " + std::to_string(i) + " has " + std::to_string(set.inputs[i].size()) +
                             " values, the network takes " + std::to_string(net.input_size()));
        }
    }
    if (set.labels) {
        if (set.labels->size() != set.inputs.size()) {
            throw ShapeError("reference set has " + std::to_string(set.labels->size()) + " labels for " +
                             std::to_string(set.inputs.size()) + " inputs");
        }
        for (std::size_t i = 0; i < set.labels->size(); ++i) {
            if ((*set.labels)[i] >= net.output_size()) {
                throw DomainError("reference label " + std::to_string((*set.labels)[i]) + " at " + std::to_string(i) +
                                  " is out of range");
            }
        }
        refs.labels = std::move(*set.labels);
    } else {
        for (const Vector& x : set.inputs) {
            refs.labels.push_back(forward(net, x).label);
        }
    }
    refs.inputs = std::move(set.inputs);
    return refs;
}

Nearest nearest(const ReferenceSet& refs, std::span<const double> t)
{
    if (refs.inputs.empty()) {
        throw ConfigError("reference set is empty");
    }
    Nearest best{0, distance(refs.inputs[0], t, refs.norm)};
    for (std::size_t i = 1; i < refs.inputs.size(); ++i) {
        const double d = distance(refs.inputs[i], t, refs.norm);
        if (d < best.distance) {
            best = {i, d};
        }
    }
    return best;
}

bool validity_check(const ReferenceSet& refs, std::span<const double> t, double b)
{
    if (!(b > 0.0)) {
        throw ConfigError("validity bound must be positive");
    }
    return nearest(refs, t).distance <= b;
}

std::optional<AdversarialRecord> robustness_check(const Network& net, const ReferenceSet& refs, std::span<const double> t,
                                                  std::size_t test_index)
{
    const Nearest near = nearest(refs, t);
    const std::size_t label = forward(net, t).label;
    const std::size_t ref_label = forward(net, refs.inputs[near.index]).label;
    if (label == ref_label) {
        return std::nullopt;
    }
    return AdversarialRecord{test_index, Vector(t.begin(), t.end()), near.index, near.distance, label, ref_label,
                             refs.labels[near.index], refs.norm};
}

CoverageReport suite_report(const Network& net, const ReferenceSet& refs, std::span<const Vector> suite,
                            std::span<const Requirement> reqs, double b)
{
    CoverageReport rep;
    std::vector<Activations> acts;
    acts.reserve(suite.size());
    for (const Vector& t : suite) {
        acts.push_back(forward(net, t));
    }
    for (const Requirement& r : reqs) {
        Status s = satisfies(acts, r) ? Status::Satisfied : (r.status == Status::Failed ? Status::Failed : Status::Open);
        rep.requirements.push_back({r.tag.str(), s});
        switch (s) {
        case Status::Satisfied: ++rep.satisfied; break;
        case Status::Open: ++rep.open; break;
        case Status::Failed: ++rep.failed; break;
        }
    }
    if (!reqs.empty()) {
        rep.coverage = static_cast<double>(rep.satisfied) / static_cast<double>(reqs.size());
    }
    rep.tests = suite.size();
    double total = 0.0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        if (!validity_check(refs, suite[i], b)) {
            continue;
        }
        ++rep.valid_tests;
        if (auto rec = robustness_check(net, refs, suite[i], i)) {
            total += rec->distance;
            rep.min_distance = rep.min_distance ? std::min(*rep.min_distance, rec->distance) : rec->distance;
            rep.adversarial.push_back(std::move(*rec));
        }
    }
    if (!rep.adversarial.empty()) {
        rep.mean_distance = total / static_cast<double>(rep.adversarial.size());
    }
    if (rep.tests > 0) {
        rep.adversary_rate = static_cast<double>(rep.adversarial.size()) / static_cast<double>(rep.tests);
    }
    return rep;
}

}  // namespace concolic
