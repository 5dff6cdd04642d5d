#include "concolic/l0_search.hpp"
#include "concolic/error.hpp"

namespace concolic {

double l0_objective(const Activations& acts, const Requirement& r)
{
    switch (r.tag.family) {
    case Family::NC: return acts.pre(r.tag.neuron);
    case Family::NBCHigh: return acts.pre(r.tag.neuron) - r.bound;
    case Family::NBCLow: return r.bound - acts.pre(r.tag.neuron);
    default: throw ConfigError("L0 search handles NC and NBC requirements only, not " + std::string(family_name(r.tag.family)));
    }
}

L0Result l0_search(const Network& net, const Activations& t, const Requirement& r, const L0Options& options)
{
    L0Result res;
    res.objective = l0_objective(t, r);
    auto holds = [&](const Activations& a) { return eval_bool(r.body, Binding{}.bind(InputVar::X, a)); };
    if (holds(t)) {
        res.satisfied = true;
        res.input = Vector(t.input().begin(), t.input().end());
        return res;
    }

    Vector x(t.input().begin(), t.input().end());
    std::vector<bool> modified(x.size(), false);
    while (res.changed < options.budget) {
        std::size_t best_pixel = x.size();
        double best_value = 0.0;
        double best_obj = res.objective;
        Activations best_acts;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (modified[i]) {
                continue;
            }
            const double old = x[i];
            for (double value : {0.0, 1.0}) {
                if (value == old) {
                    continue;
                }
                x[i] = value;
                Activations a = forward(net, x);
                ++res.evaluations;
                const double obj = l0_objective(a, r);
                if (obj > best_obj) {
                    best_obj = obj;
                    best_pixel = i;
                    best_value = value;
                    best_acts = std::move(a);
                }
            }
            x[i] = old;
        }
        if (best_pixel == x.size()) {
            break;
        }
        x[best_pixel] = best_value;
        modified[best_pixel] = true;
        ++res.changed;
        res.objective = best_obj;
        if (holds(best_acts)) {
            res.satisfied = true;
            break;
        }
    }
    if (res.satisfied) {
        res.input = std::move(x);
    }
    return res;
}

}  // namespace concolic
