#include "concolic/ranking.hpp"
#include "concolic/error.hpp"
#include "concolic/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace concolic {

LayerFactors estimate_layer_factors(const Network& net, std::span<const Activations> samples)
{
    LayerFactors f;
    const int K = net.layer_count();
    f.c.assign(static_cast<std::size_t>(K) + 1, 1.0);
    if (samples.empty()) {
        return f;
    }
    for (int k = 1; k <= K; ++k) {
        double total = 0.0;
        std::size_t count = 0;
        for (const Activations& a : samples) {
            total += kernels::sum_abs(a.u[k]);
            count += a.u[k].size();
        }
        const double mean = count ? total / static_cast<double>(count) : 0.0;
        f.c[k] = 1.0 / std::max(mean, 1e-12);
    }
    return f;
}

double rank_nc(const Activations& t, NeuronId n, const LayerFactors& f)
{
    return f.at(n.layer) * t.pre(n);
}

double rank_ssc(const Activations& t, NeuronId condition, const LayerFactors& f)
{
    return -f.at(condition.layer) * std::abs(t.pre(condition));
}

double rank_nbc(const Activations& t, NeuronId n, bool high, double bound, const LayerFactors& f)
{
    const double u = t.pre(n);
    return f.at(n.layer) * (high ? u - bound : bound - u);
}

double rank_lipschitz(const Activations& t1, const Activations& t2, const LipschitzParams& p)
{
    const int layer = p.out_layer > 0 ? p.out_layer : t1.layer_count();
    return distance(t1.v[layer], t2.v[layer], p.norm) - p.c * distance(t1.input(), t2.input(), p.norm);
}

std::optional<RankedCandidate> rank_requirements(std::span<const Activations> suite, std::span<const Requirement> reqs,
                                                 const LayerFactors& factors, const SkipFn& skip)
{
    std::optional<RankedCandidate> best;
    auto offer = [&](std::size_t ri, std::vector<std::size_t> witnesses, double score) {
        if (!std::isfinite(score)) {
            return;
        }
        if (best) {
            if (score < best->score) {
                return;
            }
            if (score == best->score) {
                const RequirementTag& a = reqs[ri].tag;
                const RequirementTag& b = reqs[best->requirement].tag;
                if (a > b || (a == b && witnesses >= best->witnesses)) {
                    return;
                }
            }
        }
        best = RankedCandidate{ri, std::move(witnesses), score};
    };

    for (std::size_t ri = 0; ri < reqs.size(); ++ri) {
        const Requirement& r = reqs[ri];
        if (r.status != Status::Open) {
            continue;
        }
        const Family fam = r.tag.family;
        if (fam == Family::LIP) {
            if (!r.lipschitz) {
                continue;
            }
            const LipschitzParams& p = *r.lipschitz;
            std::vector<std::size_t> inside;
            for (std::size_t t = 0; t < suite.size(); ++t) {
                if (p.box.contains(suite[t].input())) {
                    inside.push_back(t);
                }
            }
            for (std::size_t a : inside) {
                if (skip && skip(ri, a)) {
                    continue;
                }
                for (std::size_t b : inside) {
                    offer(ri, {a, b}, rank_lipschitz(suite[a], suite[b], p));
                }
            }
            continue;
        }
        if (fam == Family::Custom) {
            continue;
        }
        for (std::size_t t = 0; t < suite.size(); ++t) {
            if (skip && skip(ri, t)) {
                continue;
            }
            double score = 0.0;
            switch (fam) {
            case Family::NC: score = rank_nc(suite[t], r.tag.neuron, factors); break;
            case Family::SSC: score = rank_ssc(suite[t], r.tag.neuron, factors); break;
            case Family::NBCHigh: score = rank_nbc(suite[t], r.tag.neuron, true, r.bound, factors); break;
            case Family::NBCLow: score = rank_nbc(suite[t], r.tag.neuron, false, r.bound, factors); break;
            default: break;
            }
            offer(ri, {t}, score);
        }
    }
    return best;
}

}  // namespace concolic
