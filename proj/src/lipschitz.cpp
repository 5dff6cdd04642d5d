#include "concolic/lipschitz.hpp"
#include "concolic/error.hpp"
#include "concolic/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

namespace concolic {

void LipConfig::validate() const
{
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw ConfigError("Lipschitz constant c must be positive");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ConfigError("Lipschitz box radius must be positive");
    }
    if (!(eps > 0.0)) {
        throw ConfigError("Lipschitz eps must be positive");
    }
    if (!(theta > 0.0 && theta < 1.0)) {
        throw ConfigError("compass shrink factor must lie in (0, 1)");
    }
    if (sigma0 < 0.0 || !(sigma_min > 0.0)) {
        throw ConfigError("compass step sizes must be positive");
    }
    if (max_iters == 0 || max_executions == 0) {
        throw ConfigError("Lipschitz budgets must be positive");
    }
    if (norm != Norm::Linf) {
        throw ConfigError("Lipschitz search runs under the linf norm only");
    }
}

namespace {

Vector layer_values(const Network& net, std::span<const double> x, int out_layer)
{
    Activations a = forward(net, x);
    const int k = out_layer > 0 ? out_layer : net.layer_count();
    return std::move(a.v[k]);
}

struct SearchBox {
    Vector lower, upper;
};

SearchBox box_around(std::span<const double> t0, double delta)
{
    SearchBox b;
    for (double v : t0) {
        b.lower.push_back(std::max(0.0, v - delta));
        b.upper.push_back(std::min(1.0, v + delta));
    }
    return b;
}

/// Runs forward passes, counting them against the per-seed budget.
class Evaluator {
public:
    Evaluator(const Network& net, const LipConfig& cfg)
        : net_(net)
        , cfg_(cfg)
    {
    }

    Vector out(std::span<const double> x)
    {
        ++count_;
        return layer_values(net_, x, cfg_.out_layer);
    }
    std::size_t count() const { return count_; }
    bool exhausted() const { return cfg_.max_evaluations != 0 && count_ >= cfg_.max_evaluations; }
    std::size_t remaining() const { return cfg_.max_evaluations > count_ ? cfg_.max_evaluations - count_ : 0; }

private:
    const Network& net_;
    const LipConfig& cfg_;
    std::size_t count_ = 0;
};

CompassOptions compass_options(const LipConfig& cfg, const Evaluator& ev)
{
    CompassOptions o;
    o.sigma0 = cfg.sigma0 > 0.0 ? cfg.sigma0 : cfg.delta / 4.0;
    o.theta = cfg.theta;
    o.sigma_min = cfg.sigma_min;
    o.max_iters = cfg.max_iters;
    o.max_evaluations = cfg.max_evaluations == 0 ? 0 : std::max<std::size_t>(ev.remaining(), 1);
    return o;
}

/// One compass run maximizing ||out(x) - anchor_out|| from t0.
struct Run {
    CompassResult result;
    Vector best_out;
    std::optional<Vector> hit;  // first point whose ratio exceeded c
};

Run maximize_gap(Evaluator& ev, std::span<const double> t0, std::span<const double> anchor, const Vector& anchor_out,
                 const SearchBox& box, const LipConfig& cfg)
{
    Run run;
    Vector last_out;
    double best = std::numeric_limits<double>::infinity();
    const Objective f = [&](std::span<const double> x) {
        last_out = ev.out(x);
        const double value = -distance(last_out, anchor_out, cfg.norm);
        if (value < best) {
            best = value;
            run.best_out = last_out;
        }
        return value;
    };
    const StopPredicate stop = [&](std::span<const double> x) {
        const double ratio = distance(last_out, anchor_out, cfg.norm) / (distance(x, anchor, cfg.norm) + cfg.eps);
        if (ratio > cfg.c) {
            run.hit = Vector(x.begin(), x.end());
            return true;
        }
        return false;
    };
    run.result = compass_minimize(f, Vector(t0.begin(), t0.end()), box.lower, box.upper, compass_options(cfg, ev), stop);
    return run;
}

double run_ratio(const Run& run, std::span<const double> anchor, const LipConfig& cfg)
{
    return -run.result.value / (distance(run.result.best, anchor, cfg.norm) + cfg.eps);
}

}  // namespace

double lip_ratio(const Network& net, std::span<const double> t1, std::span<const double> t2, double eps, Norm norm, int out_layer)
{
    if (t1.size() != t2.size()) {
        throw ShapeError("Lipschitz pair has mismatched dimensions");
    }
    const Vector y1 = layer_values(net, t1, out_layer);
    const Vector y2 = layer_values(net, t2, out_layer);
    return distance(y1, y2, norm) / (distance(t1, t2, norm) + eps);
}

CompassResult compass_minimize(const Objective& f, Vector start, const Vector& lower, const Vector& upper,
                               const CompassOptions& options, const StopPredicate& early_stop)
{
    CompassResult res;
    res.best = std::move(start);
    for (std::size_t i = 0; i < res.best.size(); ++i) {
        res.best[i] = std::clamp(res.best[i], lower[i], upper[i]);
    }
    res.value = f(res.best);
    res.evaluations = 1;
    res.trace.push_back(res.best);
    if (early_stop && early_stop(res.best)) {
        res.stopped_early = true;
        return res;
    }
    auto budget_left = [&] { return options.max_evaluations == 0 || res.evaluations < options.max_evaluations; };

    double sigma = options.sigma0;
    Vector probe = res.best;
    while (res.iterations < options.max_iters && sigma >= options.sigma_min && budget_left()) {
        ++res.iterations;
        bool moved = false;
        for (std::size_t i = 0; i < res.best.size() && !moved && budget_left(); ++i) {
            for (double dir : {1.0, -1.0}) {
                const double candidate = std::clamp(res.best[i] + dir * sigma, lower[i], upper[i]);
                if (candidate == res.best[i]) {
                    continue;
                }
                probe[i] = candidate;
                const double value = f(probe);
                ++res.evaluations;
                if (value < res.value) {
                    res.best[i] = candidate;
                    res.value = value;
                    res.trace.push_back(res.best);
                    moved = true;
                    if (early_stop && early_stop(res.best)) {
                        res.stopped_early = true;
                        return res;
                    }
                    break;
                }
                probe[i] = res.best[i];
                if (!budget_left()) {
                    break;
                }
            }
        }
        if (!moved) {
            sigma *= options.theta;
        }
    }
    return res;
}

namespace {

LipWitness stage_one_with(Evaluator& ev, std::span<const double> t0, const Vector& y0, const SearchBox& box, const LipConfig& cfg)
{
    LipWitness w;
    w.t2.assign(t0.begin(), t0.end());
    w.executions = 1;
    Run run = maximize_gap(ev, t0, t0, y0, box, cfg);
    if (run.hit) {
        w.t1 = *run.hit;
        w.satisfied = true;
        w.ratio = distance(run.best_out, y0, cfg.norm) / (distance(w.t1, t0, cfg.norm) + cfg.eps);
    } else {
        w.t1 = run.result.best;
        w.ratio = run_ratio(run, t0, cfg);
    }
    w.evaluations = ev.count();
    return w;
}

}  // namespace

LipWitness stage_one(const Network& net, std::span<const double> t0, const LipConfig& cfg)
{
    cfg.validate();
    Evaluator ev(net, cfg);
    const Vector y0 = ev.out(t0);
    return stage_one_with(ev, t0, y0, box_around(t0, cfg.delta), cfg);
}

namespace {

LipWitness stage_two_with(Evaluator& ev, std::span<const double> t0, const LipWitness& first, const SearchBox& box, const LipConfig& cfg)
{
    LipWitness best = first;
    if (first.satisfied) {
        return best;
    }
    Vector anchor = first.t1;
    Vector anchor_out = ev.out(anchor);
    double last = first.ratio;
    std::size_t executions = first.executions;
    while (executions < cfg.max_executions && !ev.exhausted()) {
        Run run = maximize_gap(ev, t0, anchor, anchor_out, box, cfg);
        ++executions;
        if (run.hit) {
            best.t1 = anchor;
            best.t2 = *run.hit;
            best.satisfied = true;
            best.ratio = distance(run.best_out, anchor_out, cfg.norm) / (distance(best.t2, anchor, cfg.norm) + cfg.eps);
            break;
        }
        const double r = run_ratio(run, anchor, cfg);
        if (r > best.ratio) {
            best.t1 = anchor;
            best.t2 = run.result.best;
            best.ratio = r;
        }
        if (r <= last + cfg.progress) {
            break;
        }
        last = r;
        anchor = run.result.best;
        anchor_out = run.best_out;
    }
    best.executions = executions;
    best.evaluations = ev.count();
    return best;
}

}  // namespace

LipWitness stage_two_loop(const Network& net, std::span<const double> t0, const LipWitness& first, const LipConfig& cfg)
{
    cfg.validate();
    Evaluator ev(net, cfg);
    LipWitness w = stage_two_with(ev, t0, first, box_around(t0, cfg.delta), cfg);
    w.evaluations += first.evaluations;
    return w;
}

LipWitness lipschitz_search(const Network& net, std::span<const double> t0, const LipConfig& cfg)
{
    cfg.validate();
    Evaluator ev(net, cfg);
    const SearchBox box = box_around(t0, cfg.delta);
    const Vector y0 = ev.out(t0);
    const LipWitness first = stage_one_with(ev, t0, y0, box, cfg);
    return stage_two_with(ev, t0, first, box, cfg);
}

Rng::Rng(std::uint64_t seed)
    : engine_(seed)
{
}

std::uint64_t Rng::next()
{
    return engine_();
}

double Rng::uniform()
{
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

LipWitness random_baseline(const Network& net, std::span<const double> t0, const LipConfig& cfg, std::size_t pairs, Rng& rng)
{
    cfg.validate();
    if (pairs == 0) {
        throw ConfigError("random baseline needs at least one attempt");
    }
    const SearchBox box = box_around(t0, cfg.delta);
    auto sample = [&] {
        Vector x(box.lower.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = box.lower[i] + rng.uniform() * (box.upper[i] - box.lower[i]);
        }
        return x;
    };
    LipWitness best;
    best.ratio = -1.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        Vector a = sample();
        Vector b = sample();
        const double r = lip_ratio(net, a, b, cfg.eps, cfg.norm, cfg.out_layer);
        best.evaluations += 2;
        ++best.executions;
        if (r > best.ratio) {
            best.t1 = std::move(a);
            best.t2 = std::move(b);
            best.ratio = r;
        }
        if (r > cfg.c) {
            best.satisfied = true;
            break;
        }
    }
    return best;
}

void write_lipschitz_csv(std::ostream& os, const std::vector<LipCsvRow>& rows)
{
    os << "seed,method,best_ratio,satisfied,forward_evals\n";
    for (const LipCsvRow& r : rows) {
        os << r.seed << ',' << r.method << ',' << format_double(r.best_ratio) << ',' << (r.satisfied ? "true" : "false") << ','
           << r.evaluations << '\n';
    }
}

}  // namespace concolic
