// Acceptance run: one line per criterion, non-zero exit if any fails.
#include "concolic/encoding.hpp"
#include "concolic/engine.hpp"
#include "concolic/format.hpp"
#include "concolic/lipschitz.hpp"
#include "fixtures.hpp"
#include "lp_oracle.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace concolic;

namespace {

// Pinned tolerances.
constexpr double kStrictSlack = 1e-6;             // LP strictness slack
constexpr double kBitMargin = kStrictSlack / 2;   // required |u| on constrained bits
constexpr double kSolverAgreement = 1e-6;         // simplex vs vertex enumeration
constexpr double kGridTolerance = 1e-9;           // "exactly on the 1/255 grid"
constexpr double kSigmaMin = 1e-5;                // compass convergence
constexpr double kCoverageTarget = 0.95;
constexpr double kDominanceShare = 0.80;
constexpr std::size_t kLipEvalBudget = 4000;      // per seed, each method (cap 20000)

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<Activations> run_all(const Network& net, const std::vector<Vector>& xs)
{
    std::vector<Activations> out;
    for (const Vector& x : xs) {
        out.push_back(forward(net, x));
    }
    return out;
}

ReferenceSet refs_of(const Network& net, std::vector<Vector> xs, Norm norm = Norm::Linf)
{
    return make_reference_set(net, InputSet{std::move(xs), std::nullopt}, norm);
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome lp_faithfulness()
{
    Rng rng(1001);
    std::size_t optimal = 0, attempts = 0, bad = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t width = 4 + fixtures::pick(rng, 29);
        const std::size_t width2 = 4 + fixtures::pick(rng, 29);
        const std::size_t inputs = 2 + fixtures::pick(rng, 10);
        const Network net = fixtures::random_mlp(rng, {inputs, width, width2, 3});
        const Vector t = fixtures::random_input(rng, inputs);
        const Activations acts = forward(net, t);
        const ActivationPattern src = pattern_of(acts);

        std::vector<Requirement> pool = gen_nc(net);
        const auto ssc = gen_ssc(net);
        std::vector<Vector> samples{t};
        for (int i = 0; i < 30; ++i) {
            samples.push_back(fixtures::random_input(rng, inputs));
        }
        const auto nbc = gen_nbc(net, bounds_from_samples(net, samples));
        std::vector<Requirement> picked;
        for (int i = 0; i < 3; ++i) {
            picked.push_back(pool[fixtures::pick(rng, pool.size())]);
            picked.push_back(ssc[fixtures::pick(rng, ssc.size())]);
            picked.push_back(nbc[fixtures::pick(rng, nbc.size())]);
        }
        for (const Requirement& r : picked) {
            ++attempts;
            const SynthesisResult res = symbolic_lp(net, acts, r);
            if (res.status != LpStatus::Optimal) {
                continue;
            }
            ++optimal;
            const Activations got = forward(net, *res.input);
            ActivationPattern target = src;
            if (r.tag.family == Family::NC) {
                target = nc_target_pattern(src, r.tag.neuron).pattern;
            } else if (r.tag.family == Family::SSC) {
                target = ssc_target_pattern(src, r.tag.neuron, r.tag.decision).pattern;
            }
            bool ok = true;
            for (const NeuronId n : net.relu_neurons()) {
                const bool nbc_target = r.tag.family != Family::NC && r.tag.family != Family::SSC && n == r.tag.neuron;
                const auto bit = target.bit(n);
                if (!bit || nbc_target) {
                    continue;
                }
                const double u = got.pre(n);
                ok = ok && (*bit ? u >= kBitMargin : u <= -kBitMargin);
            }
            if (r.tag.family == Family::NBCHigh) {
                ok = ok && got.pre(r.tag.neuron) > r.bound;
            } else if (r.tag.family == Family::NBCLow) {
                ok = ok && got.pre(r.tag.neuron) < r.bound;
            }
            bad += !ok;
        }
    }
    return {optimal >= 100 && bad == 0,
            std::to_string(optimal) + " optimal of " + std::to_string(attempts) + " syntheses, " + std::to_string(bad) +
                " with a bit off or inside the margin"};
}

// Direct semantics of each family, written out without the formula evaluator.
bool brute_holds(const Requirement& r, const Activations& a, const Activations& b)
{
    const auto bit = [](const Activations& x, NeuronId n) { return x.pre(n) >= 0.0; };
    switch (r.tag.family) {
    case Family::NC: return bit(a, r.tag.neuron);
    case Family::NBCHigh: return a.pre(r.tag.neuron) - r.bound > 0.0;
    case Family::NBCLow: return a.pre(r.tag.neuron) - r.bound < 0.0;
    case Family::SSC: {
        const NeuronId c = r.tag.neuron;
        if (bit(a, c) == bit(b, c) || bit(a, r.tag.decision) == bit(b, r.tag.decision)) {
            return false;
        }
        for (int l = 0; l < static_cast<int>(a.u[c.layer].size()); ++l) {
            if (l != c.index && bit(a, {c.layer, l}) != bit(b, {c.layer, l})) {
                return false;
            }
        }
        return true;
    }
    case Family::LIP: {
        const LipschitzParams& p = *r.lipschitz;
        const Vector lo = p.box.lower(), hi = p.box.upper();
        const auto inside = [&](const Activations& x) {
            for (std::size_t i = 0; i < lo.size(); ++i) {
                if (x.input()[i] < lo[i] || x.input()[i] > hi[i]) {
                    return false;
                }
            }
            return true;
        };
        double dy = 0.0, dx = 0.0;
        for (std::size_t i = 0; i < a.output().size(); ++i) {
            dy = std::max(dy, std::abs(a.output()[i] - b.output()[i]));
        }
        for (std::size_t i = 0; i < a.input().size(); ++i) {
            dx = std::max(dx, std::abs(a.input()[i] - b.input()[i]));
        }
        return dy - p.c * dx > 0.0 && inside(a) && inside(b);
    }
    default: return false;
    }
}

Outcome semantic_equivalence()
{
    Rng rng(1002);
    std::size_t mismatches = 0, checked = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t inputs = 2 + fixtures::pick(rng, 3);
        const Network net = fixtures::random_mlp(rng, {inputs, 2 + fixtures::pick(rng, 5), 2 + fixtures::pick(rng, 5), 2});
        std::vector<Vector> xs;
        const std::size_t n = 1 + fixtures::pick(rng, 10);
        for (std::size_t i = 0; i < n; ++i) {
            xs.push_back(fixtures::grid_input(rng, inputs, 8));
        }
        const auto suite = run_all(net, xs);

        std::vector<Requirement> pool = gen_nc(net);
        for (auto&& family : {gen_ssc(net), gen_nbc(net, bounds_from_samples(net, xs, 0.0)),
                              gen_lipschitz(net, partition_around({xs[0], xs[n - 1]}, 0.3), fixtures::uniform(rng, 0.1, 3.0))}) {
            pool.insert(pool.end(), family.begin(), family.end());
        }
        std::vector<Requirement> reqs;
        const std::size_t m = 1 + fixtures::pick(rng, 50);
        for (std::size_t i = 0; i < m; ++i) {
            Requirement r = pool[fixtures::pick(rng, pool.size())];
            if (fixtures::pick(rng, 5) == 0) {
                r.quantifier = Quantifier::Forall;
            }
            reqs.push_back(std::move(r));
        }
        std::size_t expected_sat = 0;
        for (const Requirement& r : reqs) {
            bool any = false, every = true;
            for (const Activations& a : suite) {
                if (r.arity == 1) {
                    const bool v = brute_holds(r, a, a);
                    any = any || v;
                    every = every && v;
                    continue;
                }
                for (const Activations& b : suite) {
                    const bool v = brute_holds(r, a, b);
                    any = any || v;
                    every = every && v;
                }
            }
            const bool expect = r.quantifier == Quantifier::Exists ? any : every;
            expected_sat += expect;
            mismatches += satisfies(suite, r) != expect;
            ++checked;
        }
        mismatches += coverage(suite, reqs) != static_cast<double>(expected_sat) / static_cast<double>(reqs.size());
    }
    return {mismatches == 0, std::to_string(checked) + " requirement checks over 200 instances, " + std::to_string(mismatches) +
                                 " mismatches"};
}

Outcome solver_oracle()
{
    Rng rng(1003);
    int checked = 0, wrong = 0;
    int by_status[5] = {0, 0, 0, 0, 0};
    double worst = 0.0;
    while (checked < 500) {
        auto inst = lp_oracle::random_lp(rng);
        if (!inst) {
            continue;
        }
        ++checked;
        const lp_oracle::OracleResult expect = lp_oracle::vertex_oracle(inst->dense);
        const LpOutcome got = solve(inst->lp);
        ++by_status[static_cast<int>(expect.status)];
        if (got.status != expect.status) {
            ++wrong;
            continue;
        }
        if (expect.status == LpStatus::Optimal) {
            const double err = std::abs(got.objective - expect.objective) / std::max(1.0, std::abs(expect.objective));
            worst = std::max(worst, err);
            wrong += err > kSolverAgreement;
        }
    }
    return {wrong == 0, std::to_string(checked) + " LPs (" + std::to_string(by_status[0]) + " optimal, " + std::to_string(by_status[1]) +
                            " infeasible, " + std::to_string(by_status[2]) + " unbounded), " + std::to_string(wrong) +
                            " disagreements, worst relative gap " + fmt("%.1e", worst)};
}

RunConfig nc_config()
{
    RunConfig cfg;
    cfg.criterion = Criterion::NC;
    cfg.bound = 1.0;
    cfg.rng_seed = 4;
    return cfg;
}

Outcome nc_saturation()
{
    const fixtures::PlantedNet planted = fixtures::planted_net();
    Rng rng(1004);
    const Vector seed = fixtures::random_input(rng, 4);
    const RunResult res = run(planted.net, refs_of(planted.net, {seed}), {seed}, nc_config());

    std::size_t live = 0, live_sat = 0;
    bool dead_failed = true;
    for (const Requirement& r : res.requirements) {
        const bool dead = std::find(planted.dead.begin(), planted.dead.end(), r.tag.neuron) != planted.dead.end();
        if (dead) {
            dead_failed = dead_failed && r.status == Status::Failed;
        } else {
            ++live;
            live_sat += r.status == Status::Satisfied;
        }
    }
    std::vector<Vector> random;
    for (int i = 0; i < 1000; ++i) {
        random.push_back(fixtures::random_input(rng, 4));
    }
    const double random_cov = coverage(planted.net, random, gen_nc(planted.net));
    const double live_cov = static_cast<double>(live_sat) / static_cast<double>(live);
    const double cov = *res.report.coverage;
    return {live_cov >= kCoverageTarget && dead_failed && cov > random_cov,
            fmt("live-neuron coverage %.4f, overall %.4f vs 1000 random inputs %.4f", live_cov, cov, random_cov) +
                (dead_failed ? ", planted dead neurons failed" : ", a planted dead neuron is not marked failed") + ", " +
                std::to_string(res.suite.tests.size()) + " tests"};
}

Outcome minimal_distance()
{
    const double step = 1.0 / 255.0;
    const auto on_grid = [](double d) { return std::abs(d * 255.0 - std::round(d * 255.0)) < kGridTolerance; };
    double min_linf = 1e9;
    bool all_ok = true;
    bool one_step = false, one_pixel = false;
    std::size_t records = 0;

    // Boundary fixture plus random nets, every seed on the grid.
    std::vector<std::pair<Network, std::vector<Vector>>> cases;
    cases.push_back({fixtures::boundary_net(), {{127.0 / 255.0, 100.0 / 255.0}, {60.0 / 255.0, 1.0}}});
    Rng rng(1005);
    for (int i = 0; i < 6; ++i) {
        Network net = fixtures::random_mlp(rng, {6, 10, 8, 3});
        std::vector<Vector> seeds;
        for (int s = 0; s < 4; ++s) {
            seeds.push_back(fixtures::grid_input(rng, 6, 255));
        }
        cases.push_back({std::move(net), std::move(seeds)});
    }
    for (const auto& [net, seeds] : cases) {
        for (Criterion c : {Criterion::NC, Criterion::SSC, Criterion::NBC}) {
            RunConfig cfg;
            cfg.criterion = c;
            cfg.quantize_steps = 255;
            const RunResult res = run(net, refs_of(net, seeds), seeds, cfg);
            for (const AdversarialRecord& a : res.report.adversarial) {
                ++records;
                all_ok = all_ok && a.distance >= step - kGridTolerance && on_grid(a.distance);
                min_linf = std::min(min_linf, a.distance);
                one_step = one_step || std::abs(a.distance - step) < kGridTolerance;
            }
        }
        RunConfig l0;
        l0.norm = Norm::L0;
        const RunResult res = run(net, refs_of(net, seeds, Norm::L0), seeds, l0);
        for (const AdversarialRecord& a : res.report.adversarial) {
            ++records;
            all_ok = all_ok && a.distance >= 1.0 && a.distance == std::round(a.distance);
            one_pixel = one_pixel || a.distance == 1.0;
        }
    }
    return {all_ok && one_step && one_pixel,
            std::to_string(records) + " adversarial records, minimum Linf distance " + fmt("%.6f (%.3f steps)", min_linf, min_linf * 255.0) +
                (one_step ? ", one-step Linf example found" : ", no one-step Linf example") +
                (one_pixel ? ", one-pixel L0 example found" : ", no one-pixel L0 example")};
}

Outcome lipschitz_dominance()
{
    Rng rng(1006);
    const Network net = fixtures::random_mlp(rng, {8, 16, 16, 4});
    std::vector<Vector> seeds;
    for (int i = 0; i < 50; ++i) {
        seeds.push_back(fixtures::random_input(rng, 8));
    }
    RunConfig cfg;
    cfg.criterion = Criterion::Lipschitz;
    cfg.lip.c = 1e6;  // never reached, so both methods spend their whole budget
    cfg.lip.max_evaluations = kLipEvalBudget;
    cfg.rng_seed = 6;
    const RunResult res = run(net, refs_of(net, seeds), seeds, cfg);
    std::size_t wins = 0, seeds_seen = 0;
    double best_c = 0.0, best_r = 0.0;
    bool fair = true;
    for (std::size_t i = 0; i + 1 < res.lipschitz_rows.size(); i += 2) {
        const LipCsvRow& c = res.lipschitz_rows[i];
        const LipCsvRow& r = res.lipschitz_rows[i + 1];
        ++seeds_seen;
        wins += c.best_ratio >= r.best_ratio;
        best_c = std::max(best_c, c.best_ratio);
        best_r = std::max(best_r, r.best_ratio);
        fair = fair && r.evaluations <= c.evaluations && c.evaluations <= kLipEvalBudget;
    }
    const double share = seeds_seen ? static_cast<double>(wins) / static_cast<double>(seeds_seen) : 0.0;
    return {seeds_seen == 50 && fair && share >= kDominanceShare && best_c > best_r,
            std::to_string(wins) + "/" + std::to_string(seeds_seen) + " seeds with compass >= random" +
                fmt(", max ratio %.4f vs %.4f", best_c, best_r) + (fair ? "" : ", budgets unequal")};
}

Outcome compass_sanity()
{
    const Objective f = [](std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); };
    CompassOptions opts;
    opts.sigma0 = 0.25;
    opts.sigma_min = kSigmaMin;
    opts.max_iters = 150;
    const CompassResult res = compass_minimize(f, {0.0}, {0.0}, {1.0}, opts);
    const double err = std::abs(res.best[0] - 0.3);
    return {err <= kSigmaMin && res.iterations <= 150,
            fmt("x = %.8f, |x - 0.3| = %.2e after %.0f iterations", res.best[0], err, static_cast<double>(res.iterations))};
}

Outcome determinism(const std::filesystem::path& work)
{
    const fixtures::PlantedNet planted = fixtures::planted_net();
    Rng rng(1004);
    const Vector seed = fixtures::random_input(rng, 4);
    const RunConfig cfg = nc_config();
    for (const char* name : {"det_a", "det_b"}) {
        const RunResult res = run(planted.net, refs_of(planted.net, {seed}), {seed}, cfg);
        write_outputs(res, cfg, work / name);
    }
    const std::string a = slurp(work / "det_a" / "report.json");
    const std::string b = slurp(work / "det_b" / "report.json");
    return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different")};
}

Outcome reverification(const std::filesystem::path& work)
{
#ifdef CONCOLIC_CLI
    // Several criteria on the boundary fixture and a random net, verified by the CLI subcommand.
    Rng rng(1009);
    const Network random_net = fixtures::random_mlp(rng, {6, 12, 8, 3});
    save_model(random_net, work / "random.json");
    save_model(fixtures::boundary_net(), work / "boundary.json");
    std::filesystem::create_directories(work / "seeds_b");
    std::filesystem::create_directories(work / "seeds_r");
    write_vector(work / "seeds_b" / "a.vec", Vector{127.0 / 255.0, 0.4});
    write_vector(work / "seeds_b" / "b.vec", Vector{0.2, 0.9});
    for (int i = 0; i < 5; ++i) {
        write_vector(work / "seeds_r" / ("s" + std::to_string(i) + ".vec"), fixtures::grid_input(rng, 6, 255));
    }
    std::size_t runs = 0, verified_ok = 0, records = 0;
    const std::string cli = CONCOLIC_CLI;
    for (const auto& [model, seeds] : {std::pair{"boundary.json", "seeds_b"}, std::pair{"random.json", "seeds_r"}}) {
        for (const char* crit : {"nc", "ssc", "nbc"}) {
            const std::string out = (work / (std::string("v_") + seeds + "_" + crit)).string();
            const std::string m = (work / model).string();
            const std::string s = (work / seeds).string();
            const std::string gen = "\"" + cli + "\" --model " + m + " --seeds " + s + " --criterion " + crit +
                                    " --quantize 255 --out " + out + " >/dev/null 2>&1";
            if (std::system(gen.c_str()) != 0) {
                return {false, std::string("generation failed for ") + crit};
            }
            const std::string ver = "\"" + cli + "\" verify --model " + m + " --refs " + s + " --out " + out + " >/dev/null 2>&1";
            ++runs;
            verified_ok += std::system(ver.c_str()) == 0;
            const std::string report = slurp(std::filesystem::path(out) / "report.json");
            const auto pos = report.find("\"adversarial_count\": ");
            if (pos != std::string::npos) {
                records += std::stoul(report.substr(pos + 21));
            }
        }
    }
    return {verified_ok == runs && records > 0, std::to_string(verified_ok) + "/" + std::to_string(runs) + " runs verified, " +
                                                    std::to_string(records) + " adversarial records re-checked"};
#else
    (void)work;
    return {false, "built without the command-line tool"};
#endif
}

}  // namespace

int main()
{
    const std::filesystem::path work = std::filesystem::temp_directory_path() / ("concolic_acceptance_" + std::to_string(::getpid()));
    std::filesystem::remove_all(work);
    std::filesystem::create_directories(work);

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"C1 LP pattern faithfulness", lp_faithfulness},
        {"C2 semantic oracle equivalence", semantic_equivalence},
        {"C3 solver vs vertex enumeration", solver_oracle},
        {"C4 NC saturation on planted 4-16-16-3", nc_saturation},
        {"C5 minimal distance on the 1/255 grid", minimal_distance},
        {"C6 Lipschitz compass vs random", lipschitz_dominance},
        {"C7 compass search sanity", compass_sanity},
        {"C8 deterministic report.json", [&] { return determinism(work); }},
        {"C9 adversarial records re-verify", [&] { return reverification(work); }},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
        std::printf("%s %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs.count());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::filesystem::remove_all(work);
    return failed == 0 ? 0 : 1;
}
