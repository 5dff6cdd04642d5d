// concolic-dnn: generate a coverage-driven test suite for a ReLU network, or
// re-verify the adversarial examples of a previous run.
#include "concolic/engine.hpp"
#include "concolic/error.hpp"
#include "concolic/format.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTimeout = 3;

struct Args {
    std::string model;
    std::string criterion = "nc";
    std::string norm = "linf";
    std::string seeds;
    std::string refs;
    std::optional<double> bound;
    std::size_t l0_budget = 100;
    double lip_c = 1.0;
    double lip_delta = 0.1;
    std::size_t lip_evals = 0;
    std::size_t max_attempts = 3;
    double timeout = 600.0;
    std::string out;
    std::uint64_t rng_seed = 0;
    std::optional<int> quantize;
    bool dump_lp = false;
};

int generate(const Args& a)
{
    using namespace concolic;
    RunConfig cfg;
    cfg.criterion = parse_criterion(a.criterion);
    cfg.norm = parse_norm(a.norm);
    cfg.bound = a.bound;
    cfg.l0.budget = a.l0_budget;
    cfg.lip.c = a.lip_c;
    cfg.lip.delta = a.lip_delta;
    cfg.lip.max_evaluations = a.lip_evals;
    cfg.max_attempts = a.max_attempts;
    cfg.timeout_seconds = a.timeout;
    cfg.rng_seed = a.rng_seed;
    cfg.quantize_steps = a.quantize;
    if (a.dump_lp) {
        cfg.dump_lp_dir = std::filesystem::path(a.out) / "lp";
    }
    cfg.validate();

    const Network net = load_model(a.model);
    InputSet seeds = load_inputs(a.seeds);
    InputSet ref_inputs = a.refs.empty() ? seeds : load_inputs(a.refs);
    const ReferenceSet refs = make_reference_set(net, std::move(ref_inputs), cfg.norm);

    const RunResult result = run(net, refs, seeds.inputs, cfg);
    write_outputs(result, cfg, a.out);

    const CoverageReport& rep = result.report;
    std::printf("%s/%s: coverage %s (%zu satisfied, %zu open, %zu failed of %zu), %zu tests, %zu adversarial\n",
                a.criterion.c_str(), a.norm.c_str(), rep.coverage ? format_double(*rep.coverage).c_str() : "n/a", rep.satisfied,
                rep.open, rep.failed, rep.requirements.size(), rep.tests, rep.adversarial.size());
    if (result.timed_out) {
        std::fprintf(stderr, "concolic-dnn: wall-clock limit of %g s reached; partial results written\n", cfg.timeout_seconds);
        return kExitTimeout;
    }
    return 0;
}

int verify(const Args& a)
{
    using namespace concolic;
    const Network net = load_model(a.model);
    InputSet ref_inputs = load_inputs(a.refs);
    const ReferenceSet refs = make_reference_set(net, std::move(ref_inputs), Norm::Linf);
    const VerifyOutcome v = verify_artifacts(net, refs, a.out);
    for (const std::string& f : v.failures) {
        std::printf("FAIL %s\n", f.c_str());
    }
    std::printf("verified %zu of %zu adversarial records\n", v.passed, v.checked);
    return v.passed == v.checked ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    Args a;
    CLI::App app{"Concolic test generation for feedforward ReLU networks"};
    app.add_option("--model", a.model, "network JSON file");
    app.add_option("--criterion", a.criterion, "nc, ssc, nbc or lipschitz")->capture_default_str();
    app.add_option("--norm", a.norm, "linf or l0")->capture_default_str();
    app.add_option("--seeds", a.seeds, ".vec file, directory of .vec files, or inputs JSON");
    app.add_option("--refs", a.refs, "reference inputs (same formats); defaults to the seeds");
    app.add_option("--bound", a.bound, "validity bound (default 0.3 for linf, 100 for l0)");
    app.add_option("--l0-budget", a.l0_budget, "pixels the l0 search may change")->capture_default_str();
    app.add_option("--lip-c", a.lip_c, "Lipschitz constant to refute")->capture_default_str();
    app.add_option("--lip-delta", a.lip_delta, "radius of the box around each seed")->capture_default_str();
    app.add_option("--lip-evals", a.lip_evals, "forward evaluations per seed for the Lipschitz search (0: unlimited)")
        ->capture_default_str();
    app.add_option("--max-attempts", a.max_attempts, "candidates tried per requirement")->capture_default_str();
    app.add_option("--timeout", a.timeout, "wall-clock limit in seconds")->capture_default_str();
    app.add_option("--out", a.out, "output directory");
    app.add_option("--rng-seed", a.rng_seed, "seed for random sampling")->capture_default_str();
    app.add_option("--quantize", a.quantize, "snap generated inputs onto the 1/N grid");
    app.add_flag("--dump-lp", a.dump_lp, "write every synthesis LP under OUT/lp");

    CLI::App* ver = app.add_subcommand("verify", "re-check the adversarial records of a finished run");
    ver->add_option("--model", a.model, "network JSON file")->required();
    ver->add_option("--refs", a.refs, "reference inputs used by the run")->required();
    ver->add_option("--out", a.out, "output directory of the run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (ver->parsed()) {
            return verify(a);
        }
        if (a.model.empty() || a.seeds.empty() || a.out.empty()) {
            std::fprintf(stderr, "concolic-dnn: --model, --seeds and --out are required\n");
            return kExitConfig;
        }
        return generate(a);
    } catch (const concolic::ConfigError& e) {
        std::fprintf(stderr, "concolic-dnn: configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "concolic-dnn: %s\n", e.what());
        return 1;
    }
}
