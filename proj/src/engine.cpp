#include "concolic/encoding.hpp"
#include "concolic/engine.hpp"
#include "concolic/error.hpp"
#include "concolic/ranking.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace concolic {

using nlohmann::ordered_json;

std::string_view criterion_name(Criterion c)
{
    switch (c) {
    case Criterion::NC: return "nc";
    case Criterion::SSC: return "ssc";
    case Criterion::NBC: return "nbc";
    case Criterion::Lipschitz: return "lipschitz";
    }
    return "?";
}

Criterion parse_criterion(std::string_view name)
{
    for (Criterion c : {Criterion::NC, Criterion::SSC, Criterion::NBC, Criterion::Lipschitz}) {
        if (name == criterion_name(c)) {
            return c;
        }
    }
    throw ConfigError("unknown criterion \"" + std::string(name) + "\" (expected nc, ssc, nbc or lipschitz)");
}

std::vector<Vector> TestSuite::inputs() const
{
    std::vector<Vector> out;
    out.reserve(tests.size());
    for (const TestCase& t : tests) {
        out.push_back(t.input);
    }
    return out;
}

namespace {

std::string indexed_name(const char* prefix, std::size_t i, const char* ext)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%05zu%s", prefix, i, ext);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

void persist_suite(const TestSuite& suite, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    ordered_json tests = ordered_json::array();
    for (std::size_t i = 0; i < suite.tests.size(); ++i) {
        const TestCase& t = suite.tests[i];
        const std::string file = indexed_name("t", i, ".vec");
        write_vector(dir / file, t.input);
        ordered_json entry;
        entry["file"] = file;
        entry["origin"] = t.origin;
        entry["parent"] = t.parent ? ordered_json(*t.parent) : ordered_json(nullptr);
        tests.push_back(std::move(entry));
    }
    ordered_json doc;
    doc["tests"] = std::move(tests);
    write_text(dir / "manifest.json", doc.dump(1) + "\n");
}

TestSuite load_suite(const std::filesystem::path& dir)
{
    const std::filesystem::path manifest = dir / "manifest.json";
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_text(manifest));
    } catch (const ordered_json::parse_error& e) {
        throw ParseError(manifest.string() + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object() || !doc.contains("tests") || !doc["tests"].is_array()) {
        throw ParseError(manifest.string() + ": expected an object with a \"tests\" array");
    }
    TestSuite suite;
    const ordered_json& tests = doc["tests"];
    for (std::size_t i = 0; i < tests.size(); ++i) {
        const ordered_json& e = tests[i];
        const std::string where = manifest.string() + ": tests[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("file") || !e["file"].is_string() || !e.contains("origin") || !e["origin"].is_string()) {
            throw ParseError(where + " needs string \"file\" and \"origin\"");
        }
        TestCase t;
        t.origin = e["origin"].get<std::string>();
        if (e.contains("parent") && !e["parent"].is_null()) {
            if (!e["parent"].is_number_unsigned() || e["parent"].get<std::size_t>() >= i) {
                throw ParseError(where + " has a parent that is not an earlier test");
            }
            t.parent = e["parent"].get<std::size_t>();
        }
        const std::filesystem::path file = dir / e["file"].get<std::string>();
        try {
            t.input = read_vector(file);
        } catch (const Error& err) {
            throw ParseError(where + " (" + file.string() + "): " + err.what());
        }
        suite.tests.push_back(std::move(t));
    }
    return suite;
}

double RunConfig::validity_bound() const
{
    if (bound) {
        return *bound;
    }
    return norm == Norm::Linf ? 0.3 : 100.0;
}

void RunConfig::validate() const
{
    if (norm == Norm::L0 && criterion == Criterion::SSC) {
        throw ConfigError("the ssc criterion cannot run under the l0 norm");
    }
    if (norm == Norm::L0 && criterion == Criterion::Lipschitz) {
        throw ConfigError("the lipschitz criterion runs under the linf norm only");
    }
    if (max_attempts == 0) {
        throw ConfigError("max attempts must be positive");
    }
    if (!(timeout_seconds > 0.0)) {
        throw ConfigError("timeout must be positive");
    }
    if (!(validity_bound() > 0.0) || !std::isfinite(validity_bound())) {
        throw ConfigError("validity bound must be positive");
    }
    if (norm == Norm::L0 && l0.budget == 0) {
        throw ConfigError("l0 budget must be positive");
    }
    if (quantize_steps && *quantize_steps <= 0) {
        throw ConfigError("quantization steps must be positive");
    }
    if (!(nbc_widen >= 0.0)) {
        throw ConfigError("NBC widening must be non-negative");
    }
    if (criterion == Criterion::Lipschitz) {
        lip.validate();
    }
}

namespace {

/// Rounds x onto the grid, away from the anchor coordinate it was moved from.
void snap_outward(Vector& x, std::span<const double> anchor, int steps)
{
    const double s = steps;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - anchor[i]) <= 1e-9) {
            x[i] = anchor[i];
        } else if (x[i] > anchor[i]) {
            x[i] = std::ceil(x[i] * s - 1e-9) / s;
        } else {
            x[i] = std::floor(x[i] * s + 1e-9) / s;
        }
        x[i] = std::clamp(x[i], 0.0, 1.0);
    }
}

class Loop {
public:
    Loop(const Network& net, const ReferenceSet& refs, const RunConfig& cfg)
        : net_(net)
        , refs_(refs)
        , cfg_(cfg)
        , start_(std::chrono::steady_clock::now())
    {
    }

    RunResult execute(const std::vector<Vector>& seeds)
    {
        if (seeds.empty()) {
            throw ConfigError("at least one seed input is required");
        }
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (seeds[i].size() != net_.input_size()) {
                throw ShapeError("seed " + std::to_string(i) + " has " + std::to_string(seeds[i].size()) + " values, the network takes " +
                                 std::to_string(net_.input_size()));
            }
        }
        const std::size_t used = cfg_.criterion == Criterion::NC ? 1 : seeds.size();
        for (std::size_t i = 0; i < used; ++i) {
            add_test({seeds[i], "seed", std::nullopt});
        }
        generate(seeds);
        for (std::size_t r = 0; r < res_.requirements.size(); ++r) {
            if (satisfies(acts_, res_.requirements[r])) {
                res_.requirements[r].status = Status::Satisfied;
            }
        }
        if (cfg_.criterion == Criterion::Lipschitz) {
            lipschitz_loop();
        } else {
            concolic_loop();
        }
        res_.report = suite_report(net_, refs_, res_.suite.inputs(), res_.requirements, cfg_.validity_bound());
        return std::move(res_);
    }

private:
    void generate(const std::vector<Vector>& seeds)
    {
        switch (cfg_.criterion) {
        case Criterion::NC: res_.requirements = gen_nc(net_); break;
        case Criterion::SSC: res_.requirements = gen_ssc(net_, cfg_.ssc_subset); break;
        case Criterion::NBC:
            res_.requirements = gen_nbc(net_, bounds_from_samples(net_, seeds, cfg_.nbc_widen));
            break;
        case Criterion::Lipschitz:
            res_.requirements = gen_lipschitz(net_, partition_around(seeds, cfg_.lip.delta), cfg_.lip.c, Norm::Linf);
            break;
        }
    }

    bool out_of_time()
    {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
        if (elapsed.count() > cfg_.timeout_seconds) {
            res_.timed_out = true;
        }
        return res_.timed_out;
    }

    void add_test(TestCase t)
    {
        acts_.push_back(forward(net_, t.input));
        res_.suite.tests.push_back(std::move(t));
    }

    /// Appends t if it is new and valid, then updates satisfaction.
    bool offer(Vector input, const std::string& origin, std::size_t parent)
    {
        for (const TestCase& t : res_.suite.tests) {
            if (t.input == input) {
                return false;
            }
        }
        if (!validity_check(refs_, input, cfg_.validity_bound())) {
            return false;
        }
        add_test({std::move(input), origin, parent});
        const std::size_t newest = acts_.size() - 1;
        for (Requirement& r : res_.requirements) {
            if (r.status != Status::Satisfied && satisfied_with(acts_, r, newest)) {
                r.status = Status::Satisfied;
            }
        }
        return true;
    }

    std::optional<Vector> synthesize(std::size_t test, const Requirement& r)
    {
        ++res_.syntheses;
        const Activations& t = acts_[test];
        if (cfg_.norm == Norm::L0) {
            return l0_search(net_, t, r, cfg_.l0).input;
        }
        SynthesisOptions opt;
        opt.keep_problem = cfg_.dump_lp_dir.has_value();
        SynthesisResult s = symbolic_lp(net_, t, r, opt);
        if (s.problem) {
            std::filesystem::create_directories(*cfg_.dump_lp_dir);
            std::string tag = r.tag.str();
            std::replace_if(tag.begin(), tag.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }, '_');
            std::ofstream out(*cfg_.dump_lp_dir / (indexed_name("lp", res_.syntheses, "_") + tag + ".lp"));
            out << "\\ " << r.tag.str() << " from test " << test << ": " << lp_status_name(s.status) << '\n';
            s.problem->write_lp(out);
        }
        if (!s.input) {
            return std::nullopt;
        }
        if (cfg_.quantize_steps) {
            snap_outward(*s.input, t.input(), *cfg_.quantize_steps);
        }
        return s.input;
    }

    void concolic_loop()
    {
        const LayerFactors factors = estimate_layer_factors(net_, acts_);
        std::set<std::pair<std::size_t, std::size_t>> tried;
        std::vector<std::size_t> attempts(res_.requirements.size(), 0);
        const SkipFn skip = [&](std::size_t r, std::size_t t) { return tried.count({r, t}) > 0; };
        while (!out_of_time()) {
            const std::optional<RankedCandidate> cand = rank_requirements(acts_, res_.requirements, factors, skip);
            if (!cand) {
                break;
            }
            const std::size_t ri = cand->requirement;
            const std::size_t test = cand->witnesses.front();
            tried.insert({ri, test});
            ++attempts[ri];
            if (std::optional<Vector> next = synthesize(test, res_.requirements[ri])) {
                offer(std::move(*next), res_.requirements[ri].tag.str(), test);
            }
            Requirement& r = res_.requirements[ri];
            if (r.status == Status::Open && attempts[ri] >= cfg_.max_attempts) {
                r.status = Status::Failed;
            }
        }
        if (!res_.timed_out) {
            // Whatever is still open has run out of candidates.
            for (Requirement& r : res_.requirements) {
                if (r.status == Status::Open) {
                    r.status = Status::Failed;
                }
            }
        }
    }

    void lipschitz_loop()
    {
        for (std::size_t ri = 0; ri < res_.requirements.size() && !out_of_time(); ++ri) {
            Requirement& r = res_.requirements[ri];
            const std::size_t seed = r.tag.box;
            const Vector t0 = res_.suite.tests[seed].input;
            const LipWitness w = lipschitz_search(net_, t0, cfg_.lip);
            ++res_.syntheses;
            Rng rng(cfg_.rng_seed + seed);
            const std::size_t pairs = std::max<std::size_t>(1, w.evaluations / 2);
            const LipWitness base = random_baseline(net_, t0, cfg_.lip, pairs, rng);
            const std::string id = "s" + std::to_string(seed);
            res_.lipschitz_rows.push_back({id, "concolic", w.ratio, w.satisfied, w.evaluations});
            res_.lipschitz_rows.push_back({id, "random", base.ratio, base.satisfied, base.evaluations});
            if (r.status != Status::Open) {
                continue;
            }
            offer(w.t1, r.tag.str(), seed);
            offer(w.t2, r.tag.str(), seed);
            if (r.status == Status::Open) {
                r.status = Status::Failed;
            }
        }
    }

    const Network& net_;
    const ReferenceSet& refs_;
    const RunConfig& cfg_;
    std::chrono::steady_clock::time_point start_;
    RunResult res_;
    std::vector<Activations> acts_;
};

ordered_json optional_number(const std::optional<double>& v)
{
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

RunResult run(const Network& net, const ReferenceSet& refs, const std::vector<Vector>& seeds, const RunConfig& cfg)
{
    cfg.validate();
    return Loop(net, refs, cfg).execute(seeds);
}

std::string report_json(const RunResult& result, const RunConfig& cfg)
{
    const CoverageReport& rep = result.report;
    ordered_json doc;
    doc["criterion"] = criterion_name(cfg.criterion);
    doc["norm"] = norm_name(cfg.norm);
    doc["bound"] = cfg.validity_bound();
    doc["tests"] = rep.tests;
    doc["valid_tests"] = rep.valid_tests;
    doc["syntheses"] = result.syntheses;
    doc["timed_out"] = result.timed_out;
    doc["coverage"] = optional_number(rep.coverage);
    doc["requirements_total"] = rep.requirements.size();
    doc["satisfied"] = rep.satisfied;
    doc["open"] = rep.open;
    doc["failed"] = rep.failed;
    doc["adversarial_count"] = rep.adversarial.size();
    doc["adversary_rate"] = rep.adversary_rate;
    doc["min_distance"] = optional_number(rep.min_distance);
    doc["mean_distance"] = optional_number(rep.mean_distance);
    ordered_json reqs = ordered_json::array();
    for (const RequirementOutcome& r : rep.requirements) {
        reqs.push_back({{"tag", r.tag}, {"status", status_name(r.status)}});
    }
    doc["requirements"] = std::move(reqs);
    ordered_json adv = ordered_json::array();
    for (std::size_t i = 0; i < rep.adversarial.size(); ++i) {
        const AdversarialRecord& a = rep.adversarial[i];
        adv.push_back({{"file", indexed_name("adv", i, ".vec")},
                       {"test", a.test},
                       {"reference", a.reference},
                       {"distance", a.distance},
                       {"label", a.label},
                       {"reference_label", a.reference_label},
                       {"trusted_label", a.trusted_label}});
    }
    doc["adversarial"] = std::move(adv);
    if (cfg.criterion == Criterion::Lipschitz) {
        ordered_json rows = ordered_json::array();
        for (const LipCsvRow& r : result.lipschitz_rows) {
            rows.push_back({{"seed", r.seed}, {"method", r.method}, {"best_ratio", r.best_ratio}, {"satisfied", r.satisfied},
                            {"forward_evals", r.evaluations}});
        }
        doc["lipschitz"] = std::move(rows);
    }
    return doc.dump(1) + "\n";
}

void write_outputs(const RunResult& result, const RunConfig& cfg, const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    persist_suite(result.suite, out_dir / "suite");
    const std::filesystem::path adv_dir = out_dir / "adversarial";
    std::filesystem::remove_all(adv_dir);
    std::filesystem::create_directories(adv_dir);
    for (std::size_t i = 0; i < result.report.adversarial.size(); ++i) {
        write_vector(adv_dir / indexed_name("adv", i, ".vec"), result.report.adversarial[i].input);
    }
    write_text(out_dir / "report.json", report_json(result, cfg));
    if (cfg.criterion == Criterion::Lipschitz) {
        std::ostringstream csv;
        write_lipschitz_csv(csv, result.lipschitz_rows);
        write_text(out_dir / "lipschitz.csv", csv.str());
    }
}

VerifyOutcome verify_artifacts(const Network& net, const ReferenceSet& refs, const std::filesystem::path& out_dir)
{
    const std::filesystem::path report_path = out_dir / "report.json";
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_text(report_path));
    } catch (const ordered_json::parse_error& e) {
        throw ParseError(report_path.string() + ": not valid JSON: " + e.what());
    }
    if (!doc.contains("adversarial") || !doc["adversarial"].is_array() || !doc.contains("bound") || !doc.contains("norm")) {
        throw ParseError(report_path.string() + ": missing \"adversarial\", \"bound\" or \"norm\"");
    }
    ReferenceSet local = refs;
    local.norm = parse_norm(doc["norm"].get<std::string>());
    const double bound = doc["bound"].get<double>();

    VerifyOutcome out;
    for (const ordered_json& rec : doc["adversarial"]) {
        ++out.checked;
        const std::string file = rec.at("file").get<std::string>();
        const Vector t = read_vector(out_dir / "adversarial" / file);
        const Nearest near = nearest(local, t);
        const std::size_t label = forward(net, t).label;
        const std::size_t ref_label = forward(net, local.inputs[near.index]).label;
        std::vector<std::string> problems;
        if (label == ref_label) {
            problems.push_back("labels agree (" + std::to_string(label) + ")");
        }
        if (!(near.distance <= bound)) {
            problems.push_back("distance " + format_double(near.distance) + " exceeds bound " + format_double(bound));
        }
        if (near.distance != rec.at("distance").get<double>()) {
            problems.push_back("recorded distance " + format_double(rec.at("distance").get<double>()) + " differs from " +
                               format_double(near.distance));
        }
        if (label != rec.at("label").get<std::size_t>() || ref_label != rec.at("reference_label").get<std::size_t>()) {
            problems.push_back("recorded labels differ from recomputed ones");
        }
        if (problems.empty()) {
            ++out.passed;
        } else {
            std::string msg = file + ":";
            for (const std::string& p : problems) {
                msg += " " + p + ";";
            }
            out.failures.push_back(msg);
        }
    }
    return out;
}

}  // namespace concolic
