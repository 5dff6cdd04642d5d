// The concolic loop: rank (test, requirement) pairs, synthesize a new test
// for the best one, keep it if valid, until every requirement is satisfied
// or given up on.
#pragma once

#include "concolic/dr_logic.hpp"
#include "concolic/l0_search.hpp"
#include "concolic/lipschitz.hpp"
#include "concolic/oracle.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace concolic {

enum class Criterion { NC, SSC, NBC, Lipschitz };

std::string_view criterion_name(Criterion c);
/// "nc", "ssc", "nbc" or "lipschitz"; throws ConfigError otherwise.
Criterion parse_criterion(std::string_view name);

struct TestCase {
    Vector input;
    /// "seed", or the tag of the requirement the test was synthesized for.
    std::string origin = "seed";
    /// Index of the test it was derived from.
    std::optional<std::size_t> parent;

    bool operator==(const TestCase&) const = default;
};

struct TestSuite {
    std::vector<TestCase> tests;

    std::vector<Vector> inputs() const;
    bool operator==(const TestSuite&) const = default;
};

/// Writes dir/manifest.json and one t<index>.vec file per test.
void persist_suite(const TestSuite& suite, const std::filesystem::path& dir);
/// Throws ParseError naming the manifest entry or file at fault.
TestSuite load_suite(const std::filesystem::path& dir);

struct RunConfig {
    Criterion criterion = Criterion::NC;
    Norm norm = Norm::Linf;
    std::size_t max_attempts = 3;
    double timeout_seconds = 600.0;
    /// Validity bound; defaults to 0.3 under linf and 100 pixels under l0.
    std::optional<double> bound;
    L0Options l0;
    LipConfig lip;
    std::uint64_t rng_seed = 0;
    /// Snap synthesized inputs onto the 1/steps grid, rounding away from the
    /// test they were derived from.
    std::optional<int> quantize_steps;
    double nbc_widen = 0.05;
    /// SSC pairs to cover; empty covers every adjacent pair.
    std::vector<std::pair<NeuronId, NeuronId>> ssc_subset;
    /// When set, every synthesis LP is written here in LP format.
    std::optional<std::filesystem::path> dump_lp_dir;

    double validity_bound() const;
    /// Throws ConfigError for conflicting or out-of-range settings.
    void validate() const;
};

struct RunResult {
    TestSuite suite;
    std::vector<Requirement> requirements;
    CoverageReport report;
    bool timed_out = false;
    std::size_t syntheses = 0;
    std::vector<LipCsvRow> lipschitz_rows;
};

/// NC uses only the first seed; SSC and NBC start from every seed (NBC
/// bounds come from the seeds too). Lipschitz runs place one box around each
/// seed.
RunResult run(const Network& net, const ReferenceSet& refs, const std::vector<Vector>& seeds, const RunConfig& cfg);

/// report.json content: deterministic, no timestamps.
std::string report_json(const RunResult& result, const RunConfig& cfg);

/// suite/, report.json, adversarial/ and (for Lipschitz runs) lipschitz.csv.
void write_outputs(const RunResult& result, const RunConfig& cfg, const std::filesystem::path& out_dir);

struct VerifyOutcome {
    std::size_t checked = 0;
    std::size_t passed = 0;
    std::vector<std::string> failures;
};

/// Re-checks every adversarial record in out_dir/report.json from the files
/// on disk: labels must differ and the nearest-reference distance must be
/// within the bound.
VerifyOutcome verify_artifacts(const Network& net, const ReferenceSet& refs, const std::filesystem::path& out_dir);

}  // namespace concolic
