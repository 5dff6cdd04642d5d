#include "concolic/encoding.hpp"
#include "concolic/error.hpp"
#include "concolic/lp.hpp"
#include "fixtures.hpp"
#include "lp_oracle.hpp"

#include <doctest.h>

#include <sstream>

using namespace concolic;
using namespace lp_oracle;

namespace {

Network two_two_net()
{
    Rng rng(41);
    return fixtures::random_mlp(rng, {2, 2, 2});
}

}  // namespace

TEST_CASE("simplex on small analytic problems")
{
    SUBCASE("min d with d >= 0.2 and d >= -x, x free")
    {
        LpProblem p;
        const VarId d = p.add_variable("d", -kInf, kInf);
        const VarId x = p.add_variable("x", -kInf, kInf);
        p.add_constraint({{d, 1.0}}, Sense::GreaterEq, 0.2);
        p.add_constraint({{d, 1.0}, {x, 1.0}}, Sense::GreaterEq, 0.0);
        p.set_objective({{d, 1.0}});
        const LpOutcome o = solve(p);
        REQUIRE(o.status == LpStatus::Optimal);
        CHECK(o.objective == doctest::Approx(0.2).epsilon(1e-9));
        CHECK(o.values[d] == doctest::Approx(0.2).epsilon(1e-9));
        CHECK(o.values[x] >= -0.2 - kLpTolerance);
        CHECK(o.max_violation <= kLpTolerance);
    }
    SUBCASE("contradictory bounds")
    {
        LpProblem p;
        const VarId x = p.add_variable("x", -kInf, kInf);
        p.add_constraint({{x, 1.0}}, Sense::GreaterEq, 1.0);
        p.add_constraint({{x, 1.0}}, Sense::LessEq, 0.0);
        CHECK(solve(p).status == LpStatus::Infeasible);

        LpProblem q;
        q.add_variable("y", 2.0, 1.0);
        CHECK(solve(q).status == LpStatus::Infeasible);
    }
    SUBCASE("unbounded below")
    {
        LpProblem p;
        const VarId d = p.add_variable("d", -kInf, kInf);
        p.add_constraint({{d, 1.0}}, Sense::LessEq, 3.0);
        p.set_objective({{d, 1.0}});
        CHECK(solve(p).status == LpStatus::Unbounded);
    }
    SUBCASE("a classic cycling example terminates at the optimum")
    {
        LpProblem p;
        std::vector<VarId> x;
        for (int i = 0; i < 4; ++i) {
            x.push_back(p.add_variable("x" + std::to_string(i)));
        }
        p.add_constraint({{x[0], 0.25}, {x[1], -8.0}, {x[2], -1.0}, {x[3], 9.0}}, Sense::LessEq, 0.0);
        p.add_constraint({{x[0], 0.5}, {x[1], -12.0}, {x[2], -0.5}, {x[3], 3.0}}, Sense::LessEq, 0.0);
        p.add_constraint({{x[2], 1.0}}, Sense::LessEq, 1.0);
        p.set_objective({{x[0], -0.75}, {x[1], 20.0}, {x[2], -0.5}, {x[3], 6.0}});
        const LpOutcome o = solve(p);
        REQUIRE(o.status == LpStatus::Optimal);
        CHECK(o.objective == doctest::Approx(-1.25).epsilon(1e-9));
    }
    SUBCASE("iteration limit")
    {
        LpProblem p;
        std::vector<VarId> x;
        std::vector<LinearTerm> obj;
        for (int i = 0; i < 5; ++i) {
            x.push_back(p.add_variable("x" + std::to_string(i), 0.0, 1.0 + i));
            obj.push_back({x.back(), -1.0});
        }
        p.set_objective(obj);
        SimplexOptions opts;
        opts.max_iterations = 1;
        CHECK(solve(p, opts).status == LpStatus::IterationLimit);
        CHECK(solve(p).objective == doctest::Approx(-15.0));
    }
}

TEST_CASE("malformed problems")
{
    LpProblem p;
    const VarId x = p.add_variable("x");
    CHECK_THROWS_AS(p.add_constraint({{x + 1, 1.0}}, Sense::LessEq, 0.0), EncodingError);
    CHECK_THROWS_AS(p.add_constraint({{x, std::nan("")}}, Sense::LessEq, 0.0), DomainError);
    CHECK_THROWS_AS(p.add_constraint({{x, 1.0}}, Sense::LessEq, kInf), DomainError);
}

TEST_CASE("simplex agrees with vertex enumeration on random LPs")
{
    Rng rng(42);
    int checked = 0;
    int by_status[3] = {0, 0, 0};
    while (checked < 400) {
        auto inst = random_lp(rng);
        if (!inst) {
            continue;
        }
        ++checked;
        const OracleResult expect = vertex_oracle(inst->dense);
        const LpOutcome got = solve(inst->lp);
        CAPTURE(checked);
        REQUIRE(got.status == expect.status);
        ++by_status[static_cast<int>(expect.status)];
        if (expect.status == LpStatus::Optimal) {
            CHECK(got.objective == doctest::Approx(expect.objective).epsilon(1e-6).scale(1.0));
            CHECK(inst->lp.max_violation(got.values) <= kLpTolerance);
            CHECK(inst->lp.objective_value(got.values) == doctest::Approx(got.objective).epsilon(1e-9));
        }
    }
    MESSAGE("optimal " << by_status[0] << ", infeasible " << by_status[1] << ", unbounded " << by_status[2]);
    CHECK(by_status[0] > 50);
    CHECK(by_status[1] > 10);
    CHECK(by_status[2] > 10);
}

TEST_CASE("pattern encoding shape")
{
    const Network net = two_two_net();
    const Activations a = forward(net, std::vector<double>{0.3, 0.6});
    PatternEncoding enc = encode_pattern(net, pattern_of(a), 2);
    CHECK(enc.lp.constraint_count() == 6);
    std::size_t aff = 0;
    for (const LpConstraint& c : enc.lp.constraints()) {
        aff += c.name.rfind("aff", 0) == 0;
    }
    CHECK(aff == 2);
    REQUIRE(enc.input.size() == 2);
    for (VarId x : enc.input) {
        CHECK(enc.lp.variables()[x].lower == 0.0);
        CHECK(enc.lp.variables()[x].upper == 1.0);
    }
    const std::size_t before = enc.lp.constraint_count();
    add_chebyshev_objective(enc, a.input());
    CHECK(enc.lp.constraint_count() == before + 4);
    REQUIRE(enc.distance.has_value());

    ActivationPattern empty(net);
    CHECK_THROWS_AS(encode_pattern(net, empty, 3), EncodingError);
    CHECK_NOTHROW(encode_pattern(net, empty, 2));

    std::ostringstream os;
    enc.lp.write_lp(os);
    const std::string text = os.str();
    CHECK(text.rfind("Minimize\n obj:", 0) == 0);
    CHECK(text.find("Subject To\n") != std::string::npos);
    CHECK(text.find(" 0 <= x0 <= 1\n") != std::string::npos);
    CHECK(text.find(" u2_0 free\n") != std::string::npos);
    CHECK(text.find(" dup0:") != std::string::npos);
    CHECK(text.substr(text.size() - 4) == "End\n");
}

TEST_CASE("Chebyshev distance on one input")
{
    PatternEncoding enc;
    const VarId x = enc.lp.add_variable("x0", 0.0, 1.0);
    enc.input = {x};
    enc.lp.add_constraint({{x, 1.0}}, Sense::GreaterEq, 0.5);
    add_chebyshev_objective(enc, std::vector<double>{0.3});
    LpOutcome o = solve(enc.lp);
    REQUIRE(o.status == LpStatus::Optimal);
    CHECK(o.values[x] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(o.objective == doctest::Approx(0.2).epsilon(1e-9));

    PatternEncoding inside;
    const VarId y = inside.lp.add_variable("x0", 0.0, 1.0);
    inside.input = {y};
    inside.lp.add_constraint({{y, 1.0}}, Sense::GreaterEq, 0.5);
    add_chebyshev_objective(inside, std::vector<double>{0.8});
    o = solve(inside.lp);
    REQUIRE(o.status == LpStatus::Optimal);
    CHECK(std::abs(o.objective) <= kLpTolerance);
    CHECK(o.values[y] == doctest::Approx(0.8));
}

TEST_CASE("an all-active identity layer admits the whole box")
{
    const Network id = fixtures::identity_net(3);
    Rng rng(43);
    for (int i = 0; i < 20; ++i) {
        const Vector anchor = fixtures::random_input(rng, 3);
        PatternEncoding enc = encode_pattern(id, pattern_of(forward(id, anchor)), 2);
        add_chebyshev_objective(enc, anchor);
        const LpOutcome o = solve(enc.lp);
        REQUIRE(o.status == LpStatus::Optimal);
        CHECK(std::abs(o.objective) <= kLpTolerance);
    }
}

TEST_CASE("target patterns")
{
    Rng rng(44);
    const Network net = fixtures::random_mlp(rng, {3, 3, 4, 3, 2});
    const ActivationPattern src = pattern_of(forward(net, fixtures::random_input(rng, 3)));

    const TargetPattern nc = nc_target_pattern(src, {3, 2});
    CHECK(nc.last_layer == 3);
    CHECK(nc.pattern.bit({3, 2}) == !*src.bit({3, 2}));
    for (int l = 0; l < 3; ++l) {
        CHECK(nc.pattern.bit({2, l}) == src.bit({2, l}));
    }
    CHECK_FALSE(nc.pattern.constrained({3, 0}));
    CHECK_FALSE(nc.pattern.constrained({4, 1}));
    CHECK(nc.pattern.constrained_count() == 4);

    const TargetPattern ssc = ssc_target_pattern(src, {2, 1}, {3, 3});
    CHECK(ssc.last_layer == 3);
    CHECK(ssc.pattern.bit({2, 1}) == !*src.bit({2, 1}));
    CHECK(ssc.pattern.bit({3, 3}) == !*src.bit({3, 3}));
    CHECK(ssc.pattern.bit({2, 0}) == src.bit({2, 0}));
    CHECK(ssc.pattern.bit({2, 2}) == src.bit({2, 2}));
    CHECK_FALSE(ssc.pattern.constrained({3, 0}));
    CHECK(ssc.pattern.constrained_count() == 4);
    CHECK_THROWS(ssc_target_pattern(src, {2, 1}, {4, 0}));
}

TEST_CASE("NBC branch rule")
{
    const Network net = fixtures::identity_net(2);
    const auto at = [&](double x) { return forward(net, std::vector<double>{x, 0.0}); };
    // u(2,0) equals the input on the identity network.
    NeuronConstraint c = nbc_constraint(at(0.9), {2, 0}, 1.0, -1.0);
    CHECK(c.sense == Sense::GreaterEq);
    CHECK(c.rhs == doctest::Approx(1.0 + 1e-6));
    c = nbc_constraint(at(0.5), {2, 0}, 1.0, 0.0);
    CHECK(c.sense == Sense::LessEq);
    CHECK(c.rhs == doctest::Approx(-1e-6));
    c = nbc_constraint(at(0.2), {2, 0}, 1.0, 0.1);
    CHECK(c.sense == Sense::LessEq);
}

TEST_CASE("synthesized inputs reproduce their target patterns")
{
    Rng rng(45);
    std::size_t optimal = 0;
    std::size_t attempts = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Network net = fixtures::random_mlp(rng, {4, 6, 5, 3});
        const Vector t = fixtures::random_input(rng, 4);
        const Activations acts = forward(net, t);
        const ActivationPattern src = pattern_of(acts);
        std::vector<Requirement> reqs = gen_nc(net);
        const auto ssc = gen_ssc(net);
        reqs.push_back(ssc[fixtures::pick(rng, ssc.size())]);
        std::vector<Vector> samples{t};
        for (int i = 0; i < 20; ++i) {
            samples.push_back(fixtures::random_input(rng, 4));
        }
        const auto nbc = gen_nbc(net, bounds_from_samples(net, samples));
        reqs.push_back(nbc[fixtures::pick(rng, nbc.size())]);
        reqs.push_back(nbc[fixtures::pick(rng, nbc.size())]);

        for (const Requirement& r : reqs) {
            ++attempts;
            const SynthesisResult res = symbolic_lp(net, acts, r);
            if (res.status != LpStatus::Optimal) {
                CHECK(res.status == LpStatus::Infeasible);
                CHECK_FALSE(res.input.has_value());
                continue;
            }
            ++optimal;
            REQUIRE(res.input.has_value());
            const Activations got = forward(net, *res.input);
            const ActivationPattern p = pattern_of(got);
            CHECK(std::abs(linf_distance(*res.input, t) - res.distance) <= kLpTolerance);

            TargetPattern target;
            if (r.tag.family == Family::NC) {
                target = nc_target_pattern(src, r.tag.neuron);
            } else if (r.tag.family == Family::SSC) {
                target = ssc_target_pattern(src, r.tag.neuron, r.tag.decision);
            } else {
                target = {src, 3};
            }
            for (int k : net.relu_layers()) {
                for (std::size_t l = 0; l < net.size(k); ++l) {
                    const NeuronId n{k, static_cast<int>(l)};
                    if (r.tag.family == Family::NBCHigh || r.tag.family == Family::NBCLow) {
                        if (n == r.tag.neuron) {
                            continue;
                        }
                    }
                    if (const auto bit = target.pattern.bit(n)) {
                        CAPTURE(to_string(n));
                        CHECK(p.bit(n) == bit);
                        CHECK(std::abs(got.pre(n)) >= 0.5e-6 - kLpTolerance);
                    }
                }
            }
            if (r.arity == 2) {
                CHECK(eval_bool(r.body, Binding{}.bind(InputVar::X1, acts).bind(InputVar::X2, got)));
            } else if (r.tag.family != Family::NC || !*src.bit(r.tag.neuron)) {
                CHECK(eval_bool(r.body, Binding{}.bind(InputVar::X, got)));
            }
        }
    }
    MESSAGE(optimal << " of " << attempts << " syntheses optimal");
    CHECK(optimal >= 100);
}

TEST_CASE("a dead neuron cannot be activated")
{
    const fixtures::PlantedNet planted = fixtures::planted_net();
    Rng rng(46);
    const Activations acts = forward(planted.net, fixtures::random_input(rng, 4));
    for (const Requirement& r : gen_nc(planted.net)) {
        if (r.tag.neuron == planted.dead[0]) {
            const SynthesisResult res = symbolic_lp(planted.net, acts, r);
            CHECK(res.status == LpStatus::Infeasible);
            CHECK_FALSE(res.input.has_value());
        }
    }
    Requirement lip;
    lip.tag.family = Family::LIP;
    CHECK_THROWS_AS(symbolic_lp(planted.net, acts, lip), ConfigError);
}

TEST_CASE("synthesis through convolution and max pooling")
{
    Rng rng(47);
    Conv2DLayer conv;
    conv.kernel_h = conv.kernel_w = 3;
    conv.in_channels = 1;
    conv.out_channels = 2;
    conv.pad_h = conv.pad_w = 1;
    conv.relu = true;
    for (int i = 0; i < 18; ++i) {
        conv.kernels.push_back(fixtures::uniform(rng, -1.0, 1.0));
    }
    conv.bias = {0.1, -0.1};
    const Network net({4, 4, 1}, {conv, MaxPoolLayer{2, 2}, FlattenLayer{}, fixtures::random_dense(rng, 8, 4, true),
                                  fixtures::random_dense(rng, 4, 2, false)});
    int optimal = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Vector t = fixtures::random_input(rng, 16);
        const Activations acts = forward(net, t);
        const ActivationPattern src = pattern_of(acts);
        for (const Requirement& r : gen_nc(net)) {
            if (r.tag.neuron.layer != 5) {
                continue;
            }
            const SynthesisResult res = symbolic_lp(net, acts, r);
            if (res.status != LpStatus::Optimal) {
                continue;
            }
            ++optimal;
            const Activations got = forward(net, *res.input);
            CHECK(pattern_of(got).bit(r.tag.neuron) == !*src.bit(r.tag.neuron));
            for (std::size_t l = 0; l < net.size(2); ++l) {
                CHECK(pattern_of(got).bit({2, static_cast<int>(l)}) == src.bit({2, static_cast<int>(l)}));
            }
        }
    }
    CHECK(optimal > 0);
}
