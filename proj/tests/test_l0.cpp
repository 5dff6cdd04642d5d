#include "concolic/error.hpp"
#include "concolic/l0_search.hpp"
#include "fixtures.hpp"

#include <doctest.h>

using namespace concolic;

namespace {

/// Five inputs; hidden neuron (2,0) reads only pixel 3: u = x3 - 0.5.
Network pixel_three_net()
{
    Vector w(5 * 2, 0.0);
    w[3 * 2 + 0] = 1.0;
    w[0 * 2 + 1] = 1.0;
    return Network({5}, {fixtures::dense(5, 2, w, {-0.5, 0.0}, true), fixtures::dense(2, 2, {1, 0, 0, 1}, {0, 0}, false)});
}

Requirement nc_for(const Network& net, NeuronId n)
{
    for (Requirement& r : gen_nc(net)) {
        if (r.tag.neuron == n) {
            return r;
        }
    }
    FAIL("no NC requirement for " << to_string(n));
    return {};
}

}  // namespace

TEST_CASE("one pixel is enough")
{
    const Network net = pixel_three_net();
    const Vector t{0.2, 0.4, 0.6, 0.2, 0.9};
    const L0Result res = l0_search(net, forward(net, t), nc_for(net, {2, 0}));
    REQUIRE(res.satisfied);
    REQUIRE(res.input);
    CHECK(res.changed == 1);
    CHECK(l0_distance(*res.input, t) == 1);
    CHECK((*res.input)[3] == 1.0);
    CHECK(forward(net, *res.input).pre({2, 0}) >= 0.0);
}

TEST_CASE("an already satisfied requirement changes nothing")
{
    const Network net = pixel_three_net();
    const Vector t{0.2, 0.4, 0.6, 0.8, 0.9};
    const L0Result res = l0_search(net, forward(net, t), nc_for(net, {2, 0}));
    REQUIRE(res.input);
    CHECK(*res.input == t);
    CHECK(res.changed == 0);
    CHECK(res.evaluations == 0);
}

TEST_CASE("a dead neuron exhausts the search")
{
    const fixtures::PlantedNet planted = fixtures::planted_net();
    Rng rng(61);
    for (std::size_t budget : {1u, 2u, 100u}) {
        const Vector t = fixtures::random_input(rng, 4);
        L0Options opts;
        opts.budget = budget;
        const L0Result res = l0_search(planted.net, forward(planted.net, t), nc_for(planted.net, planted.dead[0]), opts);
        CHECK_FALSE(res.satisfied);
        CHECK_FALSE(res.input.has_value());
        CHECK(res.changed <= budget);
    }
}

TEST_CASE("SSC and Lipschitz are rejected")
{
    const Network net = pixel_three_net();
    const Activations a = forward(net, Vector(5, 0.5));
    Requirement r;
    r.tag.family = Family::SSC;
    CHECK_THROWS_AS(l0_search(net, a, r), ConfigError);
    r.tag.family = Family::LIP;
    CHECK_THROWS_AS(l0_search(net, a, r), ConfigError);
}

TEST_CASE("greedy search finds a single pixel whenever one exists")
{
    Rng rng(62);
    int one_pixel_cases = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + fixtures::pick(rng, 5);
        const Network net = fixtures::random_mlp(rng, {n, 4, 3, 2});
        const Vector t = fixtures::grid_input(rng, n, 4);
        const Activations acts = forward(net, t);
        std::vector<Requirement> reqs = gen_nc(net);
        for (Requirement& r : gen_nbc(net, bounds_from_samples(net, std::vector<Vector>{t, fixtures::random_input(rng, n)}, 0.0))) {
            reqs.push_back(std::move(r));
        }
        const Requirement& r = reqs[fixtures::pick(rng, reqs.size())];
        if (eval_bool(r.body, Binding{}.bind(InputVar::X, acts))) {
            continue;
        }
        // Exhaustive oracle over every single-pixel change to 0 or 1.
        bool one = false;
        for (std::size_t i = 0; i < n && !one; ++i) {
            for (double v : {0.0, 1.0}) {
                Vector x = t;
                x[i] = v;
                one = one || eval_bool(r.body, {{InputVar::X, x}}, net);
            }
        }
        const L0Result res = l0_search(net, acts, r);
        if (res.input) {
            CHECK(res.satisfied);
            CHECK(l0_distance(*res.input, t) <= res.changed);
            CHECK(eval_bool(r.body, {{InputVar::X, *res.input}}, net));
        }
        CHECK(res.changed <= n);
        if (one) {
            ++one_pixel_cases;
            CHECK(res.satisfied);
            CHECK(res.changed == 1);
        }
        CHECK(res.objective >= l0_objective(acts, r));
    }
    CHECK(one_pixel_cases > 20);
}
