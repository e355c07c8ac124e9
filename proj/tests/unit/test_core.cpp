#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "rdx/core.hpp"
#include "rdx/errors.hpp"
#include "rdx/format.hpp"
#include "rdx/parallel.hpp"
#include "rdx/rng.hpp"

using namespace rdx;

namespace {

using Groups = std::vector<std::vector<std::size_t>>;

std::vector<double> v(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("datum rejects empty and non-finite values") {
    CHECK_THROWS_AS(Datum(std::vector<double>{}), InputError);
    CHECK_THROWS_AS(Datum({1.0, std::numeric_limits<double>::quiet_NaN()}), InputError);
    CHECK_THROWS_AS(Datum({std::numeric_limits<double>::infinity()}), InputError);
    const Datum d({1.0, -2.5});
    CHECK(d.dim() == 2);
    CHECK(d[1] == -2.5);
}

TEST_CASE("grouping invariants") {
    CHECK_THROWS_AS(ComponentGrouping({{0, 1}, {1, 2}}), ConfigError);
    CHECK_THROWS_AS(ComponentGrouping({{0}, {}}), ConfigError);
    CHECK_THROWS_AS(ComponentGrouping({{0, 0}}), ConfigError);
    const ComponentGrouping g({{0, 2}, {1}});
    CHECK(g.size() == 2);
    CHECK(g.index_bound() == 3);
    CHECK_NOTHROW(g.check_dim(3));
    CHECK_THROWS_AS(g.check_dim(2), ConfigError);
    const auto t = ComponentGrouping::trivial(4);
    REQUIRE(t.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.group(i) == std::vector<std::size_t>{i});
}

TEST_CASE("mask weights must lie in [0,1]") {
    CHECK_THROWS_AS(Mask({0.5, 1.5}), InputError);
    CHECK_THROWS_AS(Mask({-0.1}), InputError);
    CHECK_THROWS_AS(Mask({std::numeric_limits<double>::quiet_NaN()}), InputError);
    CHECK_NOTHROW(Mask({0.0, 1.0}));
    CHECK(v(Mask::filled(3, 0.25).weights()) == std::vector<double>{0.25, 0.25, 0.25});
}

TEST_CASE("bernoulli params clamp theta and need positive temperature") {
    BernoulliParams p(3, 0.0, 0.1);
    for (double t : p.theta) CHECK(t == BernoulliParams::kThetaEps);
    p.theta = {-1.0, 0.5, 2.0};
    p.clamp();
    CHECK(p.theta[0] == 1e-6);
    CHECK(p.theta[1] == 0.5);
    CHECK(p.theta[2] == 1.0 - 1e-6);
    CHECK_THROWS_AS(BernoulliParams(2, 0.5, 0.0), InputError);
}

TEST_CASE("expand_mask examples") {
    CHECK(expand_mask(Mask({1.0}), ComponentGrouping({{0, 1, 2}}), 3) == std::vector<double>{1, 1, 1});
    CHECK(expand_mask(Mask({0.5, 1.0}), ComponentGrouping({{0, 2}, {1}}), 3) == std::vector<double>{0.5, 1.0, 0.5});
    CHECK(expand_mask(Mask({0.0}), ComponentGrouping(Groups{{1}}), 3) == std::vector<double>{1, 0, 1});
}

TEST_CASE("expand_mask errors") {
    CHECK_THROWS_AS(expand_mask(Mask({0.0}), ComponentGrouping(Groups{{5}}), 3), ConfigError);
    CHECK_THROWS_AS(expand_mask(Mask({0.0, 1.0}), ComponentGrouping(Groups{{0}}), 3), InputError);
}

TEST_CASE("expand_mask is the identity under the trivial grouping") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> w(1 + trial % 9);
        for (double& x : w) x = u(gen);
        CHECK(expand_mask(Mask(w), ComponentGrouping::trivial(w.size()), w.size()) == w);
    }
}

TEST_CASE("binarize examples") {
    CHECK(v(binarize(Mask({0.9, 0.1}), 0.5).weights()) == std::vector<double>{1, 0});
    CHECK(v(binarize(Mask({0.5}), 0.5).weights()) == std::vector<double>{1});
    CHECK(v(binarize(Mask({1.0, 0.0, 0.7}), 0.5).weights()) == std::vector<double>{1, 0, 1});
    CHECK_THROWS_AS(binarize(Mask({0.5}), 0.0), InputError);
    CHECK_THROWS_AS(binarize(Mask({0.5}), 1.0), InputError);
}

TEST_CASE("sparsity examples") {
    auto s = sparsity(Mask({0, 0, 0}));
    CHECK(s.l1 == 0.0);
    CHECK(s.l0 == 0);
    s = sparsity(Mask({1, 1}));
    CHECK(s.l1 == 2.0);
    CHECK(s.l0 == 2);
    s = sparsity(Mask({0.25, 0.75, 0}));
    CHECK(s.l1 == 1.0);
    CHECK(s.l0 == 2);
}

TEST_CASE("binarize is idempotent and l0 equals l1 for binary masks") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(1 + trial % 13);
        for (double& x : w) x = u(gen);
        const double t = 0.05 + 0.9 * u(gen);
        const auto b = binarize(Mask(w), t);
        CHECK(binarize(b, t) == b);
        const auto s = sparsity(b);
        CHECK(static_cast<double>(s.l0) == s.l1);
    }
}

TEST_CASE("explanation json round trip") {
    Explanation e;
    e.final_mask = Mask({0.125, 1.0});
    e.distortion_curve = {{0.0, 2.5}, {1.0, 0.1}};
    e.config_echo = {{"a", 1}};
    auto doc = to_json(e);
    CHECK(doc["order"].is_null());
    CHECK(doc["curve"][1][1].get<double>() == 0.1);
    auto back = explanation_from_json(doc);
    CHECK(back.final_mask == e.final_mask);
    CHECK(back.distortion_curve == e.distortion_curve);
    CHECK_FALSE(back.selected_order.has_value());

    e.selected_order = std::vector<std::size_t>{1, 0};
    back = explanation_from_json(nlohmann::json::parse(to_json(e).dump()));
    REQUIRE(back.selected_order.has_value());
    CHECK(*back.selected_order == std::vector<std::size_t>{1, 0});
    CHECK(back.config_echo == e.config_echo);
}

TEST_CASE("mask csv") {
    CHECK(mask_to_csv(Mask({0.5, 1.0, 0.1})) == "weight\n0.5\n1\n0.1\n");
}

TEST_CASE("number formatting round trips") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(gen) * std::pow(10.0, i % 20 - 10);
        CHECK(parse_double(format_double(x)).value() == x);
    }
    CHECK(parse_double("+1.5").value() == 1.5);
    CHECK_FALSE(parse_double("1.5x").has_value());
    CHECK_FALSE(parse_double("").has_value());
    CHECK(split_ws("  a \t b\n").size() == 2);
    CHECK(trim("  q  ") == "q");
}

TEST_CASE("derived seeds give distinct, reproducible streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s) {
        for (std::uint64_t k = 0; k < 100; ++k) seen.insert(derive_seed(s, k));
    }
    CHECK(seen.size() == 10000);
    auto a = make_rng(5, 2);
    auto b = make_rng(5, 2);
    for (int i = 0; i < 10; ++i) CHECK(a() == b());
    auto r = make_rng(1);
    for (int i = 0; i < 10000; ++i) {
        const double x = uniform_open01(r);
        CHECK((x > 0.0 && x < 1.0));
    }
}

TEST_CASE("parallel_for visits every index once for any thread count") {
    for (std::size_t threads : {1u, 2u, 4u}) {
        set_thread_count(threads);
        CHECK(thread_count() == threads);
        std::vector<int> hits(1000, 0);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
}
