#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "rdx/errors.hpp"
#include "rdx/radiomap.hpp"
#include "rdx/rng.hpp"

using namespace rdx;
using namespace rdx::radio;

namespace {

std::vector<int> ids_of(const CityMap& c) {
    std::vector<int> ids;
    for (const auto& b : c.buildings()) ids.push_back(b.id);
    return ids;
}

// Region mean of the black box on an encoded input, computed by hand.
double region_mean(const RadioModel& model, const RadioScene& scene, std::span<const double> z) {
    const auto out = model.forward(z);
    double sum = 0.0;
    int n = 0;
    for (int y = scene.region.y0; y < scene.region.y1; ++y) {
        for (int x = scene.region.x0; x < scene.region.x1; ++x) {
            sum += out[static_cast<std::size_t>(y * scene.city.width() + x)];
            ++n;
        }
    }
    return sum / n;
}

// Independent reconstruction of the completion: one uniform per measurement
// from draw k of the seed, infill from the simulator on the selected buildings.
oracle::DrawInfillFn radio_completion(const RadioScene& scene, double p, std::uint64_t seed) {
    const auto ids = ids_of(scene.noisy_city);
    const std::size_t nb = ids.size();
    return [&scene, ids, nb, p, seed](const std::vector<bool>& sel, std::size_t draw) {
        std::vector<int> kept;
        for (std::size_t b = 0; b < nb; ++b) {
            if (sel[b]) kept.push_back(ids[b]);
        }
        const auto sim = simulate_radio(scene.noisy_city.keep(kept), scene.tx);
        Rng rng = make_rng(seed, draw);
        std::vector<double> g(nb + scene.measurements.size(), 0.0);
        for (std::size_t m = 0; m < scene.measurements.size(); ++m) {
            const double u = uniform_open01(rng);
            if (u < p) g[nb + m] = sim.at(scene.measurements[m].cell);
        }
        return g;
    };
}

std::vector<std::vector<std::size_t>> singletons(std::size_t n) {
    std::vector<std::vector<std::size_t>> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = {i};
    return g;
}

}  // namespace

TEST_CASE("city map validation") {
    CHECK_THROWS_AS(CityMap(32, 32, {{0, {30, 30, 33, 31}}}), InputError);
    CHECK_THROWS_AS(CityMap(32, 32, {{0, {3, 3, 3, 5}}}), InputError);
    CHECK_THROWS_AS(CityMap(32, 32, {{0, {1, 1, 4, 4}}, {1, {3, 3, 6, 6}}}), InputError);
    CHECK_THROWS_AS(CityMap(32, 32, {{0, {1, 1, 4, 4}}, {0, {8, 8, 9, 9}}}), InputError);
    const CityMap c(8, 10, {{4, {1, 2, 3, 5}}});
    CHECK(c.occupied({1, 2}));
    CHECK(c.occupied({2, 4}));
    CHECK_FALSE(c.occupied({3, 4}));
    CHECK_FALSE(c.occupied({2, 5}));
    CHECK(std::count(c.grid().begin(), c.grid().end(), 1) == 6);
}

TEST_CASE("generate_city") {
    CityParams none;
    none.n_buildings = 0;
    const auto empty = generate_city(3, none);
    CHECK(empty.buildings().empty());
    CHECK(std::all_of(empty.grid().begin(), empty.grid().end(), [](auto v) { return v == 0; }));

    // golden hash pinned from the first correct run
    CHECK(grid_hash(generate_city(1, CityParams{})) == 0x7f8e83ad6e628e05ULL);
    CHECK(generate_city(9, CityParams{}) == generate_city(9, CityParams{}));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto city = generate_city(seed, CityParams{});
        REQUIRE(city.buildings().size() == 6);
        std::vector<int> raster(32 * 32, 0);
        for (const auto& b : city.buildings()) {
            const auto& r = b.rect;
            CHECK((r.x0 >= 0 && r.y0 >= 0 && r.x1 <= 32 && r.y1 <= 32));
            CHECK((r.x1 - r.x0 >= 3 && r.x1 - r.x0 <= 7 && r.y1 - r.y0 >= 3 && r.y1 - r.y0 <= 7));
            for (int y = r.y0; y < r.y1; ++y) {
                for (int x = r.x0; x < r.x1; ++x) raster[static_cast<std::size_t>(y * 32 + x)] += 1;
            }
        }
        for (std::size_t i = 0; i < raster.size(); ++i) {
            CHECK(raster[i] <= 1);
            CHECK(raster[i] == city.grid()[i]);
        }
    }

    CityParams crowded;
    crowded.n_buildings = 60;
    CHECK_THROWS_AS(generate_city(1, crowded), GenerationError);
}

TEST_CASE("free space and line of sight") {
    const CityMap empty(32, 32, {});
    const Cell tx{5, 9};
    const auto map = simulate_radio(empty, tx);
    std::vector<std::pair<double, double>> by_distance;
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            const double d = std::hypot(x - tx.x, y - tx.y);
            by_distance.emplace_back(d, map.at({x, y}));
            CHECK(map.at({x, y}) == free_space_strength(d));
        }
    }
    std::sort(by_distance.begin(), by_distance.end());
    for (std::size_t i = 1; i < by_distance.size(); ++i) {
        if (by_distance[i].first > by_distance[i - 1].first) {
            CHECK(by_distance[i].second < by_distance[i - 1].second);
        } else {
            CHECK(by_distance[i].second == by_distance[i - 1].second);
        }
    }
    CHECK(free_space_strength(0.0) == 1.0);
    CHECK(free_space_strength(64.0) == doctest::Approx(0.2).epsilon(1e-12));

    const auto scene = shadow_fixture();
    const auto gt = simulate_radio(scene.city, scene.tx);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            const Cell c{x, y};
            if (scene.city.occupied(c)) {
                CHECK(gt.at(c) == 0.0);
            } else if (line_of_sight(scene, c)) {
                CHECK(gt.at(c) == free_space_strength(std::hypot(x - scene.tx.x, y - scene.tx.y)));
            }
        }
    }
    CHECK_THROWS_AS(simulate_radio(scene.city, {6, 3}), InputError);
}

TEST_CASE("edge crossings agree with dense sampling") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto city = generate_city(seed, CityParams{});
        std::vector<oracle::Box> boxes;
        for (const auto& b : city.buildings()) boxes.push_back({b.rect.x0, b.rect.y0, b.rect.x1, b.rect.y1});
        Rng rng = make_rng(31, seed);
        for (int t = 0; t < 40; ++t) {
            const Cell a{static_cast<int>(rng() % 32), static_cast<int>(rng() % 32)};
            const Cell b{static_cast<int>(rng() % 32), static_cast<int>(rng() % 32)};
            const int hits = oracle::boxes_hit_by_sampling(a.x + 0.5, a.y + 0.5, b.x + 0.5, b.y + 0.5, boxes);
            CHECK(edges_crossed(city, a, b) == 2 * hits);
        }
    }
}

TEST_CASE("removing buildings never darkens a cell") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto city = generate_city(seed, CityParams{});
        const auto ids = ids_of(city);
        Cell tx{0, 0};
        for (int y = 0; y < 32 && city.occupied(tx); ++y) tx = {(y * 7) % 32, y};
        REQUIRE_FALSE(city.occupied(tx));
        const unsigned n = static_cast<unsigned>(ids.size());
        std::vector<RadioMap> maps(1u << n);
        for (unsigned bits = 0; bits < (1u << n); ++bits) {
            std::vector<int> kept;
            for (unsigned i = 0; i < n; ++i) {
                if (bits >> i & 1u) kept.push_back(ids[i]);
            }
            maps[bits] = simulate_radio(city.keep(kept), tx);
            for (double v : maps[bits].strength) CHECK((v >= 0.0 && v <= 1.0));
        }
        // covering pairs suffice: C' = C minus one building
        for (unsigned bits = 0; bits < (1u << n); ++bits) {
            for (unsigned i = 0; i < n; ++i) {
                if (!(bits >> i & 1u)) continue;
                const auto& more = maps[bits];
                const auto& fewer = maps[bits & ~(1u << i)];
                for (std::size_t c = 0; c < more.strength.size(); ++c) CHECK(fewer.strength[c] >= more.strength[c]);
            }
        }
    }
}

TEST_CASE("sample_measurements") {
    const auto city = generate_city(4, CityParams{});
    Cell tx{0, 0};
    while (city.occupied(tx)) tx.x += 1;
    const auto gt = simulate_radio(city, tx);
    CHECK(sample_measurements(gt, city, 0, 1).empty());
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto ms = sample_measurements(gt, city, 20, seed);
        REQUIRE(ms.size() == 20);
        for (const auto& m : ms) {
            CHECK_FALSE(city.occupied(m.cell));
            CHECK(m.strength == gt.at(m.cell));
        }
    }
    CHECK(sample_measurements(gt, city, 15, 8) == sample_measurements(gt, city, 15, 8));
}

TEST_CASE("measurements are uniform over free cells") {
    CityParams p;
    p.height = 64;
    p.width = 64;
    p.n_buildings = 10;
    const auto city = generate_city(12, p);
    Cell tx{0, 0};
    while (city.occupied(tx)) tx.x += 1;
    const auto gt = simulate_radio(city, tx);
    const std::size_t n = 10000;
    const auto ms = sample_measurements(gt, city, n, 99);
    std::vector<int> counts(64 * 64, 0);
    for (const auto& m : ms) counts[static_cast<std::size_t>(m.cell.y * 64 + m.cell.x)] += 1;
    std::size_t free = 0;
    for (auto v : city.grid()) free += v == 0;
    const double expected = static_cast<double>(n) / static_cast<double>(free);
    double chi2 = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (city.grid()[i]) continue;
        chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
    }
    // Wilson-Hilferty upper 1% quantile of chi-square with free - 1 dof
    const double k = static_cast<double>(free - 1);
    const double z = 2.3263478740408408;
    const double q = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3.0);
    CHECK(chi2 < q);
}

TEST_CASE("scene invariants") {
    const auto scene = shadow_fixture();
    CHECK_NOTHROW(scene.validate());
    CHECK(scene.removed_ids == std::vector<int>{2});
    CHECK_FALSE(scene.noisy_city.has_building(2));
    CHECK(scene.noisy_city.buildings().size() == 4);
    CHECK(scene.measurements.size() == 19);

    auto broken = scene;
    broken.tx = {6, 3};
    CHECK_THROWS_AS(broken.validate(), InputError);
    broken = scene;
    broken.region = {30, 30, 34, 31};
    CHECK_THROWS_AS(broken.validate(), InputError);
    broken = scene;
    broken.measurements[0].strength = 1.5;
    CHECK_THROWS_AS(broken.validate(), InputError);
    CHECK_THROWS_AS(make_scene(scene.city, scene.tx, {9}, {}, scene.region), InputError);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = generate_scene(seed, SceneParams{});
        CHECK_NOTHROW(s.validate());
        CHECK(s.measurements.size() == 24);
        REQUIRE(s.removed_ids.size() == 1);
        for (const auto& b : s.city.buildings()) {
            if (b.id == s.removed_ids[0]) CHECK(b.rect == s.region);
        }
    }
}

TEST_CASE("phi_model examples") {
    const auto scene = shadow_fixture();
    const auto base = simulate_radio(scene.noisy_city, scene.tx);
    CHECK(phi_model(ModelInput{scene.noisy_city, {}}, scene.tx) == base);

    const Cell c{20, 25};
    CHECK(phi_model(ModelInput{scene.noisy_city, {{c, base.at(c)}}}, scene.tx) == base);

    // dense shadow measurements darken the missing building's shadow
    const auto phi = phi_model(scene);
    double phi_sum = 0.0, base_sum = 0.0;
    int n = 0;
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) {
            const Cell p{x, y};
            if (scene.city.occupied(p) || !in_shadow_of(scene, 2, p)) continue;
            phi_sum += phi.at(p);
            base_sum += base.at(p);
            ++n;
        }
    }
    REQUIRE(n > 20);
    CHECK(phi_sum / n < base_sum / n);
    CHECK(phi_model(scene) == phi);
    for (double v : phi.strength) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("complete_input examples") {
    const auto scene = shadow_fixture();
    const auto all_ids = ids_of(scene.noisy_city);

    const auto zero_fill = complete_input(scene, {}, CompletionPolicy{0.0}, 5);
    CHECK(zero_fill.city.buildings().empty());
    CHECK(zero_fill.measurements.empty());

    const auto full_city = complete_input(scene, {all_ids, {}}, CompletionPolicy{1.0}, 5);
    const auto sim = simulate_radio(scene.noisy_city, scene.tx);
    REQUIRE(full_city.measurements.size() == scene.measurements.size());
    for (std::size_t m = 0; m < scene.measurements.size(); ++m) {
        CHECK(full_city.measurements[m].cell == scene.measurements[m].cell);
        CHECK(full_city.measurements[m].strength == sim.at(scene.measurements[m].cell));
    }

    const auto few = complete_input(scene, {}, CompletionPolicy{1.0}, 5);
    double infilled = 0.0, truth = 0.0;
    for (std::size_t m = 0; m < scene.measurements.size(); ++m) {
        infilled += few.measurements[m].strength;
        truth += scene.measurements[m].strength;
    }
    CHECK(infilled >= truth);

    std::vector<std::size_t> every(scene.measurements.size());
    for (std::size_t m = 0; m < every.size(); ++m) every[m] = m;
    const auto identity = complete_input(scene, {all_ids, every}, CompletionPolicy{0.0}, 5);
    CHECK(identity.city == scene.noisy_city);
    CHECK(identity.measurements == scene.measurements);

    CHECK_THROWS_AS(complete_input(scene, {{2}, {}}, CompletionPolicy{1.0}, 5), InputError);
    CHECK_THROWS_AS(complete_input(scene, {{}, {19}}, CompletionPolicy{1.0}, 5), InputError);
    CHECK_THROWS_AS(complete_input(scene, {}, CompletionPolicy{1.5}, 5), InputError);
}

TEST_CASE("partial inpainting reproduces an independent reconstruction") {
    const auto scene = shadow_fixture();
    const Selection sel{{0, 3}, {1, 7}};
    const double p = 0.3;
    const auto oracle_fill = radio_completion(scene, p, 77);
    const auto ids = ids_of(scene.noisy_city);
    std::vector<bool> groups(ids.size() + scene.measurements.size(), false);
    groups[0] = true;  // building 0
    groups[2] = true;  // building 3
    groups[ids.size() + 1] = true;
    groups[ids.size() + 7] = true;
    std::size_t inpainted = 0, candidates = 0;
    for (std::uint64_t draw = 0; draw < 200; ++draw) {
        const auto got = complete_input(scene, sel, CompletionPolicy{p}, 77, draw);
        CHECK(got.city == scene.noisy_city.keep(std::vector<int>{0, 3}));
        const auto g = oracle_fill(groups, draw);
        std::vector<Measurement> expect;
        for (std::size_t m = 0; m < scene.measurements.size(); ++m) {
            if (groups[ids.size() + m]) {
                expect.push_back(scene.measurements[m]);
            } else {
                ++candidates;
                if (g[ids.size() + m] > 0.0) {
                    expect.push_back({scene.measurements[m].cell, g[ids.size() + m]});
                    ++inpainted;
                }
            }
        }
        CHECK(got.measurements == expect);
    }
    CHECK(std::abs(static_cast<double>(inpainted) / static_cast<double>(candidates) - p) < 0.03);
}

TEST_CASE("explain_region on the shadow fixture") {
    const auto scene = shadow_fixture();
    const std::size_t nb = scene.noisy_city.buildings().size();
    const RadioModel model(scene);
    const auto x = model.encoding().encode();
    const auto xv = std::vector<double>(x.values().begin(), x.values().end());
    const auto phi = [&](std::span<const double> z) { return region_mean(model, scene, z); };
    auto is_shadow = [&](std::size_t g) { return g >= nb && in_shadow_of(scene, 2, scene.measurements[g - nb].cell); };
    auto is_los = [&](std::size_t g) { return g >= nb && line_of_sight(scene, scene.measurements[g - nb].cell); };

    OptimConfig cfg;
    cfg.rng_seed = 3;
    cfg.n_samples = 64;

    SUBCASE("model-based completion picks shadow measurements") {
        const auto e = explain_region(scene, CompletionPolicy{1.0}, 5, cfg);
        const auto& order = *e.selected_order;
        REQUIRE(order.size() == 5);
        CHECK(std::any_of(order.begin(), order.end(), is_shadow));
        const auto ref = oracle::brute_force_greedy_mc(phi, xv, singletons(xv.size()),
                                                       radio_completion(scene, 1.0, cfg.rng_seed), 5, 1);
        CHECK(order == ref.order);
        for (std::size_t k = 0; k < ref.curve.size(); ++k) {
            CHECK(e.distortion_curve[k].distortion == doctest::Approx(ref.curve[k]).epsilon(1e-12));
        }
        for (std::size_t k = 1; k < e.distortion_curve.size(); ++k) {
            CHECK(e.distortion_curve[k].distortion <= e.distortion_curve[k - 1].distortion);
        }
        CHECK(e.config_echo["radio"]["p_inpaint"] == 1.0);
        CHECK(e.config_echo["radio"]["region_aggregation"] == "mean");
    }

    SUBCASE("sparse inpainting adds a line-of-sight measurement") {
        const auto e = explain_region(scene, CompletionPolicy{0.025}, 5, cfg);
        const auto& order = *e.selected_order;
        CHECK(std::any_of(order.begin(), order.end(), is_shadow));
        CHECK(std::any_of(order.begin(), order.end(), is_los));
        const auto ref = oracle::brute_force_greedy_mc(phi, xv, singletons(xv.size()),
                                                       radio_completion(scene, 0.025, cfg.rng_seed), 5, cfg.n_samples);
        CHECK(order == ref.order);
        for (std::size_t k = 0; k < ref.curve.size(); ++k) {
            CHECK(e.distortion_curve[k].distortion == doctest::Approx(ref.curve[k]).epsilon(1e-12));
        }
    }

    SUBCASE("zero-fill curve is non-increasing") {
        const auto e = explain_region(scene, CompletionPolicy{0.0}, 8, cfg);
        for (std::size_t k = 1; k < e.distortion_curve.size(); ++k) {
            CHECK(e.distortion_curve[k].distortion <= e.distortion_curve[k - 1].distortion);
        }
    }

    CHECK_THROWS_AS(explain_region(scene, CompletionPolicy{1.0}, xv.size() + 1, cfg), InputError);
}

TEST_CASE("a free-space region gives a flat curve") {
    // region next to the tx, every building and measurement far away and behind it
    const CityMap city(32, 32, {{0, {20, 20, 24, 24}}, {1, {26, 2, 29, 5}}});
    const Cell tx{2, 2};
    const auto gt = simulate_radio(city, tx);
    std::vector<Measurement> ms;
    for (Cell c : {Cell{28, 28}, Cell{15, 29}, Cell{29, 14}, Cell{18, 10}}) ms.push_back({c, gt.at(c)});
    const auto scene = make_scene(city, tx, {1}, ms, Rect{0, 0, 6, 5});
    OptimConfig cfg;
    cfg.n_samples = 16;
    for (double p : {0.0, 0.025, 1.0}) {
        const auto e = explain_region(scene, CompletionPolicy{p}, 3, cfg);
        for (const auto& pt : e.distortion_curve) CHECK(pt.distortion == 0.0);
    }
}

TEST_CASE("generated scenes keep deterministic curves non-increasing") {
    OptimConfig cfg;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto scene = generate_scene(seed, SceneParams{});
        for (double p : {0.0, 1.0}) {
            const auto e = explain_region(scene, CompletionPolicy{p}, 4, cfg);
            for (std::size_t k = 1; k < e.distortion_curve.size(); ++k) {
                CHECK(e.distortion_curve[k].distortion <= e.distortion_curve[k - 1].distortion);
            }
        }
    }
}

TEST_CASE("pgm, json and svg formats") {
    const CityMap c(2, 3, {{0, {1, 0, 2, 2}}});
    CHECK(city_to_pgm(c) == "P2\n3 2\n255\n0 255 0\n0 255 0\n");

    RadioMap m;
    m.height = 1;
    m.width = 4;
    m.strength = {0.0, 1.0, 0.5 / 255.0, 0.4 / 255.0};
    CHECK(radio_to_pgm(m) == "P2\n4 1\n255\n0 255 1 0\n");

    const auto scene = shadow_fixture();
    const auto doc = scene_to_json(scene);
    const auto back = scene_from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back.city == scene.city);
    CHECK(back.noisy_city == scene.noisy_city);
    CHECK(back.tx == scene.tx);
    CHECK(back.measurements == scene.measurements);
    CHECK(back.region == scene.region);
    CHECK(back.removed_ids == scene.removed_ids);

    auto bad = doc;
    bad.erase("tx");
    CHECK_THROWS_AS(scene_from_json(bad), ConfigError);
    bad = doc;
    bad["region"]["x0"] = "left";
    CHECK_THROWS_AS(scene_from_json(bad), ConfigError);

    const std::vector<std::size_t> selected{0, 4};
    const auto svg = explanation_svg(scene, phi_model(scene), selected);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("fill=\"blue\"") != std::string::npos);
    CHECK(svg.find("fill=\"red\"") != std::string::npos);
    CHECK(svg.find("stroke=\"green\"") != std::string::npos);
    CHECK(svg.find("class=\"building selected\" data-id=\"0\"") != std::string::npos);
    CHECK(svg.find("class=\"measurement selected\" data-index=\"0\"") != std::string::npos);
    CHECK(svg.find("class=\"measurement selected\" data-index=\"1\"") == std::string::npos);
}
