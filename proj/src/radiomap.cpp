#include "rdx/radiomap.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rdx/errors.hpp"
#include "rdx/format.hpp"
#include "rdx/rng.hpp"

namespace rdx::radio {

// ---------------------------------------------------------------- city

CityMap::CityMap(int height, int width, std::vector<Building> buildings)
    : height_(height), width_(width), buildings_(std::move(buildings)) {
    if (height_ <= 0 || width_ <= 0) throw InputError("city grid must be non-empty");
    grid_.assign(static_cast<std::size_t>(height_ * width_), 0);
    std::set<int> ids;
    for (const auto& b : buildings_) {
        const auto& r = b.rect;
        if (r.x0 < 0 || r.y0 < 0 || r.x1 > width_ || r.y1 > height_ || r.x0 >= r.x1 || r.y0 >= r.y1) {
            throw InputError("building " + std::to_string(b.id) + " is empty or outside the grid");
        }
        if (!ids.insert(b.id).second) throw InputError("duplicate building id " + std::to_string(b.id));
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                auto& cell = grid_[static_cast<std::size_t>(y * width_ + x)];
                if (cell) throw InputError("building " + std::to_string(b.id) + " overlaps another building");
                cell = 1;
            }
        }
    }
}

bool CityMap::has_building(int id) const noexcept {
    return std::any_of(buildings_.begin(), buildings_.end(), [id](const Building& b) { return b.id == id; });
}

CityMap CityMap::keep(std::span<const int> ids) const {
    std::vector<Building> kept;
    for (const auto& b : buildings_) {
        if (std::find(ids.begin(), ids.end(), b.id) != ids.end()) kept.push_back(b);
    }
    return CityMap(height_, width_, std::move(kept));
}

CityMap CityMap::without(std::span<const int> ids) const {
    std::vector<Building> kept;
    for (const auto& b : buildings_) {
        if (std::find(ids.begin(), ids.end(), b.id) == ids.end()) kept.push_back(b);
    }
    return CityMap(height_, width_, std::move(kept));
}

CityMap generate_city(std::uint64_t seed, const CityParams& p) {
    if (p.height <= 0 || p.width <= 0 || p.n_buildings < 0 || p.min_size < 1 || p.max_size < p.min_size) {
        throw InputError("invalid city parameters");
    }
    if (p.max_size > std::min(p.height, p.width)) throw InputError("buildings do not fit in the grid");
    Rng rng = make_rng(seed);
    auto uniform_int = [&](int lo, int hi) {  // inclusive
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    std::vector<Building> placed;
    int rejections = 0;
    while (static_cast<int>(placed.size()) < p.n_buildings) {
        const int w = uniform_int(p.min_size, p.max_size);
        const int h = uniform_int(p.min_size, p.max_size);
        const int x0 = uniform_int(0, p.width - w);
        const int y0 = uniform_int(0, p.height - h);
        const Rect r{x0, y0, x0 + w, y0 + h};
        const bool clash = std::any_of(placed.begin(), placed.end(), [&](const Building& b) {
            return r.x0 < b.rect.x1 + 1 && b.rect.x0 < r.x1 + 1 && r.y0 < b.rect.y1 + 1 && b.rect.y0 < r.y1 + 1;
        });
        if (clash) {
            if (++rejections >= 10'000) throw GenerationError("could not place all buildings after 10^4 rejections");
            continue;
        }
        placed.push_back({static_cast<int>(placed.size()), r});
    }
    return CityMap(p.height, p.width, std::move(placed));
}

std::uint64_t grid_hash(const CityMap& city) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::uint64_t byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (int shift = 0; shift < 32; shift += 8) {
        mix(static_cast<std::uint64_t>(city.height() >> shift) & 0xff);
        mix(static_cast<std::uint64_t>(city.width() >> shift) & 0xff);
    }
    for (auto v : city.grid()) mix(v);
    return h;
}

// ---------------------------------------------------------------- propagation

double free_space_strength(double distance, const PropagationParams& params) {
    return std::clamp(1.0 - params.alpha * std::log1p(distance), 0.0, 1.0);
}

namespace {

// Liang-Barsky clip of the segment (ax,ay)->(bx,by) against a closed
// rectangle; true if the overlap has positive length.
bool segment_crosses(double ax, double ay, double bx, double by, const Rect& r) {
    const double dx = bx - ax;
    const double dy = by - ay;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {ax - r.x0, r.x1 - ax, ay - r.y0, r.y1 - ay};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) return false;
            continue;
        }
        const double t = q[k] / p[k];
        if (p[k] < 0.0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
        if (t0 > t1) return false;
    }
    return t1 - t0 > 1e-12;
}

}  // namespace

int edges_crossed(const CityMap& city, Cell from, Cell to) {
    const double ax = from.x + 0.5, ay = from.y + 0.5, bx = to.x + 0.5, by = to.y + 0.5;
    int edges = 0;
    for (const auto& b : city.buildings()) {
        if (segment_crosses(ax, ay, bx, by, b.rect)) edges += 2;  // entry and exit
    }
    return edges;
}

RadioMap simulate_radio(const CityMap& city, Cell tx, const PropagationParams& params) {
    if (!city.in_bounds(tx)) throw InputError("tx outside the grid");
    if (city.occupied(tx)) throw InputError("tx inside a building");
    RadioMap map{city.height(), city.width(), std::vector<double>(static_cast<std::size_t>(city.height() * city.width()))};
    for (int y = 0; y < city.height(); ++y) {
        for (int x = 0; x < city.width(); ++x) {
            const Cell c{x, y};
            double v = 0.0;
            if (!city.occupied(c)) {
                const double d = std::hypot(static_cast<double>(x - tx.x), static_cast<double>(y - tx.y));
                v = free_space_strength(d, params) * std::pow(params.beta, edges_crossed(city, tx, c));
            }
            map.strength[static_cast<std::size_t>(y * city.width() + x)] = v;
        }
    }
    return map;
}

std::vector<Measurement> sample_measurements(const RadioMap& gt_map, const CityMap& city, std::size_t n,
                                             std::uint64_t seed) {
    if (gt_map.height != city.height() || gt_map.width != city.width()) throw InputError("map and city differ in shape");
    std::vector<Measurement> out;
    if (n == 0) return out;
    if (std::all_of(city.grid().begin(), city.grid().end(), [](auto v) { return v != 0; })) {
        throw InputError("no free cells to measure");
    }
    Rng rng = make_rng(seed);
    const auto w = static_cast<std::uint64_t>(city.width());
    const auto h = static_cast<std::uint64_t>(city.height());
    while (out.size() < n) {
        const Cell c{static_cast<int>(rng() % w), static_cast<int>(rng() % h)};
        if (city.occupied(c)) continue;
        out.push_back({c, gt_map.at(c)});
    }
    return out;
}

// ---------------------------------------------------------------- scenes

void RadioScene::validate() const {
    if (!city.in_bounds(tx) || city.occupied(tx)) throw InputError("tx must lie on a free cell");
    for (int id : removed_ids) {
        if (!city.has_building(id)) throw InputError("removed id " + std::to_string(id) + " is not a building");
    }
    if (noisy_city.height() != city.height() || noisy_city.width() != city.width()) {
        throw InputError("noisy city shape differs from the city");
    }
    for (const auto& b : noisy_city.buildings()) {
        const auto& all = city.buildings();
        if (std::find(all.begin(), all.end(), b) == all.end()) throw InputError("noisy city has an unknown building");
    }
    for (const auto& m : measurements) {
        if (!city.in_bounds(m.cell) || noisy_city.occupied(m.cell)) {
            throw InputError("measurement outside the grid or inside a building");
        }
        if (!(m.strength >= 0.0 && m.strength <= 1.0)) throw InputError("measurement strength outside [0,1]");
    }
    if (region.x0 < 0 || region.y0 < 0 || region.x1 > city.width() || region.y1 > city.height() ||
        region.area() <= 0) {
        throw InputError("region must be a non-empty rectangle inside the grid");
    }
}

RadioScene make_scene(CityMap city, Cell tx, std::vector<int> removed_ids, std::vector<Measurement> measurements,
                      Rect region) {
    RadioScene scene;
    scene.noisy_city = city.without(removed_ids);
    scene.city = std::move(city);
    scene.tx = tx;
    scene.removed_ids = std::move(removed_ids);
    scene.measurements = std::move(measurements);
    scene.region = region;
    scene.validate();
    return scene;
}

RadioScene generate_scene(std::uint64_t seed, const SceneParams& params) {
    CityMap city = generate_city(derive_seed(seed, 0), params.city);
    if (params.n_removed < 0 || params.n_removed > static_cast<int>(city.buildings().size())) {
        throw InputError("cannot remove more buildings than the city has");
    }
    Rng rng = make_rng(seed, 1);
    Cell tx;
    do {
        tx = {static_cast<int>(rng() % static_cast<std::uint64_t>(city.width())),
              static_cast<int>(rng() % static_cast<std::uint64_t>(city.height()))};
    } while (city.occupied(tx));

    std::vector<int> ids;
    for (const auto& b : city.buildings()) ids.push_back(b.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(params.n_removed));
    std::sort(ids.begin(), ids.end());

    const auto gt = simulate_radio(city, tx);
    auto measurements = sample_measurements(gt, city, params.n_measurements, derive_seed(seed, 2));
    Rect region{0, 0, std::min(4, city.width()), std::min(4, city.height())};
    if (!ids.empty()) {
        for (const auto& b : city.buildings()) {
            if (b.id == ids.front()) region = b.rect;
        }
    }
    return make_scene(std::move(city), tx, std::move(ids), std::move(measurements), region);
}

RadioScene shadow_fixture() {
    std::vector<Building> buildings{
        {0, {5, 2, 9, 6}},      //
        {1, {22, 2, 27, 7}},    //
        {2, {14, 11, 18, 20}},  // removed: in line of sight of the tx
        {3, {6, 24, 10, 29}},   //
        {4, {23, 24, 28, 29}},  //
    };
    CityMap city(32, 32, std::move(buildings));
    const Cell tx{3, 15};
    const auto gt = simulate_radio(city, tx);
    const Cell probes[] = {
        // shadow of building 2
        {19, 13}, {19, 16}, {20, 18}, {21, 14}, {22, 16},
        // line of sight, right in front of building 2
        {12, 12}, {12, 15}, {11, 18}, {13, 16},
    };
    std::vector<Measurement> measurements;
    for (const auto& c : probes) measurements.push_back({c, gt.at(c)});
    for (const auto& m : sample_measurements(gt, city, 10, 20240917)) measurements.push_back(m);
    return make_scene(std::move(city), tx, {2}, std::move(measurements), Rect{14, 11, 18, 20});
}

bool in_shadow_of(const RadioScene& scene, int building_id, Cell cell) {
    for (const auto& b : scene.city.buildings()) {
        if (b.id != building_id) continue;
        return segment_crosses(scene.tx.x + 0.5, scene.tx.y + 0.5, cell.x + 0.5, cell.y + 0.5, b.rect);
    }
    throw InputError("unknown building id " + std::to_string(building_id));
}

bool line_of_sight(const RadioScene& scene, Cell cell) { return edges_crossed(scene.city, scene.tx, cell) == 0; }

// ---------------------------------------------------------------- black box

RadioMap phi_model(const ModelInput& input, Cell tx, const PhiParams& params) {
    RadioMap out = simulate_radio(input.city, tx, params.propagation);
    if (input.measurements.empty()) return out;
    const RadioMap& base = out;
    std::vector<double> residual(input.measurements.size());
    for (std::size_t m = 0; m < residual.size(); ++m) {
        residual[m] = input.measurements[m].strength - base.at(input.measurements[m].cell);
    }
    std::vector<double> corrected(out.strength);
    const double r = params.kernel_radius;
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const Cell c{x, y};
            if (input.city.occupied(c)) continue;
            double num = 0.0;
            double den = params.kernel_prior;
            for (std::size_t m = 0; m < residual.size(); ++m) {
                const Cell mc = input.measurements[m].cell;
                const double d = std::hypot(static_cast<double>(x - mc.x), static_cast<double>(y - mc.y));
                if (d >= r) continue;
                const double w = (1.0 - d / r) * (1.0 - d / r);
                num += w * residual[m];
                den += w;
            }
            const auto idx = static_cast<std::size_t>(y * out.width + x);
            corrected[idx] = std::clamp(base.strength[idx] + num / den, 0.0, 1.0);
        }
    }
    out.strength = std::move(corrected);
    return out;
}

RadioMap phi_model(const RadioScene& scene, const PhiParams& params) {
    return phi_model(ModelInput{scene.noisy_city, scene.measurements}, scene.tx, params);
}

void CompletionPolicy::validate() const {
    if (!(p_inpaint >= 0.0 && p_inpaint <= 1.0)) throw InputError("p_inpaint must lie in [0,1]");
}

// ---------------------------------------------------------------- encoding

SceneEncoding::SceneEncoding(const RadioScene& scene)
    : noisy_city_(scene.noisy_city), tx_(scene.tx), measurements_(scene.measurements) {
    for (const auto& b : noisy_city_.buildings()) building_ids_.push_back(b.id);
}

Datum SceneEncoding::encode() const {
    std::vector<double> v(building_ids_.size(), 1.0);
    for (const auto& m : measurements_) v.push_back(m.strength);
    return Datum(std::move(v));
}

ModelInput SceneEncoding::decode(std::span<const double> z) const {
    if (z.size() != dim()) throw InputError("encoded scene has the wrong length");
    std::vector<int> kept;
    for (std::size_t b = 0; b < building_ids_.size(); ++b) {
        if (z[b] >= 0.5) kept.push_back(building_ids_[b]);
    }
    ModelInput input{noisy_city_.keep(kept), {}};
    for (std::size_t m = 0; m < measurements_.size(); ++m) {
        const double v = z[building_ids_.size() + m];
        if (v > 0.0) input.measurements.push_back({measurements_[m].cell, std::min(v, 1.0)});
    }
    return input;
}

std::vector<double> SceneEncoding::selection_mask(const Selection& selection) const {
    std::vector<double> s(dim(), 0.0);
    for (int id : selection.building_ids) {
        auto it = std::find(building_ids_.begin(), building_ids_.end(), id);
        if (it == building_ids_.end()) throw InputError("unknown building id " + std::to_string(id));
        s[static_cast<std::size_t>(it - building_ids_.begin())] = 1.0;
    }
    for (std::size_t m : selection.measurement_ids) {
        if (m >= measurements_.size()) throw InputError("unknown measurement id " + std::to_string(m));
        s[building_ids_.size() + m] = 1.0;
    }
    return s;
}

RadioModel::RadioModel(const RadioScene& scene, PhiParams params) : encoding_(scene), params_(params) {}

std::size_t RadioModel::out_dim() const {
    return static_cast<std::size_t>(encoding_.noisy_city().height() * encoding_.noisy_city().width());
}

std::vector<double> RadioModel::forward(std::span<const double> z) const {
    return phi_model(encoding_.decode(z), encoding_.tx(), params_).strength;
}

RadioInfill::RadioInfill(const RadioScene& scene, CompletionPolicy policy, PropagationParams propagation)
    : encoding_(scene), policy_(policy), propagation_(propagation) {
    policy_.validate();
}

std::vector<double> RadioInfill::sample(std::span<const double> x, std::span<const double> s, Rng& rng) const {
    if (x.size() != encoding_.dim() || s.size() != encoding_.dim()) throw InputError("radio infill dimension mismatch");
    const std::size_t nb = encoding_.n_buildings();
    std::vector<double> g(x.size(), 0.0);

    // One uniform per measurement, always drawn, so draws line up across masks.
    std::vector<bool> inpaint(encoding_.n_measurements());
    bool any = false;
    for (std::size_t m = 0; m < inpaint.size(); ++m) {
        inpaint[m] = uniform_open01(rng) < policy_.p_inpaint;
        any = any || (inpaint[m] && s[nb + m] < 1.0);
    }
    if (!any) return g;

    std::vector<int> selected;
    for (std::size_t b = 0; b < nb; ++b) {
        if (s[b] >= 0.5) selected.push_back(encoding_.building_ids()[b]);
    }
    const auto sim = simulate_radio(encoding_.noisy_city().keep(selected), encoding_.tx(), propagation_);
    const auto x_input = encoding_.decode(std::vector<double>(x.size(), 1.0));
    for (std::size_t m = 0; m < inpaint.size(); ++m) {
        if (inpaint[m] && s[nb + m] < 1.0) g[nb + m] = sim.at(x_input.measurements[m].cell);
    }
    return g;
}

nlohmann::json RadioInfill::describe() const {
    return {{"kind", kind()}, {"name", "radio-completion"}, {"p_inpaint", policy_.p_inpaint},
            {"buildings", "never inpainted"}};
}

ModelInput complete_input(const RadioScene& scene, const Selection& selection, const CompletionPolicy& policy,
                          std::uint64_t seed, std::uint64_t draw) {
    const SceneEncoding enc(scene);
    const RadioInfill infill(scene, policy);
    const auto s = enc.selection_mask(selection);
    const auto x = enc.encode();
    Rng rng = make_rng(seed, draw);
    const auto g = infill.sample(x.values(), s, rng);
    return enc.decode(blend(x.values(), s, g));
}

OutputSelector region_selector(const RadioScene& scene) {
    std::vector<std::size_t> cells;
    for (int y = scene.region.y0; y < scene.region.y1; ++y) {
        for (int x = scene.region.x0; x < scene.region.x1; ++x) {
            cells.push_back(static_cast<std::size_t>(y * scene.city.width() + x));
        }
    }
    return OutputSelector::uniform_region(cells, static_cast<std::size_t>(scene.city.height() * scene.city.width()));
}

Explanation explain_region(const RadioScene& scene, const CompletionPolicy& policy, std::size_t budget,
                           const OptimConfig& cfg, const PhiParams& params) {
    scene.validate();
    policy.validate();
    const RadioModel model(scene, params);
    const RadioInfill completion(scene, policy, params.propagation);
    const auto x = model.encoding().encode();
    const auto grouping = ComponentGrouping::trivial(x.dim());
    const auto sel = region_selector(scene);
    OptimConfig mp = cfg;
    mp.method = Method::matching_pursuit;
    mp.mp_budget = budget;
    auto e = matching_pursuit(model, sel, x, grouping, completion, mp);
    e.config_echo["radio"] = {
        {"p_inpaint", policy.p_inpaint},
        {"n_buildings", model.encoding().n_buildings()},
        {"n_measurements", model.encoding().n_measurements()},
        {"building_ids", model.encoding().building_ids()},
        {"groups", "one per building, then one per measurement, equal weight"},
        {"region", {scene.region.x0, scene.region.y0, scene.region.x1, scene.region.y1}},
        {"region_aggregation", "mean"},
        {"alpha", params.propagation.alpha},
        {"beta", params.propagation.beta},
        {"kernel_radius", params.kernel_radius},
        {"kernel_prior", params.kernel_prior},
    };
    return e;
}

// ---------------------------------------------------------------- formats

std::string city_to_pgm(const CityMap& city) {
    std::string out = "P2\n" + std::to_string(city.width()) + " " + std::to_string(city.height()) + "\n255\n";
    for (int y = 0; y < city.height(); ++y) {
        for (int x = 0; x < city.width(); ++x) {
            if (x) out += ' ';
            out += city.occupied({x, y}) ? "255" : "0";
        }
        out += '\n';
    }
    return out;
}

std::string radio_to_pgm(const RadioMap& map) {
    std::string out = "P2\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            if (x) out += ' ';
            const double v = std::clamp(map.at({x, y}), 0.0, 1.0);
            out += std::to_string(static_cast<int>(std::floor(v * 255.0 + 0.5)));
        }
        out += '\n';
    }
    return out;
}

nlohmann::json scene_to_json(const RadioScene& scene) {
    auto buildings = nlohmann::json::array();
    for (const auto& b : scene.city.buildings()) {
        buildings.push_back({{"id", b.id}, {"x0", b.rect.x0}, {"y0", b.rect.y0}, {"x1", b.rect.x1}, {"y1", b.rect.y1}});
    }
    auto measurements = nlohmann::json::array();
    for (const auto& m : scene.measurements) {
        measurements.push_back({{"x", m.cell.x}, {"y", m.cell.y}, {"strength", m.strength}});
    }
    return {{"city", {{"height", scene.city.height()}, {"width", scene.city.width()}, {"buildings", buildings}}},
            {"tx", {scene.tx.x, scene.tx.y}},
            {"removed_ids", scene.removed_ids},
            {"measurements", measurements},
            {"region", {{"x0", scene.region.x0}, {"y0", scene.region.y0}, {"x1", scene.region.x1}, {"y1", scene.region.y1}}}};
}

RadioScene scene_from_json(const nlohmann::json& doc) {
    try {
        const auto& c = doc.at("city");
        std::vector<Building> buildings;
        for (const auto& b : c.at("buildings")) {
            buildings.push_back({b.at("id").get<int>(),
                                 {b.at("x0").get<int>(), b.at("y0").get<int>(), b.at("x1").get<int>(), b.at("y1").get<int>()}});
        }
        CityMap city(c.at("height").get<int>(), c.at("width").get<int>(), std::move(buildings));
        const Cell tx{doc.at("tx").at(0).get<int>(), doc.at("tx").at(1).get<int>()};
        std::vector<Measurement> measurements;
        for (const auto& m : doc.at("measurements")) {
            measurements.push_back({{m.at("x").get<int>(), m.at("y").get<int>()}, m.at("strength").get<double>()});
        }
        const auto& r = doc.at("region");
        return make_scene(std::move(city), tx, doc.at("removed_ids").get<std::vector<int>>(), std::move(measurements),
                          Rect{r.at("x0").get<int>(), r.at("y0").get<int>(), r.at("x1").get<int>(), r.at("y1").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scene document: ") + e.what());
    }
}

std::string explanation_svg(const RadioScene& scene, const RadioMap& map, std::span<const std::size_t> selected,
                            int cell_px) {
    const SceneEncoding enc(scene);
    const std::size_t nb = enc.n_buildings();
    auto is_selected = [&](std::size_t g) { return std::find(selected.begin(), selected.end(), g) != selected.end(); };
    const int w = map.width * cell_px;
    const int h = map.height * cell_px;
    auto px = [&](double v) { return std::to_string(static_cast<int>(std::lround(v * cell_px))); };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
                      std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n";
    out += "<g id=\"radio-map\">\n";
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const int g = static_cast<int>(std::floor(std::clamp(map.at({x, y}), 0.0, 1.0) * 255.0 + 0.5));
            const std::string gray = std::to_string(g);
            out += "<rect x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(1) + "\" height=\"" + px(1) +
                   "\" fill=\"rgb(" + gray + "," + gray + "," + gray + ")\"/>\n";
        }
    }
    out += "</g>\n<g id=\"buildings\">\n";
    for (std::size_t b = 0; b < nb; ++b) {
        for (const auto& bl : scene.noisy_city.buildings()) {
            if (bl.id != enc.building_ids()[b]) continue;
            const auto& r = bl.rect;
            const bool sel = is_selected(b);
            out += "<rect class=\"building" + std::string(sel ? " selected" : "") + "\" data-id=\"" +
                   std::to_string(bl.id) + "\" x=\"" + px(r.x0) + "\" y=\"" + px(r.y0) + "\" width=\"" +
                   px(r.x1 - r.x0) + "\" height=\"" + px(r.y1 - r.y0) + "\" fill=\"blue\" fill-opacity=\"" +
                   (sel ? "0.9" : "0.25") + "\"" + (sel ? " stroke=\"yellow\" stroke-width=\"2\"" : "") + "/>\n";
        }
    }
    out += "</g>\n<g id=\"measurements\">\n";
    for (std::size_t m = 0; m < scene.measurements.size(); ++m) {
        const auto& c = scene.measurements[m].cell;
        const bool sel = is_selected(nb + m);
        out += "<circle class=\"measurement" + std::string(sel ? " selected" : "") + "\" data-index=\"" +
               std::to_string(m) + "\" cx=\"" + px(c.x + 0.5) + "\" cy=\"" + px(c.y + 0.5) + "\" r=\"" +
               px(sel ? 0.45 : 0.25) + "\" fill=\"red\"" + (sel ? " stroke=\"yellow\" stroke-width=\"2\"" : "") +
               "/>\n";
    }
    out += "</g>\n";
    const auto& r = scene.region;
    out += "<rect id=\"region\" x=\"" + px(r.x0) + "\" y=\"" + px(r.y0) + "\" width=\"" + px(r.x1 - r.x0) +
           "\" height=\"" + px(r.y1 - r.y0) + "\" fill=\"none\" stroke=\"green\" stroke-width=\"2\"/>\n";
    out += "<circle id=\"tx\" cx=\"" + px(scene.tx.x + 0.5) + "\" cy=\"" + px(scene.tx.y + 0.5) + "\" r=\"" + px(0.5) +
           "\" fill=\"white\" stroke=\"black\"/>\n";
    out += "</svg>\n";
    return out;
}

}  // namespace rdx::radio
