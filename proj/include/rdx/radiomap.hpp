#pragma once
// Grid-city radio propagation world. simulate_radio plays the role of the
// ground-truth simulator, phi_model is the black box under explanation, and
// the completion policies fill unselected measurements for matching pursuit.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdx/core.hpp"
#include "rdx/masking.hpp"
#include "rdx/models.hpp"
#include "rdx/optim.hpp"

namespace rdx::radio {

// Column x, row y. Cell (x, y) covers [x, x+1) x [y, y+1).
struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

// Half-open integer rectangle [x0, x1) x [y0, y1).
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool contains(Cell c) const noexcept { return c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1; }
    int area() const noexcept { return (x1 - x0) * (y1 - y0); }
    bool operator==(const Rect&) const = default;
};

struct Building {
    int id = 0;
    Rect rect;
    bool operator==(const Building&) const = default;
};

class CityMap {
public:
    CityMap() = default;
    // Throws InputError if a building leaves the grid, is empty, overlaps
    // another, or repeats an id.
    CityMap(int height, int width, std::vector<Building> buildings);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    const std::vector<Building>& buildings() const noexcept { return buildings_; }
    const std::vector<std::uint8_t>& grid() const noexcept { return grid_; }

    bool in_bounds(Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    bool occupied(Cell c) const { return grid_.at(static_cast<std::size_t>(c.y * width_ + c.x)) != 0; }
    bool has_building(int id) const noexcept;

    // Same grid with only the listed buildings (order of this map preserved).
    CityMap keep(std::span<const int> ids) const;
    CityMap without(std::span<const int> ids) const;

    bool operator==(const CityMap&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<Building> buildings_;
    std::vector<std::uint8_t> grid_;
};

struct CityParams {
    int height = 32;
    int width = 32;
    int n_buildings = 6;
    int min_size = 3;
    int max_size = 7;
};

// Rejection-samples non-overlapping rectangles (one free cell between any two).
// Throws GenerationError after 10^4 rejected placements.
CityMap generate_city(std::uint64_t seed, const CityParams& params);

// FNV-1a over the occupancy grid and its shape.
std::uint64_t grid_hash(const CityMap& city);

struct PropagationParams {
    // Free-space strength 1 - alpha ln(1 + d) reaches 0.2 at d = 64.
    double alpha = 0.8 / 4.174387269895637;  // 0.8 / ln 65
    // Attenuation per building edge crossed by the tx -> cell segment.
    double beta = 0.5;
};

struct RadioMap {
    int height = 0;
    int width = 0;
    std::vector<double> strength;  // row-major, in [0,1]

    double at(Cell c) const { return strength.at(static_cast<std::size_t>(c.y * width + c.x)); }
    bool operator==(const RadioMap&) const = default;
};

double free_space_strength(double distance, const PropagationParams& params = {});

// Number of building edges crossed by the open segment between cell centers.
int edges_crossed(const CityMap& city, Cell from, Cell to);

// strength(p) = clamp(1 - alpha ln(1 + |p - tx|), 0, 1) * beta^edges, 0 inside buildings.
RadioMap simulate_radio(const CityMap& city, Cell tx, const PropagationParams& params = {});

struct Measurement {
    Cell cell;
    double strength = 0.0;
    bool operator==(const Measurement&) const = default;
};

// Uniform cells, rejecting building interiors, annotated with gt_map.
std::vector<Measurement> sample_measurements(const RadioMap& gt_map, const CityMap& city, std::size_t n,
                                             std::uint64_t seed);

struct RadioScene {
    CityMap city;        // ground truth
    Cell tx;
    CityMap noisy_city;  // city without removed_ids
    std::vector<Measurement> measurements;
    Rect region;
    std::vector<int> removed_ids;

    // Throws InputError when an invariant is broken.
    void validate() const;
};

// Builds a scene, deriving noisy_city from city and removed_ids.
RadioScene make_scene(CityMap city, Cell tx, std::vector<int> removed_ids, std::vector<Measurement> measurements,
                      Rect region);

struct SceneParams {
    CityParams city;
    int n_removed = 1;
    std::size_t n_measurements = 24;
};

// Random city, tx on a free cell, removed buildings, uniform measurements and
// the footprint of the first removed building as region of interest.
RadioScene generate_scene(std::uint64_t seed, const SceneParams& params);

// 32x32 scene with one removed building in line of sight of the tx, dense
// measurements in its shadow and right in front of it, and the region of
// interest on the missing building.
RadioScene shadow_fixture();

struct PhiParams {
    PropagationParams propagation;
    // Measurement influence (1 - d/r)^2 for d < r.
    double kernel_radius = 6.0;
    // Prior weight of the simulated base map in the residual correction.
    double kernel_prior = 0.5;
};

// What the black box sees: a (partial) city and a set of measurements.
struct ModelInput {
    CityMap city;
    std::vector<Measurement> measurements;
};

// base = simulate_radio(city, tx); each free cell is corrected by
// sum_m w_m (m - base(m)) / (prior + sum_m w_m), clamped to [0,1].
RadioMap phi_model(const ModelInput& input, Cell tx, const PhiParams& params = {});
RadioMap phi_model(const RadioScene& scene, const PhiParams& params = {});

struct CompletionPolicy {
    // Probability that an unselected measurement is infilled from the
    // simulator run on the selected buildings; otherwise it is dropped.
    double p_inpaint = 1.0;

    void validate() const;
    bool deterministic() const noexcept { return p_inpaint == 0.0 || p_inpaint == 1.0; }
};

struct Selection {
    std::vector<int> building_ids;
    std::vector<std::size_t> measurement_ids;
};

// Input vector layout used for explanations: one component per noisy-city
// building (1 = present) followed by one per measurement (strength, 0 = absent).
class SceneEncoding {
public:
    explicit SceneEncoding(const RadioScene& scene);

    std::size_t n_buildings() const noexcept { return building_ids_.size(); }
    std::size_t n_measurements() const noexcept { return measurements_.size(); }
    std::size_t dim() const noexcept { return building_ids_.size() + measurements_.size(); }
    const std::vector<int>& building_ids() const noexcept { return building_ids_; }

    Datum encode() const;
    // Buildings with z >= 0.5 are kept, measurements with z > 0 are kept at strength z.
    ModelInput decode(std::span<const double> z) const;
    // Expanded 0/1 mask for a selection. Throws InputError on unknown ids.
    std::vector<double> selection_mask(const Selection& selection) const;

    Cell tx() const noexcept { return tx_; }
    const CityMap& noisy_city() const noexcept { return noisy_city_; }

private:
    CityMap noisy_city_;
    Cell tx_;
    std::vector<int> building_ids_;
    std::vector<Measurement> measurements_;
};

// phi_model over the encoded input vector; outputs the H*W map.
class RadioModel final : public ModelOracle {
public:
    RadioModel(const RadioScene& scene, PhiParams params = {});

    std::string kind() const override { return "radio-phi"; }
    std::size_t in_dim() const override { return encoding_.dim(); }
    std::size_t out_dim() const override;
    std::vector<double> forward(std::span<const double> z) const override;

    const SceneEncoding& encoding() const noexcept { return encoding_; }

private:
    SceneEncoding encoding_;
    PhiParams params_;
};

// Conditional infill: buildings are never inpainted (g = 0); each measurement
// draws u ~ U(0,1) in index order and, when u < p_inpaint, takes the value of
// simulate_radio on the selected (s >= 0.5) buildings at its cell.
class RadioInfill final : public InfillSampler {
public:
    RadioInfill(const RadioScene& scene, CompletionPolicy policy, PropagationParams propagation = {});

    std::string kind() const override { return "conditional"; }
    bool deterministic() const override { return policy_.deterministic(); }
    std::vector<double> sample(std::span<const double> x, std::span<const double> s_expanded,
                               Rng& rng) const override;
    nlohmann::json describe() const override;

private:
    SceneEncoding encoding_;
    CompletionPolicy policy_;
    PropagationParams propagation_;
};

// Completed model input for a selection; draw `draw` of seed `seed` matches
// the draw used by estimate_distortion with the same seed.
ModelInput complete_input(const RadioScene& scene, const Selection& selection, const CompletionPolicy& policy,
                          std::uint64_t seed, std::uint64_t draw = 0);

OutputSelector region_selector(const RadioScene& scene);

// Matching pursuit over buildings and measurements (group g < n_buildings is
// building g of the noisy city, the rest are measurements) with distortion on
// the region mean of phi_model.
Explanation explain_region(const RadioScene& scene, const CompletionPolicy& policy, std::size_t budget,
                           const OptimConfig& cfg, const PhiParams& params = {});

// The tx -> cell segment crosses ground-truth building `building_id`.
bool in_shadow_of(const RadioScene& scene, int building_id, Cell cell);
// No building of the ground-truth city blocks the tx -> cell segment.
bool line_of_sight(const RadioScene& scene, Cell cell);

// ---------------------------------------------------------------- formats

// P2, 0 = free, 255 = building.
std::string city_to_pgm(const CityMap& city);
// P2, round-half-up of strength * 255.
std::string radio_to_pgm(const RadioMap& map);

nlohmann::json scene_to_json(const RadioScene& scene);
RadioScene scene_from_json(const nlohmann::json& doc);

// Gray radio map, blue buildings, red measurements, green region. Selected
// groups (indices as in explain_region) are drawn opaque and outlined.
std::string explanation_svg(const RadioScene& scene, const RadioMap& map, std::span<const std::size_t> selected,
                            int cell_px = 12);

}  // namespace rdx::radio
