#pragma once
// Shared domain types: data vectors, component groupings, masks and
// explanation results.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace rdx {

inline constexpr double kDefaultBinarizeThreshold = 0.5;

// A flat vector of finite, real-valued model-input components.
class Datum {
public:
    Datum() = default;
    explicit Datum(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const Datum&) const = default;

private:
    std::vector<double> values_;
};

// Ordered list of pairwise-disjoint, non-empty index sets. Mask entry g
// controls every component listed in group g; components that belong to no
// group are never masked.
class ComponentGrouping {
public:
    ComponentGrouping() = default;
    explicit ComponentGrouping(std::vector<std::vector<std::size_t>> groups);

    // One group per component.
    static ComponentGrouping trivial(std::size_t dim);

    std::size_t size() const noexcept { return groups_.size(); }
    const std::vector<std::size_t>& group(std::size_t g) const { return groups_.at(g); }
    const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }

    // One past the largest index referenced by any group (0 when empty).
    std::size_t index_bound() const noexcept { return index_bound_; }

    // Throws ConfigError if any index is >= dim.
    void check_dim(std::size_t dim) const;

private:
    std::vector<std::vector<std::size_t>> groups_;
    std::size_t index_bound_ = 0;
};

// Per-group relevance weights in [0,1].
class Mask {
public:
    Mask() = default;
    explicit Mask(std::vector<double> weights);

    static Mask filled(std::size_t n, double value);

    std::size_t size() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double operator[](std::size_t i) const { return weights_[i]; }

    bool operator==(const Mask&) const = default;

private:
    std::vector<double> weights_;
};

// Inclusion probabilities for the concrete relaxation.
struct BernoulliParams {
    static constexpr double kThetaEps = 1e-6;

    std::vector<double> theta;
    double temperature = 0.1;

    BernoulliParams(std::size_t n_groups, double initial, double temperature);

    // Clamps every theta into [kThetaEps, 1 - kThetaEps].
    void clamp() noexcept;
};

struct CurvePoint {
    double sparsity = 0.0;
    double distortion = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

struct Explanation {
    Mask final_mask;
    std::vector<CurvePoint> distortion_curve;
    std::optional<std::vector<std::size_t>> selected_order;
    nlohmann::json config_echo = nlohmann::json::object();
};

struct Sparsity {
    double l1 = 0.0;
    std::size_t l0 = 0;
};

// Broadcast group weights onto components. Ungrouped components get 1.
std::vector<double> expand_mask(const Mask& mask, const ComponentGrouping& grouping, std::size_t dim);

// weights[i] >= threshold -> 1, else 0.
Mask binarize(const Mask& mask, double threshold = kDefaultBinarizeThreshold);

Sparsity sparsity(const Mask& mask) noexcept;

// {"mask": [...], "curve": [[sparsity, distortion], ...], "order": [...] | null, "config": {...}}
nlohmann::json to_json(const Explanation& explanation);
Explanation explanation_from_json(const nlohmann::json& doc);

// Single-column CSV, one weight per line, header "weight".
std::string mask_to_csv(const Mask& mask);

}  // namespace rdx
