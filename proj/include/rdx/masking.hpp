#pragma once
// Obfuscation: infill samplers, the blend z = x*s + g*(1-s), Monte-Carlo
// distortion estimation, the relaxed loss and its gradient.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdx/core.hpp"
#include "rdx/models.hpp"
#include "rdx/rng.hpp"

namespace rdx {

inline constexpr std::size_t kDefaultSamples = 64;

// Source of infill vectors g given (x, expanded mask, randomness). The
// returned vector has x.size() components; only entries where s < 1 matter.
// Implementations must be callable concurrently with independent rngs.
class InfillSampler {
public:
    virtual ~InfillSampler() = default;

    // "gaussian", "constant" or "conditional".
    virtual std::string kind() const = 0;
    // True when the output never depends on the rng.
    virtual bool deterministic() const { return false; }
    virtual std::vector<double> sample(std::span<const double> x, std::span<const double> s_expanded,
                                       Rng& rng) const = 0;
    virtual nlohmann::json describe() const { return {{"kind", kind()}}; }
};

// Independent Normal(mean_i, stddev_i^2) per component, drawn in index order.
class GaussianSampler final : public InfillSampler {
public:
    GaussianSampler(std::vector<double> mean, std::vector<double> stddev);

    // Per-component mean and population standard deviation over a dataset.
    static GaussianSampler fit(std::span<const Datum> data);

    std::string kind() const override { return "gaussian"; }
    bool deterministic() const override;
    std::vector<double> sample(std::span<const double> x, std::span<const double> s_expanded,
                               Rng& rng) const override;
    nlohmann::json describe() const override;

    const std::vector<double>& mean() const noexcept { return mean_; }
    const std::vector<double>& stddev() const noexcept { return stddev_; }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

// Fixed baseline vector.
class ConstantSampler final : public InfillSampler {
public:
    explicit ConstantSampler(std::vector<double> baseline);

    std::string kind() const override { return "constant"; }
    bool deterministic() const override { return true; }
    std::vector<double> sample(std::span<const double> x, std::span<const double> s_expanded,
                               Rng& rng) const override;
    nlohmann::json describe() const override;

private:
    std::vector<double> baseline_;
};

// Wraps an arbitrary infill oracle G(x, s, n).
class ConditionalSampler final : public InfillSampler {
public:
    using Oracle = std::function<std::vector<double>(std::span<const double>, std::span<const double>, Rng&)>;

    ConditionalSampler(Oracle oracle, bool deterministic, std::string name = "conditional");

    std::string kind() const override { return "conditional"; }
    bool deterministic() const override { return deterministic_; }
    std::vector<double> sample(std::span<const double> x, std::span<const double> s_expanded,
                               Rng& rng) const override;
    nlohmann::json describe() const override { return {{"kind", kind()}, {"name", name_}}; }

private:
    Oracle oracle_;
    bool deterministic_;
    std::string name_;
};

struct DistortionEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n_samples = 0;
};

// z_i = x_i s_i + g_i (1 - s_i)
std::vector<double> blend(std::span<const double> x, std::span<const double> s_expanded, std::span<const double> g);

// One infill draw from the substream rng_seed.
std::vector<double> sample_infill(const InfillSampler& sampler, std::span<const double> x,
                                  std::span<const double> s_expanded, std::uint64_t rng_seed);

// Everything that defines a distortion evaluation except the mask.
struct DistortionProblem {
    const ModelOracle& model;
    const OutputSelector& selector;
    const Datum& x;
    const ComponentGrouping& grouping;
    const InfillSampler& sampler;

    // Throws InputError/ConfigError on dimension mismatches.
    void validate() const;
};

// Mean of 1/2 (phi(x) - phi(z_k))^2 over n_samples draws. Draw k uses the
// substream derive_seed(rng_seed, k), so the same seed gives common random
// numbers across masks. Deterministic samplers are evaluated once.
DistortionEstimate estimate_distortion(const DistortionProblem& problem, const Mask& mask, std::size_t n_samples,
                                       std::uint64_t rng_seed);

DistortionEstimate estimate_distortion(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                                       const Mask& mask, const ComponentGrouping& grouping,
                                       const InfillSampler& sampler, std::size_t n_samples, std::uint64_t rng_seed);

// distortion + lambda * ||mask||_1
double loss(double distortion_mean, const Mask& mask, double lambda);

struct LossGradient {
    DistortionEstimate distortion;
    // dL'/d(mask weights), lambda term included.
    std::vector<double> gradient;
};

// Gradient of the Monte-Carlo loss with the infill held constant (no
// gradient flows through the sampler, even when it depends on s).
LossGradient loss_and_gradient(const DistortionProblem& problem, const Mask& mask, double lambda,
                               std::size_t n_samples, std::uint64_t rng_seed);

std::vector<double> loss_gradient(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                                  const Mask& mask, const ComponentGrouping& grouping, const InfillSampler& sampler,
                                  double lambda, std::size_t n_samples, std::uint64_t rng_seed);

}  // namespace rdx
