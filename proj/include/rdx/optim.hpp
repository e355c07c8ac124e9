#pragma once
// Mask search: l1-relaxed projected gradient descent, the concrete
// (relaxed Bernoulli) parameterization, and greedy matching pursuit.

#include <cstdint>
#include <span>
#include <string>

#include <json.hpp>

#include "rdx/core.hpp"
#include "rdx/masking.hpp"
#include "rdx/models.hpp"

namespace rdx {

enum class Method { relaxed_sgd, concrete, matching_pursuit };
enum class UpdateRule { adam, sgd };

std::string to_string(Method m);
std::string to_string(UpdateRule u);

struct OptimConfig {
    Method method = Method::concrete;
    std::size_t steps = 1'000'000;
    double step_size = 1e-5;
    double lambda = 50.0;
    double temperature = 0.1;
    std::size_t n_samples = kDefaultSamples;
    std::uint64_t rng_seed = 0;
    std::size_t mp_budget = 1;  // 0 reports only the empty selection

    UpdateRule update = UpdateRule::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double initial_value = 0.5;

    // 1e6 Adam steps, step size 1e-5, lambda 50, temperature 0.1.
    static OptimConfig per_frequency_defaults();
    // 2e5 Adam steps, step size 1e-4, lambda 30, temperature 0.1.
    static OptimConfig group_query_defaults();

    // Throws ConfigError naming the offending field.
    void validate() const;
    nlohmann::json to_json() const;
};

// s = sigmoid((logit(theta) + logit(u)) / temperature)
double sample_concrete(double theta, double temperature, double u);

// ds/dtheta of sample_concrete at fixed u.
double concrete_gradient(double theta, double temperature, double u);

// Projected Adam (or SGD) on s in [0,1]^groups from s = initial_value.
Explanation optimize_relaxed(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                             const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);

// Adam on theta through the concrete reparameterization; the returned mask is theta.
Explanation optimize_concrete(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                              const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);

// Dataset variants: one shared mask minimizing the mean loss over all data.
Explanation optimize_relaxed(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                             const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);
Explanation optimize_concrete(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                              const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);

// Greedy selection of cfg.mp_budget groups. Each round scores every remaining
// group with the same seed and keeps the one with the lowest distortion (ties
// go to the lower index). The curve starts with the empty selection.
Explanation matching_pursuit(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                             const ComponentGrouping& grouping, const InfillSampler& completion,
                             const OptimConfig& cfg);

// Dispatches on cfg.method.
Explanation optimize(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                     const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);

}  // namespace rdx
