#include "rdx/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdx/errors.hpp"
#include "rdx/parallel.hpp"
#include "rdx/rng.hpp"

namespace rdx {

std::string to_string(Method m) {
    switch (m) {
        case Method::relaxed_sgd: return "relaxed_sgd";
        case Method::concrete: return "concrete";
        case Method::matching_pursuit: return "matching_pursuit";
    }
    return "?";
}

std::string to_string(UpdateRule u) { return u == UpdateRule::adam ? "adam" : "sgd"; }

OptimConfig OptimConfig::per_frequency_defaults() {
    OptimConfig c;
    c.method = Method::concrete;
    c.steps = 1'000'000;
    c.step_size = 1e-5;
    c.lambda = 50.0;
    c.temperature = 0.1;
    return c;
}

OptimConfig OptimConfig::group_query_defaults() {
    OptimConfig c;
    c.method = Method::concrete;
    c.steps = 200'000;
    c.step_size = 1e-4;
    c.lambda = 30.0;
    c.temperature = 0.1;
    return c;
}

void OptimConfig::validate() const {
    if (steps == 0) throw ConfigError("steps must be positive");
    if (!(step_size > 0.0) || !std::isfinite(step_size)) throw ConfigError("step_size must be positive");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be non-negative");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be positive");
    if (n_samples == 0) throw ConfigError("n_samples must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0,1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
    if (!(initial_value >= 0.0 && initial_value <= 1.0)) throw ConfigError("initial_value must lie in [0,1]");
}

nlohmann::json OptimConfig::to_json() const {
    return {{"method", to_string(method)},
            {"steps", steps},
            {"step_size", step_size},
            {"lambda", lambda},
            {"temperature", temperature},
            {"n_samples", n_samples},
            {"rng_seed", rng_seed},
            {"mp_budget", mp_budget},
            {"update", to_string(update)},
            {"beta1", beta1},
            {"beta2", beta2},
            {"adam_eps", adam_eps},
            {"initial_value", initial_value}};
}

// ---------------------------------------------------------------- concrete

namespace {

double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double concrete_logit(double theta, double temperature, double u) {
    return (logit(theta) + logit(u)) / temperature;
}

}  // namespace

double sample_concrete(double theta, double temperature, double u) {
    return sigmoid(concrete_logit(theta, temperature, u));
}

double concrete_gradient(double theta, double temperature, double u) {
    const double a = concrete_logit(theta, temperature, u);
    // s (1 - s) = sigmoid(a) sigmoid(-a), evaluated without cancellation.
    const double s_one_minus_s = sigmoid(a) * sigmoid(-a);
    return s_one_minus_s / (temperature * theta * (1.0 - theta));
}

// ---------------------------------------------------------------- shared loop

namespace {

class MomentUpdater {
public:
    MomentUpdater(const OptimConfig& cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    // Returns the step to subtract from the parameters.
    double step(std::size_t i, double grad, std::size_t t) {
        if (cfg_.update == UpdateRule::sgd) return cfg_.step_size * grad;
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad * grad;
        const double m_hat = m_[i] / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t)));
        const double v_hat = v_[i] / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t)));
        return cfg_.step_size * m_hat / (std::sqrt(v_hat) + cfg_.adam_eps);
    }

private:
    const OptimConfig& cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
};

struct DatasetLoss {
    double distortion = 0.0;
    std::vector<double> gradient;
};

// Mean over the dataset of the MC loss gradient at mask s. Datum i draws from
// the substream derive_seed(step_seed, i + 1).
DatasetLoss dataset_loss(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                         const ComponentGrouping& grouping, const InfillSampler& sampler, const Mask& s,
                         double lambda, std::size_t n_samples, std::uint64_t step_seed) {
    std::vector<LossGradient> per_datum(data.size());
    parallel_for(data.size(), [&](std::size_t i) {
        per_datum[i] = loss_and_gradient(DistortionProblem{model, sel, data[i], grouping, sampler}, s, lambda,
                                         n_samples, derive_seed(step_seed, i + 1));
    });
    DatasetLoss out;
    out.gradient.assign(grouping.size(), 0.0);
    for (const auto& lg : per_datum) {
        out.distortion += lg.distortion.mean;
        for (std::size_t g = 0; g < out.gradient.size(); ++g) out.gradient[g] += lg.gradient[g];
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    out.distortion *= inv;
    for (double& v : out.gradient) v *= inv;
    return out;
}

void check_inputs(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                  const ComponentGrouping& grouping, const OptimConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw InputError("dataset is empty");
    for (const auto& d : data) {
        if (d.dim() != model.in_dim()) throw InputError("datum dimension does not match the model");
    }
    sel.validate(model.out_dim());
    grouping.check_dim(model.in_dim());
    if (grouping.size() == 0) throw InputError("grouping has no groups");
}

nlohmann::json echo(const OptimConfig& cfg, const OutputSelector& sel, const InfillSampler& sampler,
                    const ComponentGrouping& grouping, std::size_t dim, std::size_t n_data) {
    return {{"optim", cfg.to_json()},
            {"selector", sel.describe()},
            {"sampler", sampler.describe()},
            {"n_groups", grouping.size()},
            {"dim", dim},
            {"n_data", n_data},
            {"distortion", "0.5*(phi(x)-phi(z))^2"},
            {"binarize_threshold", kDefaultBinarizeThreshold}};
}

std::size_t trajectory_stride(std::size_t steps) { return std::max<std::size_t>(1, steps / 1000); }

void check_finite(double loss_value, std::size_t step) {
    if (!std::isfinite(loss_value)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step));
    }
}

}  // namespace

Explanation optimize_relaxed(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                             const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    check_inputs(model, sel, data, grouping, cfg);
    const std::size_t n = grouping.size();
    std::vector<double> s(n, cfg.initial_value);
    MomentUpdater updater(cfg, n);
    const std::size_t stride = trajectory_stride(cfg.steps);

    Explanation out;
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const Mask current(s);
        const auto dl = dataset_loss(model, sel, data, grouping, sampler, current, cfg.lambda, cfg.n_samples,
                                     derive_seed(cfg.rng_seed, t));
        const double l1 = sparsity(current).l1;
        check_finite(dl.distortion + cfg.lambda * l1, t);
        if ((t - 1) % stride == 0) out.distortion_curve.push_back({l1, dl.distortion});
        for (std::size_t g = 0; g < n; ++g) {
            s[g] = std::clamp(s[g] - updater.step(g, dl.gradient[g], t), 0.0, 1.0);
        }
    }
    out.final_mask = Mask(std::move(s));
    out.config_echo = echo(cfg, sel, sampler, grouping, model.in_dim(), data.size());
    return out;
}

Explanation optimize_concrete(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                              const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    check_inputs(model, sel, data, grouping, cfg);
    const std::size_t n = grouping.size();
    BernoulliParams params(n, cfg.initial_value, cfg.temperature);
    MomentUpdater updater(cfg, n);
    const std::size_t stride = trajectory_stride(cfg.steps);

    Explanation out;
    std::vector<double> u(n);
    std::vector<double> s(n);
    for (std::size_t t = 1; t <= cfg.steps; ++t) {
        const std::uint64_t step_seed = derive_seed(cfg.rng_seed, t);
        Rng rng = make_rng(step_seed, 0);
        for (std::size_t g = 0; g < n; ++g) {
            u[g] = uniform_open01(rng);
            s[g] = sample_concrete(params.theta[g], params.temperature, u[g]);
        }
        const Mask relaxed(s);
        const auto dl = dataset_loss(model, sel, data, grouping, sampler, relaxed, cfg.lambda, cfg.n_samples,
                                     step_seed);
        check_finite(dl.distortion + cfg.lambda * sparsity(relaxed).l1, t);
        if ((t - 1) % stride == 0) {
            double l1 = 0.0;
            for (double th : params.theta) l1 += th;
            out.distortion_curve.push_back({l1, dl.distortion});
        }
        for (std::size_t g = 0; g < n; ++g) {
            const double grad = dl.gradient[g] * concrete_gradient(params.theta[g], params.temperature, u[g]);
            params.theta[g] -= updater.step(g, grad, t);
        }
        params.clamp();
    }
    out.final_mask = Mask(params.theta);
    out.config_echo = echo(cfg, sel, sampler, grouping, model.in_dim(), data.size());
    out.config_echo["reported_mask"] = "theta";
    return out;
}

Explanation optimize_relaxed(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                             const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    return optimize_relaxed(model, sel, std::span<const Datum>(&x, 1), grouping, sampler, cfg);
}

Explanation optimize_concrete(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                              const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    return optimize_concrete(model, sel, std::span<const Datum>(&x, 1), grouping, sampler, cfg);
}

// ---------------------------------------------------------------- matching pursuit

Explanation matching_pursuit(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                             const ComponentGrouping& grouping, const InfillSampler& completion,
                             const OptimConfig& cfg) {
    check_inputs(model, sel, std::span<const Datum>(&x, 1), grouping, cfg);
    const std::size_t n = grouping.size();
    if (cfg.mp_budget > n) throw InputError("matching pursuit budget exceeds the number of groups");

    const DistortionProblem problem{model, sel, x, grouping, completion};
    std::vector<double> chosen(n, 0.0);
    std::vector<std::size_t> order;

    Explanation out;
    const auto start = estimate_distortion(problem, Mask(chosen), cfg.n_samples, cfg.rng_seed);
    out.distortion_curve.push_back({0.0, start.mean});

    std::vector<double> scores(n);
    for (std::size_t round = 0; round < cfg.mp_budget; ++round) {
        parallel_for(n, [&](std::size_t g) {
            if (chosen[g] != 0.0) {
                scores[g] = std::numeric_limits<double>::infinity();
                return;
            }
            std::vector<double> trial(chosen);
            trial[g] = 1.0;
            scores[g] = estimate_distortion(problem, Mask(std::move(trial)), cfg.n_samples, cfg.rng_seed).mean;
        });
        std::size_t best = n;
        for (std::size_t g = 0; g < n; ++g) {
            if (chosen[g] != 0.0) continue;
            if (!std::isfinite(scores[g])) throw NumericalError("non-finite distortion for group " + std::to_string(g));
            if (best == n || scores[g] < scores[best]) best = g;
        }
        chosen[best] = 1.0;
        order.push_back(best);
        out.distortion_curve.push_back({static_cast<double>(order.size()), scores[best]});
    }
    out.final_mask = Mask(std::move(chosen));
    out.selected_order = std::move(order);
    out.config_echo = echo(cfg, sel, completion, grouping, model.in_dim(), 1);
    return out;
}

Explanation optimize(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                     const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    switch (cfg.method) {
        case Method::relaxed_sgd: return optimize_relaxed(model, sel, x, grouping, sampler, cfg);
        case Method::concrete: return optimize_concrete(model, sel, x, grouping, sampler, cfg);
        case Method::matching_pursuit: return matching_pursuit(model, sel, x, grouping, sampler, cfg);
    }
    throw InputError("unknown optimization method");
}

}  // namespace rdx
