#include "rdx/masking.hpp"

#include <cmath>

#include "rdx/errors.hpp"
#include "rdx/parallel.hpp"

namespace rdx {

// ---------------------------------------------------------------- samplers

GaussianSampler::GaussianSampler(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
    if (mean_.size() != stddev_.size()) throw InputError("gaussian sampler mean/stddev length mismatch");
    for (std::size_t i = 0; i < stddev_.size(); ++i) {
        if (!std::isfinite(mean_[i]) || !std::isfinite(stddev_[i]) || stddev_[i] < 0.0) {
            throw InputError("gaussian sampler needs finite mean and stddev >= 0");
        }
    }
}

GaussianSampler GaussianSampler::fit(std::span<const Datum> data) {
    if (data.empty()) throw InputError("cannot fit a sampler to an empty dataset");
    const std::size_t dim = data.front().dim();
    std::vector<double> mean(dim, 0.0);
    std::vector<double> var(dim, 0.0);
    for (const auto& d : data) {
        if (d.dim() != dim) throw InputError("dataset dimensions differ");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += d[i];
    }
    const double n = static_cast<double>(data.size());
    for (double& m : mean) m /= n;
    for (const auto& d : data) {
        for (std::size_t i = 0; i < dim; ++i) var[i] += (d[i] - mean[i]) * (d[i] - mean[i]);
    }
    for (double& v : var) v = std::sqrt(v / n);
    return GaussianSampler(std::move(mean), std::move(var));
}

bool GaussianSampler::deterministic() const {
    for (double s : stddev_) {
        if (s != 0.0) return false;
    }
    return true;
}

std::vector<double> GaussianSampler::sample(std::span<const double> x, std::span<const double>, Rng& rng) const {
    if (x.size() != mean_.size()) throw InputError("gaussian sampler dimension mismatch");
    std::vector<double> g(mean_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = mean_[i] + stddev_[i] * standard_normal(rng);
    return g;
}

nlohmann::json GaussianSampler::describe() const {
    return {{"kind", kind()}, {"dim", mean_.size()}};
}

ConstantSampler::ConstantSampler(std::vector<double> baseline) : baseline_(std::move(baseline)) {
    for (double v : baseline_) {
        if (!std::isfinite(v)) throw InputError("constant baseline must be finite");
    }
}

std::vector<double> ConstantSampler::sample(std::span<const double> x, std::span<const double>, Rng&) const {
    if (x.size() != baseline_.size()) throw InputError("constant sampler dimension mismatch");
    return baseline_;
}

nlohmann::json ConstantSampler::describe() const { return {{"kind", kind()}, {"baseline", baseline_}}; }

ConditionalSampler::ConditionalSampler(Oracle oracle, bool deterministic, std::string name)
    : oracle_(std::move(oracle)), deterministic_(deterministic), name_(std::move(name)) {
    if (!oracle_) throw InputError("conditional sampler needs an infill oracle");
}

std::vector<double> ConditionalSampler::sample(std::span<const double> x, std::span<const double> s,
                                               Rng& rng) const {
    auto g = oracle_(x, s, rng);
    if (g.size() != x.size()) throw InputError("infill oracle returned a vector of the wrong length");
    return g;
}

// ---------------------------------------------------------------- blend / draws

std::vector<double> blend(std::span<const double> x, std::span<const double> s, std::span<const double> g) {
    if (x.size() != s.size() || x.size() != g.size()) throw InputError("blend inputs differ in length");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!(s[i] >= 0.0 && s[i] <= 1.0)) throw InputError("blend weights must lie in [0,1]");
        z[i] = x[i] * s[i] + g[i] * (1.0 - s[i]);
    }
    return z;
}

std::vector<double> sample_infill(const InfillSampler& sampler, std::span<const double> x,
                                  std::span<const double> s_expanded, std::uint64_t rng_seed) {
    Rng rng = make_rng(rng_seed);
    return sampler.sample(x, s_expanded, rng);
}

void DistortionProblem::validate() const {
    if (x.dim() != model.in_dim()) {
        throw InputError("datum has " + std::to_string(x.dim()) + " components but model expects " +
                         std::to_string(model.in_dim()));
    }
    selector.validate(model.out_dim());
    grouping.check_dim(x.dim());
}

namespace {

std::size_t effective_draws(const InfillSampler& sampler, std::size_t n_samples) {
    if (n_samples == 0) throw InputError("n_samples must be at least 1");
    return sampler.deterministic() ? 1 : n_samples;
}

DistortionEstimate summarize(const std::vector<double>& per_draw, std::size_t n_requested) {
    DistortionEstimate est;
    est.n_samples = n_requested;
    const double n = static_cast<double>(per_draw.size());
    double sum = 0.0;
    for (double d : per_draw) sum += d;
    est.mean = sum / n;
    if (per_draw.size() > 1) {
        double ss = 0.0;
        for (double d : per_draw) ss += (d - est.mean) * (d - est.mean);
        est.std_err = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return est;
}

}  // namespace

DistortionEstimate estimate_distortion(const DistortionProblem& p, const Mask& mask, std::size_t n_samples,
                                       std::uint64_t rng_seed) {
    p.validate();
    const std::size_t draws = effective_draws(p.sampler, n_samples);
    const auto s = expand_mask(mask, p.grouping, p.x.dim());
    const double reference = select_output(p.model, p.x.values(), p.selector);

    std::vector<double> per_draw(draws);
    parallel_for(draws, [&](std::size_t k) {
        Rng rng = make_rng(rng_seed, k);
        const auto g = p.sampler.sample(p.x.values(), s, rng);
        const auto z = blend(p.x.values(), s, g);
        const double diff = reference - p.selector.apply(p.model.forward(z));
        per_draw[k] = 0.5 * diff * diff;
    });
    return summarize(per_draw, n_samples);
}

DistortionEstimate estimate_distortion(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                                       const Mask& mask, const ComponentGrouping& grouping,
                                       const InfillSampler& sampler, std::size_t n_samples, std::uint64_t rng_seed) {
    return estimate_distortion(DistortionProblem{model, sel, x, grouping, sampler}, mask, n_samples, rng_seed);
}

double loss(double distortion_mean, const Mask& mask, double lambda) {
    if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
    return distortion_mean + lambda * sparsity(mask).l1;
}

LossGradient loss_and_gradient(const DistortionProblem& p, const Mask& mask, double lambda, std::size_t n_samples,
                               std::uint64_t rng_seed) {
    p.validate();
    if (!(lambda >= 0.0)) throw InputError("lambda must be non-negative");
    const std::size_t draws = effective_draws(p.sampler, n_samples);
    const std::size_t n_groups = p.grouping.size();
    const auto s = expand_mask(mask, p.grouping, p.x.dim());
    const auto xv = p.x.values();
    const double reference = select_output(p.model, xv, p.selector);

    std::vector<double> per_draw_distortion(draws);
    std::vector<std::vector<double>> per_draw_grad(draws);
    parallel_for(draws, [&](std::size_t k) {
        Rng rng = make_rng(rng_seed, k);
        const auto g = p.sampler.sample(xv, s, rng);
        const auto z = blend(xv, s, g);
        const double residual = p.selector.apply(p.model.forward(z)) - reference;
        per_draw_distortion[k] = 0.5 * residual * residual;

        auto& gk = per_draw_grad[k];
        gk.assign(n_groups, 0.0);
        if (residual == 0.0) return;
        const auto dphi = input_gradient(p.model, z, p.selector);
        for (std::size_t grp = 0; grp < n_groups; ++grp) {
            double acc = 0.0;
            for (std::size_t j : p.grouping.group(grp)) acc += dphi[j] * (xv[j] - g[j]);
            gk[grp] = residual * acc;
        }
    });

    LossGradient out;
    out.distortion = summarize(per_draw_distortion, n_samples);
    out.gradient.assign(n_groups, 0.0);
    for (const auto& gk : per_draw_grad) {
        for (std::size_t grp = 0; grp < n_groups; ++grp) out.gradient[grp] += gk[grp];
    }
    const double inv = 1.0 / static_cast<double>(draws);
    for (double& v : out.gradient) v = v * inv + lambda;
    return out;
}

std::vector<double> loss_gradient(const ModelOracle& model, const OutputSelector& sel, const Datum& x,
                                  const Mask& mask, const ComponentGrouping& grouping, const InfillSampler& sampler,
                                  double lambda, std::size_t n_samples, std::uint64_t rng_seed) {
    return loss_and_gradient(DistortionProblem{model, sel, x, grouping, sampler}, mask, lambda, n_samples, rng_seed)
        .gradient;
}

}  // namespace rdx
