#include "rdx/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rdx/errors.hpp"
#include "rdx/format.hpp"

namespace rdx {

Datum::Datum(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InputError("datum must have at least one component");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw InputError("datum component " + std::to_string(i) + " is not finite");
        }
    }
}

ComponentGrouping::ComponentGrouping(std::vector<std::vector<std::size_t>> groups)
    : groups_(std::move(groups)) {
    std::vector<std::size_t> all;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
        if (groups_[g].empty()) throw ConfigError("group " + std::to_string(g) + " is empty");
        all.insert(all.end(), groups_[g].begin(), groups_[g].end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
        throw ConfigError("groups are not disjoint");
    }
    index_bound_ = all.empty() ? 0 : all.back() + 1;
}

ComponentGrouping ComponentGrouping::trivial(std::size_t dim) {
    std::vector<std::vector<std::size_t>> groups(dim);
    for (std::size_t i = 0; i < dim; ++i) groups[i] = {i};
    return ComponentGrouping(std::move(groups));
}

void ComponentGrouping::check_dim(std::size_t dim) const {
    if (index_bound_ > dim) {
        throw ConfigError("grouping references component " + std::to_string(index_bound_ - 1) +
                          " but datum has " + std::to_string(dim) + " components");
    }
}

Mask::Mask(std::vector<double> weights) : weights_(std::move(weights)) {
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double w = weights_[i];
        if (!(w >= 0.0 && w <= 1.0)) {
            throw InputError("mask weight " + std::to_string(i) + " outside [0,1]");
        }
    }
}

Mask Mask::filled(std::size_t n, double value) { return Mask(std::vector<double>(n, value)); }

BernoulliParams::BernoulliParams(std::size_t n_groups, double initial, double temp)
    : theta(n_groups, initial), temperature(temp) {
    if (!(temperature > 0.0)) throw InputError("temperature must be positive");
    clamp();
}

void BernoulliParams::clamp() noexcept {
    for (double& t : theta) t = std::clamp(t, kThetaEps, 1.0 - kThetaEps);
}

std::vector<double> expand_mask(const Mask& mask, const ComponentGrouping& grouping, std::size_t dim) {
    grouping.check_dim(dim);
    if (mask.size() != grouping.size()) {
        throw InputError("mask has " + std::to_string(mask.size()) + " weights but grouping has " +
                         std::to_string(grouping.size()) + " groups");
    }
    std::vector<double> out(dim, 1.0);
    for (std::size_t g = 0; g < grouping.size(); ++g) {
        for (std::size_t j : grouping.group(g)) out[j] = mask[g];
    }
    return out;
}

Mask binarize(const Mask& mask, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw InputError("threshold must lie in (0,1)");
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] >= threshold ? 1.0 : 0.0;
    return Mask(std::move(out));
}

Sparsity sparsity(const Mask& mask) noexcept {
    Sparsity s;
    for (double w : mask.weights()) {
        s.l1 += w;
        if (w > 0.0) ++s.l0;
    }
    return s;
}

nlohmann::json to_json(const Explanation& e) {
    nlohmann::json doc = nlohmann::json::object();
    doc["mask"] = std::vector<double>(e.final_mask.weights().begin(), e.final_mask.weights().end());
    auto curve = nlohmann::json::array();
    for (const auto& p : e.distortion_curve) curve.push_back({p.sparsity, p.distortion});
    doc["curve"] = std::move(curve);
    if (e.selected_order) {
        doc["order"] = *e.selected_order;
    } else {
        doc["order"] = nullptr;
    }
    doc["config"] = e.config_echo;
    return doc;
}

Explanation explanation_from_json(const nlohmann::json& doc) {
    Explanation e;
    e.final_mask = Mask(doc.at("mask").get<std::vector<double>>());
    for (const auto& p : doc.at("curve")) {
        e.distortion_curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (!doc.at("order").is_null()) e.selected_order = doc.at("order").get<std::vector<std::size_t>>();
    e.config_echo = doc.at("config");
    return e;
}

std::string mask_to_csv(const Mask& mask) {
    std::string out = "weight\n";
    for (double w : mask.weights()) {
        out += format_double(w);
        out += '\n';
    }
    return out;
}

}  // namespace rdx
