#pragma once
// Black-box model interface and the reference models used as explanation
// targets and test oracles.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rdx/core.hpp"

namespace rdx {

// Picks the scalar under explanation: a single output coordinate, or a
// weighted mean over an output region.
class OutputSelector {
public:
    static OutputSelector index(std::size_t i);
    // Weights must be non-negative and sum to 1 within 1e-9.
    static OutputSelector region(std::vector<double> weights);
    // Uniform weights over the given output indices.
    static OutputSelector uniform_region(std::span<const std::size_t> indices, std::size_t out_dim);

    bool is_index() const noexcept { return std::holds_alternative<std::size_t>(v_); }

    // Throws InputError if the selector does not fit a model with out_dim outputs.
    void validate(std::size_t out_dim) const;

    double apply(std::span<const double> scores) const;

    // One-hot for the index form, the region weights otherwise.
    std::vector<double> output_weights(std::size_t out_dim) const;

    nlohmann::json describe() const;

private:
    explicit OutputSelector(std::variant<std::size_t, std::vector<double>> v) : v_(std::move(v)) {}
    std::variant<std::size_t, std::vector<double>> v_;
};

// Models are immutable after construction and must tolerate concurrent calls.
class ModelOracle {
public:
    virtual ~ModelOracle() = default;

    virtual std::string kind() const = 0;
    virtual std::size_t in_dim() const = 0;
    virtual std::size_t out_dim() const = 0;
    virtual bool has_gradient() const { return false; }

    // Unchecked forward pass; x.size() == in_dim().
    virtual std::vector<double> forward(std::span<const double> x) const = 0;

    // Gradient of sum_k out_weights[k] * forward(x)[k] with respect to x.
    // Only valid when has_gradient().
    virtual std::vector<double> backward(std::span<const double> x, std::span<const double> out_weights) const;
};

std::vector<double> evaluate(const ModelOracle& model, std::span<const double> x);
inline std::vector<double> evaluate(const ModelOracle& model, const Datum& x) { return evaluate(model, x.values()); }

double select_output(const ModelOracle& model, std::span<const double> x, const OutputSelector& sel);

// Analytic when the model provides it, central finite differences otherwise.
std::vector<double> input_gradient(const ModelOracle& model, std::span<const double> x, const OutputSelector& sel);

// Central differences with step max(1e-4, 1e-4 * |x_i|) per component.
std::vector<double> finite_difference_gradient(const ModelOracle& model, std::span<const double> x,
                                               const OutputSelector& sel);

// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// y = W x + b
class LinearModel final : public ModelOracle {
public:
    LinearModel(Matrix weights, std::vector<double> bias);
    // Single-output convenience.
    LinearModel(std::vector<double> weights, double bias);

    std::string kind() const override { return "linear"; }
    std::size_t in_dim() const override { return weights_.cols; }
    std::size_t out_dim() const override { return weights_.rows; }
    bool has_gradient() const override { return true; }
    std::vector<double> forward(std::span<const double> x) const override;
    std::vector<double> backward(std::span<const double> x, std::span<const double> out_weights) const override;

    const Matrix& weights() const noexcept { return weights_; }
    const std::vector<double>& bias() const noexcept { return bias_; }

private:
    Matrix weights_;
    std::vector<double> bias_;
};

// Single-output logistic regression. Reports the logit w.x + b by default;
// Activation::probability reports sigmoid of it.
class LogisticModel final : public ModelOracle {
public:
    enum class Activation { logit, probability };

    LogisticModel(std::vector<double> weights, double bias, Activation activation = Activation::logit);

    std::string kind() const override { return activation_ == Activation::logit ? "logistic" : "logistic-prob"; }
    std::size_t in_dim() const override { return weights_.size(); }
    std::size_t out_dim() const override { return 1; }
    bool has_gradient() const override { return true; }
    std::vector<double> forward(std::span<const double> x) const override;
    std::vector<double> backward(std::span<const double> x, std::span<const double> out_weights) const override;

private:
    std::vector<double> weights_;
    double bias_;
    Activation activation_;
};

// y = W2 tanh(W1 x + b1) + b2
class MlpModel final : public ModelOracle {
public:
    MlpModel(Matrix w1, std::vector<double> b1, Matrix w2, std::vector<double> b2);

    std::string kind() const override { return "mlp"; }
    std::size_t in_dim() const override { return w1_.cols; }
    std::size_t out_dim() const override { return w2_.rows; }
    std::size_t hidden_dim() const noexcept { return w1_.rows; }
    bool has_gradient() const override { return true; }
    std::vector<double> forward(std::span<const double> x) const override;
    std::vector<double> backward(std::span<const double> x, std::span<const double> out_weights) const override;

    const Matrix& w1() const noexcept { return w1_; }
    const std::vector<double>& b1() const noexcept { return b1_; }
    const Matrix& w2() const noexcept { return w2_; }
    const std::vector<double>& b2() const noexcept { return b2_; }

private:
    Matrix w1_;
    std::vector<double> b1_;
    Matrix w2_;
    std::vector<double> b2_;
};

// Model fixture text format:
//
//   MODEL <kind> <in_dim> <out_dim>
//   <weight rows, whitespace separated>
//
// linear:         out_dim rows of in_dim weights, then one bias row (out_dim values)
// logistic,
// logistic-prob:  one row of in_dim weights, then one bias row (1 value)
// mlp:            one b1 row (hidden values, fixes the hidden width),
//                 hidden rows of in_dim W1 weights,
//                 one b2 row (out_dim values),
//                 out_dim rows of hidden W2 weights
//
// Blank lines and lines starting with '#' are ignored. Numbers are parsed as
// correctly rounded binary64. Errors throw ConfigError with a line number.
std::unique_ptr<ModelOracle> parse_model(std::string_view text);
std::unique_ptr<ModelOracle> load_model(const std::string& path);

}  // namespace rdx
