#include "rdx/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rdx/errors.hpp"
#include "rdx/format.hpp"

namespace rdx {

// ---------------------------------------------------------------- selector

OutputSelector OutputSelector::index(std::size_t i) { return OutputSelector(i); }

OutputSelector OutputSelector::region(std::vector<double> weights) {
    if (weights.empty()) throw InputError("region weights are empty");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("region weights must be finite and non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InputError("region weights must sum to 1");
    return OutputSelector(std::move(weights));
}

OutputSelector OutputSelector::uniform_region(std::span<const std::size_t> indices, std::size_t out_dim) {
    if (indices.empty()) throw InputError("region is empty");
    std::vector<double> w(out_dim, 0.0);
    const double each = 1.0 / static_cast<double>(indices.size());
    for (std::size_t i : indices) {
        if (i >= out_dim) throw InputError("region index out of range");
        w[i] = each;
    }
    return region(std::move(w));
}

void OutputSelector::validate(std::size_t out_dim) const {
    if (const auto* i = std::get_if<std::size_t>(&v_)) {
        if (*i >= out_dim) {
            throw InputError("output index " + std::to_string(*i) + " out of range for " + std::to_string(out_dim) +
                             " outputs");
        }
    } else if (std::get<std::vector<double>>(v_).size() != out_dim) {
        throw InputError("region weights length does not match model output dimension");
    }
}

double OutputSelector::apply(std::span<const double> scores) const {
    if (const auto* i = std::get_if<std::size_t>(&v_)) return scores[*i];
    const auto& w = std::get<std::vector<double>>(v_);
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] != 0.0) acc += w[k] * scores[k];
    }
    return acc;
}

std::vector<double> OutputSelector::output_weights(std::size_t out_dim) const {
    if (const auto* i = std::get_if<std::size_t>(&v_)) {
        std::vector<double> w(out_dim, 0.0);
        w.at(*i) = 1.0;
        return w;
    }
    return std::get<std::vector<double>>(v_);
}

nlohmann::json OutputSelector::describe() const {
    if (const auto* i = std::get_if<std::size_t>(&v_)) return {{"kind", "index"}, {"index", *i}};
    const auto& w = std::get<std::vector<double>>(v_);
    const auto support = std::count_if(w.begin(), w.end(), [](double v) { return v > 0.0; });
    return {{"kind", "region"}, {"aggregation", "weighted_mean"}, {"support", support}};
}

// ---------------------------------------------------------------- oracle

std::vector<double> ModelOracle::backward(std::span<const double>, std::span<const double>) const {
    throw InputError("model '" + kind() + "' has no analytic gradient");
}

namespace {
void check_input(const ModelOracle& model, std::span<const double> x) {
    if (x.size() != model.in_dim()) {
        throw InputError("model '" + model.kind() + "' expects " + std::to_string(model.in_dim()) +
                         " inputs, got " + std::to_string(x.size()));
    }
}
}  // namespace

std::vector<double> evaluate(const ModelOracle& model, std::span<const double> x) {
    check_input(model, x);
    return model.forward(x);
}

double select_output(const ModelOracle& model, std::span<const double> x, const OutputSelector& sel) {
    check_input(model, x);
    sel.validate(model.out_dim());
    return sel.apply(model.forward(x));
}

std::vector<double> finite_difference_gradient(const ModelOracle& model, std::span<const double> x,
                                               const OutputSelector& sel) {
    check_input(model, x);
    sel.validate(model.out_dim());
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = std::max(1e-4, 1e-4 * std::abs(x[i]));
        probe[i] = x[i] + h;
        const double up = sel.apply(model.forward(probe));
        probe[i] = x[i] - h;
        const double down = sel.apply(model.forward(probe));
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> input_gradient(const ModelOracle& model, std::span<const double> x, const OutputSelector& sel) {
    if (!model.has_gradient()) return finite_difference_gradient(model, x, sel);
    check_input(model, x);
    sel.validate(model.out_dim());
    return model.backward(x, sel.output_weights(model.out_dim()));
}

// ---------------------------------------------------------------- reference models

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) throw InputError("matrix data does not match its shape");
}

LinearModel::LinearModel(Matrix weights, std::vector<double> bias) : weights_(std::move(weights)), bias_(std::move(bias)) {
    if (weights_.rows == 0 || weights_.cols == 0) throw InputError("linear model needs a non-empty weight matrix");
    if (bias_.size() != weights_.rows) throw InputError("linear model bias length mismatch");
}

LinearModel::LinearModel(std::vector<double> weights, double bias)
    : LinearModel(Matrix(1, weights.size(), weights), std::vector<double>{bias}) {}

std::vector<double> LinearModel::forward(std::span<const double> x) const {
    std::vector<double> y(bias_);
    for (std::size_t r = 0; r < weights_.rows; ++r) {
        const auto row = weights_.row(r);
        y[r] += std::inner_product(row.begin(), row.end(), x.begin(), 0.0);
    }
    return y;
}

std::vector<double> LinearModel::backward(std::span<const double>, std::span<const double> out_weights) const {
    std::vector<double> g(weights_.cols, 0.0);
    for (std::size_t r = 0; r < weights_.rows; ++r) {
        if (out_weights[r] == 0.0) continue;
        const auto row = weights_.row(r);
        for (std::size_t c = 0; c < weights_.cols; ++c) g[c] += out_weights[r] * row[c];
    }
    return g;
}

namespace {
double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}
}  // namespace

LogisticModel::LogisticModel(std::vector<double> weights, double bias, Activation activation)
    : weights_(std::move(weights)), bias_(bias), activation_(activation) {
    if (weights_.empty()) throw InputError("logistic model needs weights");
}

std::vector<double> LogisticModel::forward(std::span<const double> x) const {
    const double z = std::inner_product(weights_.begin(), weights_.end(), x.begin(), bias_);
    return {activation_ == Activation::logit ? z : sigmoid(z)};
}

std::vector<double> LogisticModel::backward(std::span<const double> x, std::span<const double> out_weights) const {
    double scale = out_weights[0];
    if (activation_ == Activation::probability) {
        const double p = sigmoid(std::inner_product(weights_.begin(), weights_.end(), x.begin(), bias_));
        scale *= p * (1.0 - p);
    }
    std::vector<double> g(weights_.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * weights_[i];
    return g;
}

MlpModel::MlpModel(Matrix w1, std::vector<double> b1, Matrix w2, std::vector<double> b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {
    if (w1_.rows == 0 || w1_.cols == 0 || w2_.rows == 0) throw InputError("mlp layers must be non-empty");
    if (b1_.size() != w1_.rows) throw InputError("mlp b1 length mismatch");
    if (w2_.cols != w1_.rows) throw InputError("mlp W2 columns must equal hidden width");
    if (b2_.size() != w2_.rows) throw InputError("mlp b2 length mismatch");
}

std::vector<double> MlpModel::forward(std::span<const double> x) const {
    std::vector<double> h(b1_);
    for (std::size_t r = 0; r < w1_.rows; ++r) {
        const auto row = w1_.row(r);
        h[r] = std::tanh(std::inner_product(row.begin(), row.end(), x.begin(), h[r]));
    }
    std::vector<double> y(b2_);
    for (std::size_t r = 0; r < w2_.rows; ++r) {
        const auto row = w2_.row(r);
        y[r] += std::inner_product(row.begin(), row.end(), h.begin(), 0.0);
    }
    return y;
}

std::vector<double> MlpModel::backward(std::span<const double> x, std::span<const double> out_weights) const {
    // dL/dh_j = sum_k v_k W2[k][j]; dL/da_j = dL/dh_j * (1 - h_j^2)
    std::vector<double> delta(w1_.rows, 0.0);
    for (std::size_t k = 0; k < w2_.rows; ++k) {
        if (out_weights[k] == 0.0) continue;
        const auto row = w2_.row(k);
        for (std::size_t j = 0; j < w1_.rows; ++j) delta[j] += out_weights[k] * row[j];
    }
    std::vector<double> g(w1_.cols, 0.0);
    for (std::size_t j = 0; j < w1_.rows; ++j) {
        const auto row = w1_.row(j);
        const double h = std::tanh(std::inner_product(row.begin(), row.end(), x.begin(), b1_[j]));
        const double d = delta[j] * (1.0 - h * h);
        for (std::size_t i = 0; i < w1_.cols; ++i) g[i] += d * row[i];
    }
    return g;
}

// ---------------------------------------------------------------- fixture parsing

namespace {

struct Row {
    int line;
    std::vector<double> values;
};

std::size_t parse_dim(std::string_view tok, int line, const char* what) {
    std::size_t v = 0;
    for (char c : tok) {
        if (c < '0' || c > '9') throw ConfigError(std::string("invalid ") + what + " '" + std::string(tok) + "'", line);
        v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    if (tok.empty() || v == 0) throw ConfigError(std::string(what) + " must be a positive integer", line);
    return v;
}

class RowReader {
public:
    RowReader(std::vector<Row> rows, int header_line) : rows_(std::move(rows)), last_line_(header_line) {}

    const Row& next(std::size_t expected_len, const char* what) {
        if (pos_ >= rows_.size()) throw ConfigError(std::string("missing ") + what + " row", last_line_);
        const Row& r = rows_[pos_++];
        last_line_ = r.line;
        if (expected_len != 0 && r.values.size() != expected_len) {
            throw ConfigError(std::string(what) + " row has " + std::to_string(r.values.size()) + " values, expected " +
                                  std::to_string(expected_len),
                              r.line);
        }
        return r;
    }

    void finish() const {
        if (pos_ != rows_.size()) throw ConfigError("unexpected extra row", rows_[pos_].line);
    }

private:
    std::vector<Row> rows_;
    std::size_t pos_ = 0;
    int last_line_;
};

Matrix read_matrix(RowReader& reader, std::size_t rows, std::size_t cols, const char* what) {
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = reader.next(cols, what);
        data.insert(data.end(), row.values.begin(), row.values.end());
    }
    return Matrix(rows, cols, std::move(data));
}

}  // namespace

std::unique_ptr<ModelOracle> parse_model(std::string_view text) {
    std::vector<Row> rows;
    std::vector<std::string_view> header;
    int header_line = 0;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(text.substr(pos, eol - pos));
        ++line_no;
        pos = eol + 1;
        if (line.empty() || line.front() == '#') continue;
        auto toks = split_ws(line);
        if (header.empty()) {
            if (toks.size() != 4 || toks[0] != "MODEL") {
                throw ConfigError("expected header 'MODEL <kind> <in_dim> <out_dim>'", line_no);
            }
            header = toks;
            header_line = line_no;
            continue;
        }
        Row row{line_no, {}};
        for (auto tok : toks) {
            auto v = parse_double(tok);
            if (!v || !std::isfinite(*v)) throw ConfigError("invalid number '" + std::string(tok) + "'", line_no);
            row.values.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (header.empty()) throw ConfigError("empty model file");

    const std::string kind(header[1]);
    const std::size_t in_dim = parse_dim(header[2], header_line, "in_dim");
    const std::size_t out_dim = parse_dim(header[3], header_line, "out_dim");
    RowReader reader(std::move(rows), header_line);

    std::unique_ptr<ModelOracle> model;
    if (kind == "linear") {
        Matrix w = read_matrix(reader, out_dim, in_dim, "weight");
        auto b = reader.next(out_dim, "bias").values;
        model = std::make_unique<LinearModel>(std::move(w), std::move(b));
    } else if (kind == "logistic" || kind == "logistic-prob") {
        if (out_dim != 1) throw ConfigError("logistic models have out_dim 1", header_line);
        auto w = reader.next(in_dim, "weight").values;
        const double b = reader.next(1, "bias").values[0];
        model = std::make_unique<LogisticModel>(std::move(w), b,
                                                kind == "logistic" ? LogisticModel::Activation::logit
                                                                   : LogisticModel::Activation::probability);
    } else if (kind == "mlp") {
        auto b1 = reader.next(0, "b1").values;
        if (b1.empty()) throw ConfigError("mlp b1 row is empty", header_line);
        Matrix w1 = read_matrix(reader, b1.size(), in_dim, "W1");
        auto b2 = reader.next(out_dim, "b2").values;
        Matrix w2 = read_matrix(reader, out_dim, b1.size(), "W2");
        model = std::make_unique<MlpModel>(std::move(w1), std::move(b1), std::move(w2), std::move(b2));
    } else {
        throw ConfigError("unknown model kind '" + kind + "'", header_line);
    }
    reader.finish();
    return model;
}

std::unique_ptr<ModelOracle> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

}  // namespace rdx
