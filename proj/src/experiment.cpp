#include "rdx/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "rdx/audio.hpp"
#include "rdx/errors.hpp"
#include "rdx/format.hpp"
#include "rdx/masking.hpp"
#include "rdx/models.hpp"
#include "rdx/radiomap.hpp"
#include "rdx/rng.hpp"

namespace rdx::cli {

std::string to_string(Task t) {
    switch (t) {
        case Task::audio_per_freq: return "audio_per_freq";
        case Task::audio_mag_vs_phase: return "audio_mag_vs_phase";
        case Task::radio_explain: return "radio_explain";
        case Task::distortion_probe: return "distortion_probe";
    }
    return "?";
}

namespace {

// ---------------------------------------------------------------- raw file

struct Entry {
    std::string value;
    int line = 0;
};

using Section = std::map<std::string, Entry>;

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"experiment", {"task", "seed", "out"}},
        {"model", {"kind", "path", "weights", "bias", "output", "channel", "gain", "kernel_radius", "kernel_prior"}},
        {"sampler", {"kind", "value", "mean", "std"}},
        {"data", {"x", "mask"}},
        {"optim",
         {"method", "steps", "step_size", "lambda", "temperature", "n_samples", "budget", "update", "beta1", "beta2",
          "adam_eps", "initial_value"}},
        {"audio", {"n_per_class", "class", "index", "sample_rate"}},
        {"radio", {"scene", "scene_seed", "p_inpaint", "n_measurements", "n_removed", "n_buildings"}},
    };
    return s;
}

std::map<std::string, Section> read_sections(std::string_view text) {
    std::map<std::string, Section> out;
    std::string current = "experiment";  // keys before any header
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().contains(current)) throw ConfigError("unknown section [" + current + "]", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key = value", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError("empty key", line_no);
        if (!schema().at(current).contains(key)) {
            throw ConfigError("unknown key '" + key + "' in [" + current + "]", line_no);
        }
        if (value.empty()) throw ConfigError("empty value for '" + key + "'", line_no);
        auto [it, fresh] = out[current].emplace(key, Entry{value, line_no});
        if (!fresh) throw ConfigError("duplicate key '" + key + "' (first set on line " +
                                          std::to_string(it->second.line) + ")", line_no);
    }
    return out;
}

// ---------------------------------------------------------------- typed values

double to_double(const std::string& key, const Entry& e) {
    const auto v = parse_double(e.value);
    if (!v || !std::isfinite(*v)) throw ConfigError(key + " must be a finite number, got '" + e.value + "'", e.line);
    return *v;
}

std::uint64_t to_u64(const std::string& key, const Entry& e) {
    std::uint64_t v = 0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last) {
        throw ConfigError(key + " must be a non-negative integer, got '" + e.value + "'", e.line);
    }
    return v;
}

std::size_t to_positive(const std::string& key, const Entry& e) {
    // steps may be written as 1e6
    const auto d = parse_double(e.value);
    if (!d || !(*d >= 1.0) || *d != std::floor(*d) || *d > 9.0e15) {
        throw ConfigError(key + " must be a positive integer, got '" + e.value + "'", e.line);
    }
    return static_cast<std::size_t>(*d);
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
    std::string s = e.value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::vector<double> out;
    for (auto tok : split_ws(s)) {
        const auto v = parse_double(tok);
        if (!v || !std::isfinite(*v)) {
            throw ConfigError(key + " has a non-numeric entry '" + std::string(tok) + "'", e.line);
        }
        out.push_back(*v);
    }
    return out;
}

std::string to_choice(const std::string& key, const Entry& e, std::initializer_list<const char*> choices) {
    std::string all;
    for (const char* c : choices) {
        if (e.value == c) return e.value;
        all += all.empty() ? c : std::string(" | ") + c;
    }
    throw ConfigError(key + " must be one of " + all + ", got '" + e.value + "'", e.line);
}

const Entry* find(const std::map<std::string, Section>& sections, const std::string& section, const std::string& key) {
    auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

Task parse_task(const Entry& e) {
    const auto v = to_choice("task", e, {"audio_per_freq", "audio_mag_vs_phase", "radio_explain", "distortion_probe"});
    if (v == "audio_per_freq") return Task::audio_per_freq;
    if (v == "audio_mag_vs_phase") return Task::audio_mag_vs_phase;
    if (v == "radio_explain") return Task::radio_explain;
    return Task::distortion_probe;
}

void apply_task_defaults(ExperimentConfig& cfg) {
    switch (cfg.task) {
        case Task::audio_per_freq:
            cfg.optim = OptimConfig::per_frequency_defaults();
            cfg.model.kind = "template";
            cfg.model.channel = "both";
            cfg.sampler.kind = "fit";
            break;
        case Task::audio_mag_vs_phase:
            cfg.optim = OptimConfig::group_query_defaults();
            cfg.model.kind = "template";
            cfg.model.channel = "magnitude";
            cfg.sampler.kind = "fit";
            break;
        case Task::radio_explain:
            cfg.optim = OptimConfig{};
            cfg.optim.method = Method::matching_pursuit;
            cfg.optim.mp_budget = 5;
            cfg.model.kind = "radio";
            cfg.sampler.kind = "radio";
            break;
        case Task::distortion_probe:
            cfg.optim = OptimConfig{};
            cfg.optim.n_samples = 100'000;
            cfg.model.kind = "linear";
            cfg.sampler.kind = "gaussian";
            break;
    }
}

// ---------------------------------------------------------------- resolution

struct Resolved {
    std::unique_ptr<ModelOracle> model;
    std::unique_ptr<InfillSampler> sampler;
    std::optional<OutputSelector> selector;
    std::vector<Datum> data;  // probe / per_freq: one datum; class query: the class
    ComponentGrouping grouping;
    std::vector<audio::ToneSample> tones;
    std::optional<radio::RadioScene> scene;
    radio::PhiParams phi;
    OptimConfig optim;
};

std::unique_ptr<InfillSampler> make_plain_sampler(const SamplerSpec& spec, std::size_t dim) {
    if (spec.kind == "constant") {
        auto v = spec.value.empty() ? std::vector<double>(dim, 0.0) : spec.value;
        if (v.size() != dim) throw ConfigError("sampler value has " + std::to_string(v.size()) + " entries, expected " +
                                               std::to_string(dim));
        return std::make_unique<ConstantSampler>(std::move(v));
    }
    if (spec.kind == "gaussian") {
        auto m = spec.mean.empty() ? std::vector<double>(dim, 0.0) : spec.mean;
        auto s = spec.stddev.empty() ? std::vector<double>(dim, 1.0) : spec.stddev;
        if (m.size() != dim || s.size() != dim) {
            throw ConfigError("sampler mean/std must have " + std::to_string(dim) + " entries");
        }
        return std::make_unique<GaussianSampler>(std::move(m), std::move(s));
    }
    throw ConfigError("sampler kind '" + spec.kind + "' is not available for this task");
}

Resolved resolve_probe(const ExperimentConfig& cfg) {
    Resolved r;
    const auto& m = cfg.model;
    if (m.kind == "file") {
        if (m.path.empty()) throw ConfigError("model kind file needs a path");
        r.model = load_model(m.path);
    } else if (m.kind == "linear" || m.kind == "logistic" || m.kind == "logistic-prob") {
        if (m.weights.empty()) throw ConfigError("missing required field 'weights' in [model]");
        if (m.kind == "linear") {
            r.model = std::make_unique<LinearModel>(m.weights, m.bias);
        } else {
            r.model = std::make_unique<LogisticModel>(
                m.weights, m.bias, m.kind == "logistic" ? LogisticModel::Activation::logit
                                                        : LogisticModel::Activation::probability);
        }
    } else {
        throw ConfigError("model kind '" + m.kind + "' is not available for distortion_probe");
    }
    if (cfg.x.empty()) throw ConfigError("missing required field 'x' in [data]");
    if (cfg.x.size() != r.model->in_dim()) {
        throw ConfigError("x has " + std::to_string(cfg.x.size()) + " entries, model expects " +
                          std::to_string(r.model->in_dim()));
    }
    if (!cfg.probe_mask.empty() && cfg.probe_mask.size() != cfg.x.size()) {
        throw ConfigError("mask must have one entry per component of x");
    }
    for (double w : cfg.probe_mask) {
        if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("mask weights must lie in [0,1]");
    }
    if (m.output >= r.model->out_dim()) throw ConfigError("output index out of range for the model");
    r.selector = OutputSelector::index(m.output);
    r.data.emplace_back(cfg.x);
    r.grouping = ComponentGrouping::trivial(cfg.x.size());
    r.sampler = make_plain_sampler(cfg.sampler, cfg.x.size());
    return r;
}

Resolved resolve_audio(const ExperimentConfig& cfg) {
    Resolved r;
    if (cfg.model.kind != "template") throw ConfigError("audio tasks use the template model");
    if (cfg.task == Task::audio_mag_vs_phase && cfg.optim.method == Method::matching_pursuit) {
        throw ConfigError("audio_mag_vs_phase supports methods concrete and relaxed_sgd");
    }
    if (cfg.audio.sample_rate < 16000.0) throw ConfigError("sample_rate must be at least 16000");
    const auto taxonomy = audio::default_taxonomy();
    if (cfg.audio.target_class >= taxonomy.size()) throw ConfigError("class must be below " +
                                                                     std::to_string(taxonomy.size()));
    if (cfg.audio.index >= cfg.audio.n_per_class) throw ConfigError("index must be below n_per_class");
    r.tones = audio::make_tone_dataset(taxonomy, cfg.audio.n_per_class, derive_seed(cfg.rng_seed, 1),
                                       cfg.audio.sample_rate);
    const auto channel = cfg.model.channel == "magnitude" ? audio::Channel::magnitude
                         : cfg.model.channel == "phase"   ? audio::Channel::phase
                                                          : audio::Channel::both;
    if (!(cfg.model.gain > 0.0)) throw ConfigError("gain must be positive");
    r.model = std::make_unique<LinearModel>(
        audio::make_template_classifier(r.tones, taxonomy.size(), channel, cfg.model.gain));
    const std::size_t out = cfg.model.output_set ? cfg.model.output : cfg.audio.target_class;
    if (out >= r.model->out_dim()) throw ConfigError("output index out of range for the model");
    r.selector = OutputSelector::index(out);

    std::vector<Datum> all;
    std::size_t seen = 0;
    for (const auto& t : r.tones) {
        all.push_back(t.features);
        if (static_cast<std::size_t>(t.spec.class_label) != cfg.audio.target_class) continue;
        if (cfg.task == Task::audio_mag_vs_phase || seen == cfg.audio.index) r.data.push_back(t.features);
        ++seen;
    }
    if (cfg.sampler.kind == "fit") {
        r.sampler = std::make_unique<GaussianSampler>(GaussianSampler::fit(all));
    } else {
        r.sampler = make_plain_sampler(cfg.sampler, 2 * audio::kBins);
    }
    const auto fv = audio::build_feature_vector(audio::unpack_feature_vector(r.data.front()));
    r.grouping = cfg.task == Task::audio_per_freq ? fv.per_component : fv.magnitude_phase;
    return r;
}

Resolved resolve_radio(const ExperimentConfig& cfg) {
    Resolved r;
    if (cfg.model.kind != "radio") throw ConfigError("radio_explain uses the radio model");
    if (cfg.sampler.kind != "radio") throw ConfigError("radio_explain uses the radio completion sampler");
    if (cfg.optim.method != Method::matching_pursuit) throw ConfigError("radio_explain uses matching_pursuit");
    if (!(cfg.radio.p_inpaint >= 0.0 && cfg.radio.p_inpaint <= 1.0)) throw ConfigError("p_inpaint must lie in [0,1]");
    if (!(cfg.model.kernel_radius > 0.0)) throw ConfigError("kernel_radius must be positive");
    if (!(cfg.model.kernel_prior > 0.0)) throw ConfigError("kernel_prior must be positive");
    if (cfg.radio.scene == "shadow") {
        r.scene = radio::shadow_fixture();
    } else {
        radio::SceneParams p;
        p.city.n_buildings = cfg.radio.n_buildings;
        p.n_removed = cfg.radio.n_removed;
        p.n_measurements = cfg.radio.n_measurements;
        r.scene = radio::generate_scene(cfg.radio.scene_seed.value_or(derive_seed(cfg.rng_seed, 2)), p);
    }
    r.phi.kernel_radius = cfg.model.kernel_radius;
    r.phi.kernel_prior = cfg.model.kernel_prior;
    const radio::SceneEncoding enc(*r.scene);
    if (cfg.optim.mp_budget > enc.dim()) {
        throw ConfigError("budget " + std::to_string(cfg.optim.mp_budget) + " exceeds the " +
                          std::to_string(enc.dim()) + " buildings and measurements of the scene");
    }
    return r;
}

Resolved resolve(const ExperimentConfig& cfg) {
    cfg.optim.validate();
    Resolved r;
    try {
        switch (cfg.task) {
            case Task::distortion_probe: r = resolve_probe(cfg); break;
            case Task::audio_per_freq:
            case Task::audio_mag_vs_phase: r = resolve_audio(cfg); break;
            case Task::radio_explain: r = resolve_radio(cfg); break;
        }
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    } catch (const GenerationError& e) {
        throw ConfigError(e.what());
    }
    r.optim = cfg.optim;
    r.optim.rng_seed = cfg.rng_seed;
    return r;
}

// ---------------------------------------------------------------- output

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
    if (!f) throw std::runtime_error("write failed for " + p.string());
}

std::string group_label(const radio::SceneEncoding& enc, std::size_t g) {
    if (g < enc.n_buildings()) return "b" + std::to_string(enc.building_ids()[g]);
    return "m" + std::to_string(g - enc.n_buildings());
}

}  // namespace

// ---------------------------------------------------------------- public

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["task"] = to_string(task);
    j["seed"] = rng_seed;
    OptimConfig o = optim;
    o.rng_seed = rng_seed;
    j["optim"] = o.to_json();
    nlohmann::json m{{"kind", model.kind}};
    if (model.kind == "file") m["path"] = model.path;
    if (!model.weights.empty()) {
        m["weights"] = model.weights;
        m["bias"] = model.bias;
    }
    if (model.kind == "template") {
        m["channel"] = model.channel;
        m["gain"] = model.gain;
    }
    if (model.kind == "radio") {
        m["kernel_radius"] = model.kernel_radius;
        m["kernel_prior"] = model.kernel_prior;
    } else if (model.output_set || model.kind != "template") {
        m["output"] = model.output;
    }
    j["model"] = m;
    nlohmann::json s{{"kind", sampler.kind}};
    if (!sampler.value.empty()) s["value"] = sampler.value;
    if (!sampler.mean.empty()) s["mean"] = sampler.mean;
    if (!sampler.stddev.empty()) s["std"] = sampler.stddev;
    j["sampler"] = s;
    switch (task) {
        case Task::distortion_probe:
            j["data"] = {{"x", x}, {"mask", probe_mask}};
            break;
        case Task::audio_per_freq:
        case Task::audio_mag_vs_phase:
            j["audio"] = {{"n_per_class", audio.n_per_class},
                          {"class", audio.target_class},
                          {"index", audio.index},
                          {"sample_rate", audio.sample_rate}};
            break;
        case Task::radio_explain: {
            nlohmann::json r{{"scene", radio.scene}, {"p_inpaint", radio.p_inpaint}};
            if (radio.scene == "generated") {
                r["scene_seed"] = radio.scene_seed.value_or(derive_seed(rng_seed, 2));
                r["n_measurements"] = radio.n_measurements;
                r["n_removed"] = radio.n_removed;
                r["n_buildings"] = radio.n_buildings;
            }
            j["radio"] = r;
            break;
        }
    }
    return j;
}

ExperimentConfig parse_config(std::string_view text) {
    const auto sections = read_sections(text);
    ExperimentConfig cfg;
    const Entry* task = find(sections, "experiment", "task");
    if (!task) throw ConfigError("missing required field 'task'");
    cfg.task = parse_task(*task);
    apply_task_defaults(cfg);

    auto get = [&](const std::string& section, const std::string& key) { return find(sections, section, key); };

    if (auto e = get("experiment", "seed")) cfg.rng_seed = to_u64("seed", *e);
    if (auto e = get("experiment", "out")) cfg.out_dir = e->value;

    if (auto e = get("model", "kind")) {
        cfg.model.kind =
            to_choice("kind", *e, {"linear", "logistic", "logistic-prob", "file", "template", "radio"});
    }
    if (auto e = get("model", "path")) cfg.model.path = e->value;
    if (auto e = get("model", "weights")) cfg.model.weights = to_list("weights", *e);
    if (auto e = get("model", "bias")) cfg.model.bias = to_double("bias", *e);
    if (auto e = get("model", "output")) {
        cfg.model.output = static_cast<std::size_t>(to_u64("output", *e));
        cfg.model.output_set = true;
    }
    if (auto e = get("model", "channel")) cfg.model.channel = to_choice("channel", *e, {"magnitude", "phase", "both"});
    if (auto e = get("model", "gain")) {
        cfg.model.gain = to_double("gain", *e);
        if (!(cfg.model.gain > 0.0)) throw ConfigError("gain must be positive", e->line);
    }
    if (auto e = get("model", "kernel_radius")) {
        cfg.model.kernel_radius = to_double("kernel_radius", *e);
        if (!(cfg.model.kernel_radius > 0.0)) throw ConfigError("kernel_radius must be positive", e->line);
    }
    if (auto e = get("model", "kernel_prior")) {
        cfg.model.kernel_prior = to_double("kernel_prior", *e);
        if (!(cfg.model.kernel_prior > 0.0)) throw ConfigError("kernel_prior must be positive", e->line);
    }

    if (auto e = get("sampler", "kind")) {
        cfg.sampler.kind = to_choice("kind", *e, {"constant", "gaussian", "fit", "radio"});
    }
    if (auto e = get("sampler", "value")) cfg.sampler.value = to_list("value", *e);
    if (auto e = get("sampler", "mean")) cfg.sampler.mean = to_list("mean", *e);
    if (auto e = get("sampler", "std")) {
        cfg.sampler.stddev = to_list("std", *e);
        for (double v : cfg.sampler.stddev) {
            if (v < 0.0) throw ConfigError("std entries must be non-negative", e->line);
        }
    }

    if (auto e = get("data", "x")) cfg.x = to_list("x", *e);
    if (auto e = get("data", "mask")) {
        cfg.probe_mask = to_list("mask", *e);
        for (double v : cfg.probe_mask) {
            if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("mask weights must lie in [0,1]", e->line);
        }
    }

    auto& o = cfg.optim;
    if (auto e = get("optim", "method")) {
        const auto m = to_choice("method", *e, {"concrete", "relaxed_sgd", "matching_pursuit"});
        o.method = m == "concrete" ? Method::concrete : m == "relaxed_sgd" ? Method::relaxed_sgd
                                                                          : Method::matching_pursuit;
    }
    if (auto e = get("optim", "steps")) o.steps = to_positive("steps", *e);
    if (auto e = get("optim", "n_samples")) o.n_samples = to_positive("n_samples", *e);
    if (auto e = get("optim", "budget")) o.mp_budget = static_cast<std::size_t>(to_u64("budget", *e));
    if (auto e = get("optim", "update")) {
        o.update = to_choice("update", *e, {"adam", "sgd"}) == "adam" ? UpdateRule::adam : UpdateRule::sgd;
    }
    struct RealKey {
        const char* key;
        double* field;
    };
    const RealKey reals[] = {{"step_size", &o.step_size}, {"lambda", &o.lambda},   {"temperature", &o.temperature},
                             {"beta1", &o.beta1},         {"beta2", &o.beta2},     {"adam_eps", &o.adam_eps},
                             {"initial_value", &o.initial_value}};
    for (const auto& rk : reals) {
        if (auto e = get("optim", rk.key)) {
            *rk.field = to_double(rk.key, *e);
            try {
                o.validate();
            } catch (const ConfigError& err) {
                // attribute the failure to this line only if it names this key
                const std::string what = err.what();
                if (what.rfind(rk.key, 0) == 0) throw ConfigError(what, e->line);
            }
        }
    }

    if (auto e = get("audio", "n_per_class")) cfg.audio.n_per_class = to_positive("n_per_class", *e);
    if (auto e = get("audio", "class")) cfg.audio.target_class = static_cast<std::size_t>(to_u64("class", *e));
    if (auto e = get("audio", "index")) cfg.audio.index = static_cast<std::size_t>(to_u64("index", *e));
    if (auto e = get("audio", "sample_rate")) {
        cfg.audio.sample_rate = to_double("sample_rate", *e);
        if (cfg.audio.sample_rate < 16000.0) throw ConfigError("sample_rate must be at least 16000", e->line);
    }

    if (auto e = get("radio", "scene")) cfg.radio.scene = to_choice("scene", *e, {"shadow", "generated"});
    if (auto e = get("radio", "scene_seed")) cfg.radio.scene_seed = to_u64("scene_seed", *e);
    if (auto e = get("radio", "p_inpaint")) {
        cfg.radio.p_inpaint = to_double("p_inpaint", *e);
        if (!(cfg.radio.p_inpaint >= 0.0 && cfg.radio.p_inpaint <= 1.0)) {
            throw ConfigError("p_inpaint must lie in [0,1]", e->line);
        }
    }
    if (auto e = get("radio", "n_measurements")) cfg.radio.n_measurements = to_positive("n_measurements", *e);
    if (auto e = get("radio", "n_removed")) cfg.radio.n_removed = static_cast<int>(to_u64("n_removed", *e));
    if (auto e = get("radio", "n_buildings")) cfg.radio.n_buildings = static_cast<int>(to_positive("n_buildings", *e));

    cfg.optim.rng_seed = cfg.rng_seed;
    cfg.optim.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    auto cfg = parse_config(ss.str());
    if (!cfg.model.path.empty() && std::filesystem::path(cfg.model.path).is_relative()) {
        cfg.model.path = (path.parent_path() / cfg.model.path).lexically_normal().string();
    }
    return cfg;
}

void check_config(const ExperimentConfig& cfg) { (void)resolve(cfg); }

ProbeResult run_probe(const ExperimentConfig& cfg) {
    if (cfg.task != Task::distortion_probe) throw ConfigError("probe needs task = distortion_probe");
    const auto r = resolve(cfg);
    const auto& x = r.data.front();
    const Mask mask = cfg.probe_mask.empty() ? Mask::filled(x.dim(), 0.0) : Mask(cfg.probe_mask);
    const auto est =
        estimate_distortion(*r.model, *r.selector, x, mask, r.grouping, *r.sampler, r.optim.n_samples, r.optim.rng_seed);
    if (!std::isfinite(est.mean)) throw NumericalError("non-finite distortion estimate");
    return {est.mean, est.std_err, est.n_samples};
}

RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
    auto r = resolve(cfg);
    std::filesystem::create_directories(out_dir);
    RunSummary out;
    auto emit = [&](const std::string& name, const std::string& content) {
        write_file(out_dir / name, content);
        out.artifacts.push_back(name);
    };
    std::ostringstream report;

    switch (cfg.task) {
        case Task::distortion_probe: {
            const auto p = run_probe(cfg);
            const Mask mask =
                cfg.probe_mask.empty() ? Mask::filled(cfg.x.size(), 0.0) : Mask(cfg.probe_mask);
            out.explanation.final_mask = mask;
            out.explanation.distortion_curve.push_back({sparsity(mask).l1, p.mean});
            out.explanation.config_echo = {{"selector", r.selector->describe()},
                                           {"sampler", r.sampler->describe()},
                                           {"model", r.model->kind()},
                                           {"distortion", "0.5*(phi(x)-phi(z))^2"}};
            emit("probe.csv", "mean,std_err,n_samples\n" + format_double(p.mean) + "," + format_double(p.std_err) +
                                  "," + std::to_string(p.n_samples) + "\n");
            report << "mean=" << format_double(p.mean) << " std_err=" << format_double(p.std_err)
                   << " n=" << p.n_samples;
            break;
        }
        case Task::audio_per_freq: {
            out.explanation = optimize(*r.model, *r.selector, r.data.front(), r.grouping, *r.sampler, r.optim);
            out.explanation.config_echo["dft"] = audio::dft_echo();
            const auto sd = audio::unpack_feature_vector(r.data.front());
            emit("spectrum.csv", audio::spectrum_to_csv(sd));
            const auto w = out.explanation.final_mask.weights();
            std::string csv = "freq_hz,magnitude,phase\n";
            double mag = 0.0;
            double ph = 0.0;
            for (std::size_t b = 0; b < audio::kBins; ++b) {
                csv += format_double(sd.freq_grid[b]) + "," + format_double(w[b]) + "," +
                       format_double(w[audio::kBins + b]) + "\n";
                mag += w[b];
                ph += w[audio::kBins + b];
            }
            emit("relevance.csv", csv);
            report << "mean magnitude " << format_double(mag / audio::kBins) << ", mean phase "
                   << format_double(ph / audio::kBins);
            break;
        }
        case Task::audio_mag_vs_phase: {
            if (r.optim.method == Method::concrete) {
                out.explanation = audio::class_query(*r.model, *r.selector, r.data, r.grouping, *r.sampler, r.optim);
            } else {
                out.explanation = optimize_relaxed(*r.model, *r.selector, r.data, r.grouping, *r.sampler, r.optim);
                out.explanation.config_echo["query"] = "class";
                out.explanation.config_echo["dft"] = audio::dft_echo();
            }
            const auto w = out.explanation.final_mask.weights();
            emit("report.csv", "group,importance\nmagnitude," + format_double(w[0]) + "\nphase," +
                                   format_double(w[1]) + "\n");
            report << "magnitude " << format_double(w[0]) << ", phase " << format_double(w[1]);
            break;
        }
        case Task::radio_explain: {
            const auto& scene = *r.scene;
            out.explanation = radio::explain_region(scene, radio::CompletionPolicy{cfg.radio.p_inpaint},
                                                    r.optim.mp_budget, r.optim, r.phi);
            const auto phi = radio::phi_model(scene, r.phi);
            emit("scene.json", scene_to_json(scene).dump(2) + "\n");
            emit("city.pgm", radio::city_to_pgm(scene.city));
            emit("noisy_city.pgm", radio::city_to_pgm(scene.noisy_city));
            emit("radio_gt.pgm", radio::radio_to_pgm(radio::simulate_radio(scene.city, scene.tx, r.phi.propagation)));
            emit("radio_phi.pgm", radio::radio_to_pgm(phi));
            emit("explanation.svg", radio::explanation_svg(scene, phi, *out.explanation.selected_order));
            const radio::SceneEncoding enc(scene);
            report << "selected";
            for (auto g : *out.explanation.selected_order) report << ' ' << group_label(enc, g);
            break;
        }
    }

    out.explanation.config_echo["experiment"] = cfg.to_json();
    emit("explanation.json", to_json(out.explanation).dump(2) + "\n");
    emit("mask.csv", mask_to_csv(out.explanation.final_mask));
    out.sparsity = sparsity(out.explanation.final_mask);
    out.distortion = out.explanation.distortion_curve.empty() ? 0.0 : out.explanation.distortion_curve.back().distortion;
    // matching pursuit and the probe have no sparsity penalty
    const bool penalized = cfg.task != Task::distortion_probe && r.optim.method != Method::matching_pursuit;
    out.loss = penalized ? out.distortion + r.optim.lambda * out.sparsity.l1 : out.distortion;
    out.report = report.str();
    return out;
}

}  // namespace rdx::cli
