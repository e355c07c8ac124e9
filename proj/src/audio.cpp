#include "rdx/audio.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "rdx/errors.hpp"
#include "rdx/format.hpp"
#include "rdx/rng.hpp"

namespace rdx::audio {

using std::numbers::pi;

// ---------------------------------------------------------------- tone specs

std::string ToneSpec::to_line() const {
    return "fundamental=" + format_double(fundamental) + " n_harmonics=" + std::to_string(n_harmonics) +
           " harmonic_decay=" + format_double(harmonic_decay) +
           " phase_profile=" + (phase_profile == PhaseProfile::smooth ? "smooth" : "rapid") +
           " noise_floor=" + format_double(noise_floor) + " class_label=" + std::to_string(class_label);
}

ToneSpec ToneSpec::from_line(std::string_view line, int line_no) {
    ToneSpec spec;
    std::map<std::string, std::string> fields;
    for (auto tok : split_ws(line)) {
        const auto eq = tok.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(tok) + "'", line_no);
        fields[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
    }
    auto number = [&](const std::string& key) {
        auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError("missing field '" + key + "'", line_no);
        auto v = parse_double(it->second);
        if (!v || !std::isfinite(*v)) throw ConfigError("invalid value for '" + key + "'", line_no);
        fields.erase(it);
        return *v;
    };
    auto integer = [&](const std::string& key) {
        const double v = number(key);
        if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer", line_no);
        return static_cast<int>(v);
    };
    spec.fundamental = number("fundamental");
    spec.n_harmonics = integer("n_harmonics");
    spec.harmonic_decay = number("harmonic_decay");
    spec.noise_floor = number("noise_floor");
    spec.class_label = integer("class_label");
    auto it = fields.find("phase_profile");
    if (it == fields.end()) throw ConfigError("missing field 'phase_profile'", line_no);
    if (it->second == "smooth") {
        spec.phase_profile = PhaseProfile::smooth;
    } else if (it->second == "rapid") {
        spec.phase_profile = PhaseProfile::rapid;
    } else {
        throw ConfigError("phase_profile must be smooth or rapid", line_no);
    }
    fields.erase(it);
    if (!fields.empty()) throw ConfigError("unknown field '" + fields.begin()->first + "'", line_no);
    if (!(spec.fundamental > 0.0) || spec.n_harmonics < 1 || spec.noise_floor < 0.0 || spec.class_label < 0) {
        throw ConfigError("tone spec out of range", line_no);
    }
    return spec;
}

double harmonic_phase(PhaseProfile profile, int harmonic) {
    const double h = static_cast<double>(harmonic - 1);
    if (profile == PhaseProfile::smooth) return 0.15 * h;
    // Golden-ratio scrambling: consecutive harmonics land far apart on the circle.
    const double frac = std::fmod(h * 0.6180339887498949 * 7.0, 1.0);
    return (2.0 * frac - 1.0) * pi;
}

std::vector<double> synth_tone(const ToneSpec& spec, double duration_s, double sample_rate, std::uint64_t rng_seed) {
    if (!(sample_rate > 0.0) || !(duration_s > 0.0)) throw InputError("duration and sample rate must be positive");
    if (spec.n_harmonics < 1 || !(spec.fundamental > 0.0)) throw InputError("invalid tone spec");
    if (sample_rate < 2.0 * spec.fundamental * spec.n_harmonics) {
        throw InputError("highest harmonic exceeds the Nyquist frequency");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    std::vector<double> out(n, 0.0);
    for (int h = 1; h <= spec.n_harmonics; ++h) {
        const double amp = std::pow(spec.harmonic_decay, h - 1);
        const double omega = 2.0 * pi * spec.fundamental * h / sample_rate;
        const double phase = harmonic_phase(spec.phase_profile, h);
        for (std::size_t i = 0; i < n; ++i) out[i] += amp * std::sin(omega * static_cast<double>(i) + phase);
    }
    if (spec.noise_floor > 0.0) {
        Rng rng = make_rng(rng_seed);
        for (double& v : out) v += spec.noise_floor * standard_normal(rng);
    }
    return out;
}

// ---------------------------------------------------------------- spectra

std::vector<double> log_frequency_grid() {
    std::vector<double> grid(kBins);
    const double ratio = std::log(kMaxHz / kMinHz);
    for (std::size_t j = 0; j < kBins; ++j) {
        grid[j] = kMinHz * std::exp(ratio * static_cast<double>(j) / static_cast<double>(kBins - 1));
    }
    grid.front() = kMinHz;
    grid.back() = kMaxHz;
    return grid;
}

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

std::vector<std::complex<double>> real_dft(std::span<const double> frame) {
    const int n = static_cast<int>(frame.size());
    double* in = fftw_alloc_real(frame.size());
    fftw_complex* out = fftw_alloc_complex(frame.size() / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    }
    std::copy(frame.begin(), frame.end(), in);
    fftw_execute(plan);
    std::vector<std::complex<double>> spectrum(frame.size() / 2 + 1);
    for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] = {out[k][0], out[k][1]};
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    fftw_free(in);
    return spectrum;
}

}  // namespace

SpectralDatum log_dft_raw(std::span<const double> signal, double sample_rate) {
    if (signal.size() < kMinSignalLength) {
        throw InputError("signal needs at least " + std::to_string(kMinSignalLength) + " samples");
    }
    if (!(sample_rate >= 2.0 * kMaxHz)) throw InputError("sample rate must be at least 16000 Hz");
    std::vector<double> frame(kDftSize, 0.0);
    std::copy_n(signal.begin(), std::min(signal.size(), kDftSize), frame.begin());
    const auto spectrum = real_dft(frame);

    SpectralDatum sd;
    sd.freq_grid = log_frequency_grid();
    sd.magnitude.resize(kBins);
    sd.phase.resize(kBins);
    const double bin_hz = sample_rate / static_cast<double>(kDftSize);
    for (std::size_t j = 0; j < kBins; ++j) {
        const auto k = static_cast<std::size_t>(std::llround(sd.freq_grid[j] / bin_hz));
        const auto c = spectrum.at(k);
        sd.magnitude[j] = std::abs(c) / static_cast<double>(kDftSize);
        double ph = std::arg(c);
        if (ph <= -pi) ph = pi;
        sd.phase[j] = ph;
    }
    return sd;
}

void power_normalize(SpectralDatum& sd) {
    double power = 0.0;
    for (double m : sd.magnitude) power += m * m;
    if (power == 0.0) {
        sd.degenerate = true;
        return;
    }
    const double inv = 1.0 / std::sqrt(power);
    for (double& m : sd.magnitude) m *= inv;
    sd.degenerate = false;
}

SpectralDatum log_dft(std::span<const double> signal, double sample_rate) {
    auto sd = log_dft_raw(signal, sample_rate);
    power_normalize(sd);
    return sd;
}

nlohmann::json dft_echo() {
    return {{"size", kDftSize}, {"window", "rectangular"}, {"sampling", "nearest_bin"}, {"bins", kBins},
            {"min_hz", kMinHz}, {"max_hz", kMaxHz}};
}

// ---------------------------------------------------------------- features

FeatureVector build_feature_vector(const SpectralDatum& sd) {
    if (sd.magnitude.size() != kBins || sd.phase.size() != kBins) {
        throw InputError("spectral datum must have 1024 magnitude and phase samples");
    }
    std::vector<double> values(sd.magnitude);
    values.insert(values.end(), sd.phase.begin(), sd.phase.end());
    std::vector<std::size_t> mag(kBins), ph(kBins);
    for (std::size_t j = 0; j < kBins; ++j) {
        mag[j] = j;
        ph[j] = kBins + j;
    }
    return FeatureVector{Datum(std::move(values)), ComponentGrouping::trivial(2 * kBins),
                         ComponentGrouping({std::move(mag), std::move(ph)})};
}

SpectralDatum unpack_feature_vector(const Datum& features) {
    if (features.dim() != 2 * kBins) throw InputError("feature vector must have 2048 components");
    const auto v = features.values();
    SpectralDatum sd;
    sd.magnitude.assign(v.begin(), v.begin() + kBins);
    sd.phase.assign(v.begin() + kBins, v.end());
    sd.freq_grid = log_frequency_grid();
    return sd;
}

std::string spectrum_to_csv(const SpectralDatum& sd) {
    std::string out = "freq_hz,magnitude,phase\n";
    for (std::size_t j = 0; j < sd.magnitude.size(); ++j) {
        out += format_double(sd.freq_grid[j]) + "," + format_double(sd.magnitude[j]) + "," +
               format_double(sd.phase[j]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------- dataset and classifiers

std::vector<ToneSpec> default_taxonomy() {
    const double fundamentals[10] = {55.0, 82.5, 110.0, 146.8, 196.0, 261.6, 329.6, 440.0, 587.3, 784.0};
    std::vector<ToneSpec> classes;
    for (int c = 0; c < 10; ++c) {
        ToneSpec t;
        t.fundamental = fundamentals[c];
        t.n_harmonics = 8;
        t.harmonic_decay = 0.35 + 0.06 * c;
        t.phase_profile = (c % 2 == 0) ? PhaseProfile::smooth : PhaseProfile::rapid;
        t.noise_floor = 0.01;
        t.class_label = c;
        classes.push_back(t);
    }
    return classes;
}

std::vector<ToneSample> make_tone_dataset(std::span<const ToneSpec> taxonomy, std::size_t n_per_class,
                                          std::uint64_t rng_seed, double sample_rate) {
    std::vector<ToneSample> out;
    std::uint64_t stream = 0;
    for (const auto& base : taxonomy) {
        for (std::size_t i = 0; i < n_per_class; ++i, ++stream) {
            Rng rng = make_rng(rng_seed, stream);
            ToneSpec spec = base;
            spec.fundamental *= 1.0 + 0.02 * (2.0 * uniform_open01(rng) - 1.0);
            const auto signal = synth_tone(spec, static_cast<double>(kDftSize) / sample_rate, sample_rate, rng());
            auto spectrum = log_dft(signal, sample_rate);
            auto features = build_feature_vector(spectrum).datum;
            out.push_back({spec, std::move(spectrum), std::move(features)});
        }
    }
    return out;
}

LinearModel make_template_classifier(std::span<const ToneSample> dataset, std::size_t n_classes, Channel channel,
                                     double gain) {
    if (dataset.empty() || n_classes == 0) throw InputError("classifier needs data and classes");
    const std::size_t dim = 2 * kBins;
    std::vector<double> w(n_classes * dim, 0.0);
    std::vector<std::size_t> counts(n_classes, 0);
    for (const auto& s : dataset) {
        const auto c = static_cast<std::size_t>(s.spec.class_label);
        if (c >= n_classes) throw InputError("class label out of range");
        ++counts[c];
        for (std::size_t j = 0; j < dim; ++j) w[c * dim + j] += s.features[j];
    }
    const std::size_t lo = channel == Channel::phase ? kBins : 0;
    const std::size_t hi = channel == Channel::magnitude ? kBins : dim;
    for (std::size_t c = 0; c < n_classes; ++c) {
        double sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double& v = w[c * dim + j];
            v = (j >= lo && j < hi && counts[c] > 0) ? v / static_cast<double>(counts[c]) : 0.0;
            sq += v * v;
        }
        // scaled so the class mean itself scores exactly gain
        const double scale = sq > 0.0 ? gain / sq : 0.0;
        for (std::size_t j = 0; j < dim; ++j) w[c * dim + j] *= scale;
    }
    return LinearModel(Matrix(n_classes, dim, std::move(w)), std::vector<double>(n_classes, 0.0));
}

std::size_t dominant_output(const ModelOracle& model, std::span<const Datum> data) {
    if (data.empty()) throw InputError("dataset is empty");
    std::vector<double> mean(model.out_dim(), 0.0);
    for (const auto& d : data) {
        const auto y = evaluate(model, d);
        for (std::size_t k = 0; k < y.size(); ++k) mean[k] += y[k];
    }
    return static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
}

Explanation class_query(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                        const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg) {
    if (data.empty()) throw InputError("class query needs at least one datum");
    const std::size_t dim = data.front().dim();
    for (const auto& d : data) {
        if (d.dim() != dim) throw InputError("class query data differ in dimension");
    }
    auto e = optimize_concrete(model, sel, data, grouping, sampler, cfg);
    e.config_echo["query"] = "class";
    e.config_echo["dft"] = dft_echo();
    return e;
}

Explanation class_query(const ModelOracle& model, std::span<const Datum> data, const ComponentGrouping& grouping,
                        const InfillSampler& sampler, const OptimConfig& cfg) {
    if (data.empty()) throw InputError("class query needs at least one datum");
    const auto sel = OutputSelector::index(dominant_output(model, data));
    return class_query(model, sel, data, grouping, sampler, cfg);
}

}  // namespace rdx::audio
