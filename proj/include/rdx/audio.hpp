#pragma once
// Synthetic audio world: harmonic tone synthesis, log-frequency DFT features,
// the magnitude/phase feature layout and class-level group queries.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdx/core.hpp"
#include "rdx/masking.hpp"
#include "rdx/models.hpp"
#include "rdx/optim.hpp"

namespace rdx::audio {

inline constexpr std::size_t kBins = 1024;
inline constexpr double kMinHz = 20.0;
inline constexpr double kMaxHz = 8000.0;
inline constexpr std::size_t kDftSize = 16384;
inline constexpr std::size_t kMinSignalLength = 2048;
// 1 Hz DFT bins at kDftSize points.
inline constexpr double kDefaultSampleRate = 16384.0;

enum class PhaseProfile { smooth, rapid };

struct ToneSpec {
    double fundamental = 110.0;
    int n_harmonics = 8;
    double harmonic_decay = 0.5;
    PhaseProfile phase_profile = PhaseProfile::smooth;
    double noise_floor = 0.0;
    int class_label = 0;

    // "fundamental=110 n_harmonics=8 harmonic_decay=0.5 phase_profile=smooth noise_floor=0 class_label=0"
    std::string to_line() const;
    // Throws ConfigError with line_no on malformed input.
    static ToneSpec from_line(std::string_view line, int line_no = 0);
};

// Phase offset of harmonic h (1-based) under a profile; independent of any seed.
double harmonic_phase(PhaseProfile profile, int harmonic);

// sum_h decay^(h-1) sin(2 pi f h t + phase_h) + noise_floor * N(0,1).
std::vector<double> synth_tone(const ToneSpec& spec, double duration_s, double sample_rate, std::uint64_t rng_seed);

struct SpectralDatum {
    std::vector<double> magnitude;
    std::vector<double> phase;      // in (-pi, pi]
    std::vector<double> freq_grid;  // Hz, log-spaced over [20, 8000]
    // Set when the spectrum was all zeros and could not be normalized.
    bool degenerate = false;
};

std::vector<double> log_frequency_grid();

// Nearest-bin samples of a kDftSize-point rectangular-window DFT (zero-padded
// or truncated), magnitude scaled by 1/kDftSize, not normalized.
SpectralDatum log_dft_raw(std::span<const double> signal, double sample_rate);

// Scales magnitude to unit l2 norm; the zero spectrum is left as is and flagged.
void power_normalize(SpectralDatum& sd);

// DFT settings for config echoes.
nlohmann::json dft_echo();

// log_dft_raw followed by power_normalize.
SpectralDatum log_dft(std::span<const double> signal, double sample_rate);

struct FeatureVector {
    Datum datum;                       // [magnitude | phase], 2048 components
    ComponentGrouping per_component;   // 2048 single-component groups
    ComponentGrouping magnitude_phase; // {magnitude}, {phase}
};

FeatureVector build_feature_vector(const SpectralDatum& sd);
SpectralDatum unpack_feature_vector(const Datum& features);

// Columns freq_hz, magnitude, phase.
std::string spectrum_to_csv(const SpectralDatum& sd);

// Ten classes differing in pitch, harmonic decay and phase profile.
std::vector<ToneSpec> default_taxonomy();

struct ToneSample {
    ToneSpec spec;
    SpectralDatum spectrum;
    Datum features;
};

// n_per_class tones per taxonomy class with a small seeded pitch jitter.
std::vector<ToneSample> make_tone_dataset(std::span<const ToneSpec> taxonomy, std::size_t n_per_class,
                                          std::uint64_t rng_seed, double sample_rate = kDefaultSampleRate);

enum class Channel { magnitude, phase, both };

// Pre-softmax linear classifier over the 2048 features: row c is the mean
// feature vector m_c of class c restricted to the given channel, scaled by
// gain / |m_c|^2 so that m_c scores gain. A magnitude-channel classifier is
// exactly invariant to the phase half.
LinearModel make_template_classifier(std::span<const ToneSample> dataset, std::size_t n_classes, Channel channel,
                                     double gain);

// Output index with the highest mean score over the dataset.
std::size_t dominant_output(const ModelOracle& model, std::span<const Datum> data);

// One shared concrete mask over a class, minimizing the mean loss. The
// returned mask holds theta per group.
Explanation class_query(const ModelOracle& model, std::span<const Datum> data, const ComponentGrouping& grouping,
                        const InfillSampler& sampler, const OptimConfig& cfg);
Explanation class_query(const ModelOracle& model, const OutputSelector& sel, std::span<const Datum> data,
                        const ComponentGrouping& grouping, const InfillSampler& sampler, const OptimConfig& cfg);

}  // namespace rdx::audio
