#pragma once
// Experiment runner behind the rdx command line tool: config parsing with
// task-dependent defaults, resolution into models/samplers/data, and the
// artifacts each task writes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rdx/core.hpp"
#include "rdx/optim.hpp"

namespace rdx::cli {

enum class Task { audio_per_freq, audio_mag_vs_phase, radio_explain, distortion_probe };

std::string to_string(Task t);

struct ModelSpec {
    // linear | logistic | logistic-prob | file | template | radio
    std::string kind;
    std::string path;             // kind = file
    std::vector<double> weights;  // inline single-output linear/logistic
    double bias = 0.0;
    std::size_t output = 0;       // selected output index (ignored by radio)
    bool output_set = false;      // template: pick the dominant class when unset
    std::string channel;          // template: magnitude | phase | both
    double gain = 100.0;          // template score of the class mean
    double kernel_radius = 6.0;   // radio
    double kernel_prior = 0.5;    // radio
};

struct SamplerSpec {
    // constant | gaussian | fit | radio
    std::string kind;
    std::vector<double> value;   // constant; empty = zeros
    std::vector<double> mean;    // gaussian; empty = zeros
    std::vector<double> stddev;  // gaussian; empty = ones
};

struct AudioSpec {
    std::size_t n_per_class = 4;
    std::size_t target_class = 0;
    std::size_t index = 0;  // datum within the class (audio_per_freq)
    double sample_rate = 16384.0;
};

struct RadioSpec {
    std::string scene = "shadow";  // shadow | generated
    std::optional<std::uint64_t> scene_seed;
    double p_inpaint = 1.0;
    std::size_t n_measurements = 24;
    int n_removed = 1;
    int n_buildings = 6;
};

struct ExperimentConfig {
    Task task = Task::distortion_probe;
    std::uint64_t rng_seed = 0;
    std::string out_dir;  // empty = decided by the caller
    ModelSpec model;
    SamplerSpec sampler;
    OptimConfig optim;
    std::vector<double> x;           // distortion_probe datum
    std::vector<double> probe_mask;  // distortion_probe mask; empty = all zeros
    AudioSpec audio;
    RadioSpec radio;

    // Resolved configuration, without out_dir (it does not affect results).
    nlohmann::json to_json() const;
};

// Bracketed [section] headers and key = value lines; '#' and ';' start
// comments. Lists are whitespace or comma separated. Missing keys take
// task-dependent defaults; unknown keys, bad values and a missing task raise
// ConfigError carrying the line number (0 when no line applies).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Builds every model, sampler and dataset the run would use without
// optimizing. Throws ConfigError on anything run would reject.
void check_config(const ExperimentConfig& cfg);

struct RunSummary {
    Explanation explanation;
    double distortion = 0.0;  // last curve point
    double loss = 0.0;        // distortion + lambda * l1 for the gradient methods, else distortion
    Sparsity sparsity;
    std::vector<std::string> artifacts;  // file names written under out_dir
    std::string report;                  // task-specific one-liner
};

// Runs the experiment and writes explanation.json, mask.csv and the task
// artifacts into out_dir (created if needed).
RunSummary run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct ProbeResult {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t n_samples = 0;
};

// Distortion of cfg.probe_mask for a distortion_probe config.
ProbeResult run_probe(const ExperimentConfig& cfg);

}  // namespace rdx::cli
