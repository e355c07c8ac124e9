// rdx: run, validate and probe explanation experiments; generate cities and tones.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdx/audio.hpp"
#include "rdx/errors.hpp"
#include "rdx/experiment.hpp"
#include "rdx/format.hpp"
#include "rdx/parallel.hpp"
#include "rdx/radiomap.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void apply_threads(std::optional<std::size_t> flag) {
    if (flag) {
        rdx::set_thread_count(*flag);
        return;
    }
    if (const char* env = std::getenv("RDX_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0) rdx::set_thread_count(static_cast<std::size_t>(n));
            return;
        } catch (const std::exception&) {
        }
        std::cerr << "rdx: ignoring RDX_THREADS='" << env << "'\n";
    }
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

rdx::cli::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = rdx::cli::load_config(path);
    if (seed) {
        cfg.rng_seed = *seed;
        cfg.optim.rng_seed = *seed;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-distortion explanations for black-box models"};
    app.require_subcommand(1);

    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> threads;

    auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
    run->add_option("--config", config, "experiment config file")->required();
    run->add_option("--seed", seed, "overrides the config seed");
    run->add_option("--out", out, "output directory (default: config 'out', else ./rdx-out)");
    run->add_option("--threads", threads, "worker threads (default: RDX_THREADS, else all cores)")
        ->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "check a config and print the resolved settings");
    validate->add_option("--config", config, "experiment config file")->required();
    validate->add_option("--seed", seed, "overrides the config seed");

    auto* probe = app.add_subcommand("probe", "estimate the distortion of a fixed mask");
    probe->add_option("--config", config, "distortion_probe config file")->required();
    probe->add_option("--seed", seed, "overrides the config seed");
    probe->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    rdx::radio::CityParams city_params;
    std::uint64_t gen_seed = 0;
    auto* gen_city = app.add_subcommand("gen-city", "generate a random city as PGM");
    gen_city->add_option("--seed", gen_seed, "generator seed");
    gen_city->add_option("--out", out, "output directory")->required();
    gen_city->add_option("--height", city_params.height)->check(CLI::PositiveNumber);
    gen_city->add_option("--width", city_params.width)->check(CLI::PositiveNumber);
    gen_city->add_option("--buildings", city_params.n_buildings)->check(CLI::NonNegativeNumber);
    gen_city->add_option("--min-size", city_params.min_size)->check(CLI::PositiveNumber);
    gen_city->add_option("--max-size", city_params.max_size)->check(CLI::PositiveNumber);

    std::size_t per_class = 4;
    auto* gen_tones = app.add_subcommand("gen-tones", "synthesize the tone dataset and its spectra");
    gen_tones->add_option("--seed", gen_seed, "generator seed");
    gen_tones->add_option("--out", out, "output directory")->required();
    gen_tones->add_option("--per-class", per_class, "tones per class")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and friends exit 0, bad invocations count as config errors
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            apply_threads(threads);
            const auto t0 = std::chrono::steady_clock::now();
            const auto cfg = load(config, seed);
            const fs::path dir = !out.empty() ? fs::path(out) : !cfg.out_dir.empty() ? fs::path(cfg.out_dir)
                                                                                      : fs::path("rdx-out");
            const auto summary = rdx::cli::run_experiment(cfg, dir);
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            char wall_s[32];
            std::snprintf(wall_s, sizeof wall_s, "%.2f", wall);
            std::cout << rdx::cli::to_string(cfg.task) << ": loss=" << rdx::format_double(summary.loss)
                      << " distortion=" << rdx::format_double(summary.distortion)
                      << " l1=" << rdx::format_double(summary.sparsity.l1) << " l0=" << summary.sparsity.l0
                      << " wall=" << wall_s << "s | " << summary.report << "\n";
            return 0;
        }
        if (*validate) {
            const auto cfg = load(config, seed);
            rdx::cli::check_config(cfg);
            std::cout << "OK\n" << cfg.to_json().dump(2) << "\n";
            return 0;
        }
        if (*probe) {
            apply_threads(threads);
            const auto cfg = load(config, seed);
            const auto p = rdx::cli::run_probe(cfg);
            std::cout << "mean=" << rdx::format_double(p.mean) << " std_err=" << rdx::format_double(p.std_err)
                      << " n=" << p.n_samples << "\n";
            return 0;
        }
        if (*gen_city) {
            const auto city = rdx::radio::generate_city(gen_seed, city_params);
            fs::create_directories(out);
            write_text(fs::path(out) / "city.pgm", rdx::radio::city_to_pgm(city));
            char hash[32];
            std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(rdx::radio::grid_hash(city)));
            std::cout << "city " << city.height() << "x" << city.width() << " buildings=" << city.buildings().size()
                      << " hash=" << hash << "\n";
            return 0;
        }
        if (*gen_tones) {
            const auto taxonomy = rdx::audio::default_taxonomy();
            const auto tones = rdx::audio::make_tone_dataset(taxonomy, per_class, gen_seed);
            const fs::path dir(out);
            fs::create_directories(dir / "spectra");
            std::string lines;
            for (std::size_t i = 0; i < tones.size(); ++i) {
                lines += tones[i].spec.to_line() + "\n";
                write_text(dir / "spectra" / ("tone_" + std::to_string(i) + ".csv"),
                           rdx::audio::spectrum_to_csv(tones[i].spectrum));
            }
            write_text(dir / "tones.txt", lines);
            std::cout << "tones=" << tones.size() << " classes=" << taxonomy.size() << "\n";
            return 0;
        }
    } catch (const rdx::ConfigError& e) {
        std::cerr << "rdx: invalid config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const rdx::NumericalError& e) {
        std::cerr << "rdx: numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "rdx: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
