#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdx/audio.hpp"
#include "rdx/radiomap.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string output;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        const auto p = fs::temp_directory_path() / "rdx_test_cli";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

Outcome invoke(const std::string& args, const std::string& env = "") {
    const auto log = work_dir() / "last_output.txt";
    const std::string cmd = env + (env.empty() ? "" : " ") + "\"" + std::string(RDX_BINARY) + "\" " + args + " > \"" +
                            log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    o.output = slurp(log);
    return o;
}

fs::path config(const std::string& name, const std::string& text) {
    const auto p = work_dir() / name;
    write(p, text);
    return p;
}

double field(const std::string& text, const std::string& key) {
    // keys start the text or follow a space ("n=" must not match "mean=")
    const auto at = text.rfind(key + "=", 0) == 0 ? 0 : text.find(" " + key + "=");
    REQUIRE(at != std::string::npos);
    const auto from = text.find('=', at) + 1;
    return std::stod(text.substr(from));
}

}  // namespace

TEST_CASE("validate echoes defaults") {
    const auto p = config("pf.ini", "[experiment]\ntask = audio_per_freq\n");
    const auto o = invoke("validate --config " + p.string());
    CHECK(o.code == 0);
    CHECK(o.output.rfind("OK\n", 0) == 0);
    const auto doc = nlohmann::json::parse(o.output.substr(3));
    CHECK(doc["optim"]["lambda"] == 50.0);
    CHECK(doc["optim"]["temperature"] == 0.1);
    CHECK(doc["task"] == "audio_per_freq");

    const auto seeded = invoke("validate --seed 99 --config " + p.string());
    CHECK(nlohmann::json::parse(seeded.output.substr(3))["seed"] == 99);
}

TEST_CASE("config errors exit with code 2") {
    auto o = invoke("validate --config " + config("notask.ini", "[model]\nkind = linear\n").string());
    CHECK(o.code == 2);
    CHECK(o.output.find("'task'") != std::string::npos);

    o = invoke("validate --config " + config("lambda.ini", "task = audio_per_freq\n[optim]\nlambda = -3\n").string());
    CHECK(o.code == 2);
    CHECK(o.output.find("lambda must be non-negative") != std::string::npos);
    CHECK(o.output.find("line 3") != std::string::npos);

    o = invoke("run --config " + config("lambda2.ini", "task = audio_per_freq\n[optim]\nlambda = -3\n").string());
    CHECK(o.code == 2);

    o = invoke("validate --config " + (work_dir() / "absent.ini").string());
    CHECK(o.code == 2);
    o = invoke("frobnicate");
    CHECK(o.code == 2);
    o = invoke("run");
    CHECK(o.code == 2);
}

TEST_CASE("numerical aborts exit with code 3") {
    const auto p = config("overflow.ini",
                          "task = distortion_probe\n[model]\nkind = linear\nweights = 1e308 1e308\n"
                          "[sampler]\nkind = constant\n[data]\nx = 10 10\n");
    CHECK(invoke("probe --config " + p.string()).code == 3);
    CHECK(invoke("run --out " + (work_dir() / "overflow").string() + " --config " + p.string()).code == 3);
}

TEST_CASE("probe prints the closed-form distortion") {
    const auto p = config("probe.ini",
                          "task = distortion_probe\nseed = 2\n[model]\nkind = linear\nweights = 1 2\n"
                          "[sampler]\nkind = gaussian\n[data]\nx = 1 1\nmask = 1 0\n");
    const auto o = invoke("probe --config " + p.string());
    REQUIRE(o.code == 0);
    const double mean = field(o.output, "mean");
    const double se = field(o.output, "std_err");
    CHECK(field(o.output, "n") == 100000);
    CHECK(std::abs(mean - 4.0) < 3.0 * se);
}

TEST_CASE("radio run writes the overlay and a summary line") {
    const auto p = config("radio.ini", "task = radio_explain\nseed = 5\n[optim]\nn_samples = 16\n");
    const auto out = work_dir() / "radio";
    const auto o = invoke("run --config " + p.string() + " --out " + out.string());
    REQUIRE(o.code == 0);
    CHECK(o.output.rfind("radio_explain: loss=", 0) == 0);
    CHECK(o.output.find(" wall=") != std::string::npos);
    CHECK(o.output.find("| selected ") != std::string::npos);
    CHECK(fs::exists(out / "explanation.svg"));
    const auto doc = nlohmann::json::parse(slurp(out / "explanation.json"));
    CHECK_FALSE(doc["order"].empty());
}

TEST_CASE("out directory from the config and from the flag") {
    const auto target = work_dir() / "from_config";
    const auto p = config("outcfg.ini", "task = radio_explain\nout = " + target.string() + "\n[optim]\nbudget = 1\n");
    REQUIRE(invoke("run --config " + p.string()).code == 0);
    CHECK(fs::exists(target / "explanation.json"));
    const auto flag = work_dir() / "from_flag";
    REQUIRE(invoke("run --config " + p.string() + " --out " + flag.string()).code == 0);
    CHECK(fs::exists(flag / "explanation.json"));
    CHECK(slurp(flag / "explanation.json") == slurp(target / "explanation.json"));
}

TEST_CASE("explanation.json is byte-identical across runs and thread counts") {
    const auto p = config("repro.ini", "task = radio_explain\nseed = 8\n[radio]\np_inpaint = 0.025\n"
                                       "[optim]\nn_samples = 24\nbudget = 3\n");
    const auto a = work_dir() / "repro_a";
    const auto b = work_dir() / "repro_b";
    const auto c = work_dir() / "repro_c";
    const auto d = work_dir() / "repro_d";
    REQUIRE(invoke("run --threads 1 --config " + p.string() + " --out " + a.string()).code == 0);
    REQUIRE(invoke("run --threads 1 --config " + p.string() + " --out " + b.string()).code == 0);
    REQUIRE(invoke("run --threads 4 --config " + p.string() + " --out " + c.string()).code == 0);
    REQUIRE(invoke("run --config " + p.string() + " --out " + d.string(), "RDX_THREADS=3").code == 0);
    const auto ref = slurp(a / "explanation.json");
    CHECK(!ref.empty());
    CHECK(slurp(b / "explanation.json") == ref);
    CHECK(slurp(c / "explanation.json") == ref);
    CHECK(slurp(d / "explanation.json") == ref);

    // the seed flag changes the result
    const auto e = work_dir() / "repro_e";
    REQUIRE(invoke("run --seed 9 --config " + p.string() + " --out " + e.string()).code == 0);
    CHECK(slurp(e / "explanation.json") != ref);
}

TEST_CASE("gen-city writes the golden city") {
    const auto out = work_dir() / "city";
    const auto o = invoke("gen-city --seed 1 --out " + out.string());
    REQUIRE(o.code == 0);
    CHECK(o.output.find("hash=7f8e83ad6e628e05") != std::string::npos);
    CHECK(slurp(out / "city.pgm") == rdx::radio::city_to_pgm(rdx::radio::generate_city(1, {})));
    CHECK(invoke("gen-city --seed 1 --buildings 80 --out " + out.string()).code != 0);
}

TEST_CASE("gen-tones writes a parseable manifest") {
    const auto out = work_dir() / "tones";
    REQUIRE(invoke("gen-tones --seed 3 --per-class 2 --out " + out.string()).code == 0);
    std::ifstream f(out / "tones.txt");
    std::string line;
    int n = 0;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto spec = rdx::audio::ToneSpec::from_line(line, n + 1);
        CHECK(spec.class_label == n / 2);
        ++n;
    }
    CHECK(n == 20);
    CHECK(fs::exists(out / "spectra" / "tone_0.csv"));
    CHECK(fs::exists(out / "spectra" / "tone_19.csv"));
}
