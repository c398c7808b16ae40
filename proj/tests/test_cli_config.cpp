#include "config.hpp"
#include "experiments.hpp"

#include "kelsim/tolerances.hpp"

#include "doctest.h"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace kelsim;
using namespace kelsim::cli;

namespace {

const char* kTinyConfig = R"json({
  "experiment": "svne",
  "system": {
    "h_s": [[0.5, 0], [0, -0.5]],
    "couplings": [{"label": "x", "matrix": [[0, 1], [1, 0]]}]
  },
  "bath": {
    "modes": [{"omega": 1.1, "mass": 1.0}],
    "coupling": [[0.4]],
    "state": {"type": "thermal", "beta": 1.5}
  },
  "grid": {"t_max": 1.0, "n_steps": 8},
  "initial_state": [[{"re": 0.5}, {"re": 0.5}], [{"re": 0.5}, {"re": 0.5}]],
  "n_traj": 64,
  "base_seed": 11,
  "observables": [{"name": "sz", "matrix": [[1, 0], [0, -1]]}]
})json";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string temp_dir(const std::string& leaf) {
    const std::string dir = std::string(KELSIM_TEST_TMPDIR) + "/" + leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing: fields, complex encodings, beta inf") {
    const RunConfig config = parse_config_text(kTinyConfig);
    CHECK(config.experiment == Experiment::svne);
    CHECK(config.system.n_channels() == 1);
    CHECK(config.system.labels[0] == "x");
    CHECK(config.bath.modes[0].omega == 1.1);
    CHECK(config.grid.n_steps == 8);
    CHECK(config.n_traj == 64);
    CHECK(config.base_seed == 11);
    CHECK(config.sampler.base_seed == 11);
    CHECK(config.initial_state(0, 1) == Complex(0.5, 0.0));
    CHECK(config.observables.size() == 1);
    CHECK(config.config_hash != 0);

    const RunConfig vac = parse_config_text(R"json({
      "experiment": "noise_validate",
      "system": {"h_s": [[0]], "couplings": [{"matrix": [[1]]}]},
      "bath": {"modes": [{"omega": 1.0}], "coupling": [[0.5]],
               "state": {"type": "thermal", "beta": "inf"}},
      "grid": {"t_max": 1.0, "n_steps": 2},
      "initial_state": [[1]],
      "n_traj": 10
    })json");
    CHECK(std::isinf(vac.bath.state.beta));
}

TEST_CASE("config parsing rejects malformed inputs") {
    CHECK_THROWS_AS((void)parse_config_text("{not json"), ConfigError);
    CHECK_THROWS_AS((void)parse_config_text("{}"), ConfigError);

    // Ragged matrix.
    CHECK_THROWS_AS((void)parse_config_text(R"json({
      "experiment": "svne",
      "system": {"h_s": [[0, 1], [0]], "couplings": [{"matrix": [[1]]}]},
      "bath": {"modes": [{"omega": 1}], "coupling": [[1]],
               "state": {"type": "thermal", "beta": 1}},
      "grid": {"t_max": 1, "n_steps": 2},
      "initial_state": [[1]]
    })json"),
                    ConfigError);

    // Channel mismatch between system couplings and bath rows.
    CHECK_THROWS_AS((void)parse_config_text(R"json({
      "experiment": "svne",
      "system": {"h_s": [[0]], "couplings": [{"matrix": [[1]]}]},
      "bath": {"modes": [{"omega": 1}], "coupling": [[1], [1]],
               "state": {"type": "thermal", "beta": 1}},
      "grid": {"t_max": 1, "n_steps": 2},
      "initial_state": [[1]]
    })json"),
                    ConfigError);
}

TEST_CASE("run_experiment emits series.csv and summary.json deterministically") {
    const RunConfig config = parse_config_text(kTinyConfig);
    const std::string dir_a = temp_dir("cli_run_a");
    const std::string dir_b = temp_dir("cli_run_b");

    run_experiment(config, dir_a, 1);
    run_experiment(config, dir_b, 3);  // different thread count, same bytes

    const std::string csv_a = read_file(dir_a + "/series.csv");
    const std::string csv_b = read_file(dir_b + "/series.csv");
    REQUIRE(!csv_a.empty());
    CHECK(csv_a == csv_b);
    CHECK(csv_a.find("time,sz_re,sz_im,sz_re_se,sz_im_se") == 0);

    const std::string summary_a = read_file(dir_a + "/summary.json");
    const std::string summary_b = read_file(dir_b + "/summary.json");
    // Thread count is recorded, so strip it before comparing.
    auto strip_threads = [](std::string s) {
        const auto pos = s.find("\"threads\"");
        if (pos != std::string::npos) {
            const auto end = s.find('\n', pos);
            s.erase(pos, end - pos);
        }
        return s;
    };
    CHECK(strip_threads(summary_a) == strip_threads(summary_b));
}

TEST_CASE("every experiment type runs end to end on a tiny model") {
    auto base = nlohmann::json::parse(kTinyConfig);
    base["fock"] = {{"cutoffs", {14}}, {"tail_tol", 1e-6}};
    base["grid"] = {{"t_max", 0.8}, {"n_steps", 4}};
    base["n_traj"] = 200;

    const std::vector<std::string> experiments = {
        "svne", "twostate", "deterministic", "oracle", "noise_validate", "wick_verify",
        "compare"};
    for (const auto& name : experiments) {
        auto j = base;
        j["experiment"] = name;
        if (name == "wick_verify") j["wick"] = {{"m_max", 1}, {"tolerance", 1e-10}};
        if (name == "noise_validate") {
            j["n_traj"] = 4000;
            j["noise"] = {{"dump", true}};
        }
        const std::string dir = temp_dir("cli_exp_" + name);
        const RunConfig config = parse_config_text(j.dump());
        CHECK_NOTHROW(run_experiment(config, dir, 1));
        CHECK(std::filesystem::exists(dir + "/series.csv"));
        CHECK(std::filesystem::exists(dir + "/summary.json"));
        if (name == "noise_validate") {
            // Binary dump: magic + counts header, then nu/eta pairs.
            std::ifstream dump(dir + "/noise.bin", std::ios::binary);
            REQUIRE(dump.good());
            char magic[8];
            dump.read(magic, 8);
            CHECK(std::string(magic, 8) == "KSNOISE1");
            std::uint32_t header[3];
            dump.read(reinterpret_cast<char*>(header), sizeof(header));
            CHECK(header[0] == 4000);
            CHECK(header[1] == 1);
            CHECK(header[2] == 5);
            const auto expected_bytes =
                8 + sizeof(header) +
                static_cast<std::size_t>(header[0]) * header[1] * header[2] * 2 * 16;
            CHECK(std::filesystem::file_size(dir + "/noise.bin") == expected_bytes);
        }
    }

    // measure_demo needs measurement resolutions.
    auto j = base;
    j["experiment"] = "measure_demo";
    j.erase("fock");  // restoration reference is optional
    j["measurement"] = {{"sigma_x", {3.0}},
                        {"sigma_p", {3.0}},
                        {"n_outcomes", 50},
                        {"n_traj_per_outcome", 20}};
    const std::string dir = temp_dir("cli_exp_measure");
    CHECK_NOTHROW(run_experiment(parse_config_text(j.dump()), dir, 1));
    CHECK(std::filesystem::exists(dir + "/summary.json"));
}

TEST_CASE("shipped spin-boson compare run meets its documented bounds") {
    const std::string config_path = std::string(KELSIM_CONFIG_DIR) + "/spinboson.json";
    REQUIRE(std::filesystem::exists(config_path));
    const RunConfig config = load_config_file(config_path);
    const std::string dir = temp_dir("cli_shipped_spinboson");
    run_experiment(config, dir, 1);

    const auto summary = nlohmann::json::parse(read_file(dir + "/summary.json"));
    CHECK(summary.at("compare").at("td_svne_oracle").get<double>() <= 0.02);
    CHECK(summary.at("ensemble").at("reliable").get<bool>());
}

TEST_CASE("cli binary round trip: exit codes and byte-stable output") {
    const std::string dir = temp_dir("cli_binary");
    const std::string config_path = dir + "/config.json";
    {
        std::ofstream out(config_path, std::ios::binary);
        out << kTinyConfig;
    }

    const std::string cli = KELSIM_CLI_PATH;
    const std::string run_a = cli + " --config " + config_path + " --out " + dir + "/a" +
                              " --threads 1 > /dev/null 2>&1";
    const std::string run_b = cli + " --config " + config_path + " --out " + dir + "/b" +
                              " --threads 2 > /dev/null 2>&1";
    REQUIRE(std::system(run_a.c_str()) == 0);
    REQUIRE(std::system(run_b.c_str()) == 0);
    CHECK(read_file(dir + "/a/series.csv") == read_file(dir + "/b/series.csv"));

    // Schema violation: exit code 2.
    const std::string bad_path = dir + "/bad.json";
    {
        std::ofstream out(bad_path, std::ios::binary);
        out << "{\"experiment\": \"svne\"}";
    }
    const int bad_status =
        std::system((cli + " --config " + bad_path + " --out " + dir + " > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(bad_status) == 2);

    // Seed override changes the stream.
    REQUIRE(std::system((cli + " --config " + config_path + " --out " + dir + "/c" +
                         " --threads 1 --seed 99 > /dev/null 2>&1")
                            .c_str()) == 0);
    CHECK(read_file(dir + "/a/series.csv") != read_file(dir + "/c/series.csv"));
}
