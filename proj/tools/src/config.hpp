// config.hpp — JSON run configuration for the kelsim command line tool.

#pragma once

#include "kelsim/bath_model.hpp"
#include "kelsim/contour.hpp"
#include "kelsim/linalg.hpp"
#include "kelsim/measurement.hpp"
#include "kelsim/noise_sampler.hpp"
#include "kelsim/oracle.hpp"
#include "kelsim/svne.hpp"
#include "kelsim/system_model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kelsim::cli {

// Schema violations; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Experiment {
    svne,
    twostate,
    deterministic,
    oracle,
    noise_validate,
    wick_verify,
    measure_demo,
    compare,
};

struct NamedObservable {
    std::string name;
    ComplexMatrix matrix;
};

struct RunConfig {
    Experiment experiment = Experiment::svne;
    SystemSpec system;
    BathSpec bath;
    TimeGrid grid;
    ComplexMatrix initial_state;
    SamplerConfig sampler;
    long n_traj = 1000;
    std::uint64_t base_seed = 0;
    int threads = 0;  // 0: decide at run time
    double blowup_guard = 1e6;
    std::vector<NamedObservable> observables;

    std::optional<FockConfig> fock;              // oracle / compare
    std::optional<PreparationSpec> preparation;  // correlated oracle runs

    // wick_verify
    int wick_m_max = 2;
    double wick_tolerance = 1e-10;

    // measure_demo
    std::optional<MeasurementSpec> measurement;
    int n_outcomes = 100;
    long n_traj_per_outcome = 100;

    // noise_validate
    bool noise_dump = false;

    std::uint64_t config_hash = 0;  // FNV-1a of the raw config bytes
};

// Parses and validates a config; throws ConfigError with a field path on any
// schema problem.
RunConfig parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path);

std::string experiment_name(Experiment e);

}  // namespace kelsim::cli
