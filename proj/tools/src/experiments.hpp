// experiments.hpp — experiment dispatch and artifact emission for the CLI.

#pragma once

#include "config.hpp"

#include <string>

namespace kelsim::cli {

// Resource-cap violations map to exit code 3, numerical failures to 4.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runs the configured experiment and writes series.csv / summary.json (and
// optional auxiliary artifacts) into out_dir. Throws on failure.
void run_experiment(const RunConfig& config, const std::string& out_dir, int threads);

}  // namespace kelsim::cli
