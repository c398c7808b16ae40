// kelsim command line entry point.

#include "config.hpp"
#include "experiments.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

int default_threads() {
    if (const char* env = std::getenv("KELSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void emit_error(const std::string& kind, const std::string& message) {
    nlohmann::json err;
    err["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kelsim: stochastic and deterministic simulation of open quantum systems "
                 "coupled to Gaussian environments"};

    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    app.add_option("--config", config_path, "Path to the JSON run configuration")->required();
    app.add_option("--out", out_dir, "Output directory for series.csv and summary.json");
    app.add_option("--threads", threads, "Worker thread count (default: KELSIM_THREADS or hardware)");
    app.add_option("--seed", seed_override, "Override the config base seed")
        ->each([&](const std::string&) { seed_given = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        kelsim::cli::RunConfig config = kelsim::cli::load_config_file(config_path);
        if (seed_given) {
            config.base_seed = seed_override;
            config.sampler.base_seed = seed_override;
        }
        int effective_threads = threads > 0 ? threads : config.threads;
        if (effective_threads <= 0) effective_threads = default_threads();
        kelsim::cli::run_experiment(config, out_dir, effective_threads);
        return 0;
    } catch (const kelsim::cli::ConfigError& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        emit_error("config", e.what());
        return 2;
    } catch (const kelsim::cli::ResourceError& e) {
        emit_error("resource", e.what());
        return 3;
    } catch (const kelsim::cli::NumericalError& e) {
        emit_error("numerical", e.what());
        return 4;
    } catch (const std::exception& e) {
        const std::string what = e.what();
        if (what.find("cap") != std::string::npos) {
            emit_error("resource", what);
            return 3;
        }
        emit_error("numerical", what);
        return 4;
    }
}
