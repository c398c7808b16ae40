#include "config.hpp"

#include "json.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace kelsim::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

Complex parse_complex(const json& j, const std::string& where) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_object()) {
        const double re = j.contains("re") ? j.at("re").get<double>() : 0.0;
        const double im = j.contains("im") ? j.at("im").get<double>() : 0.0;
        return Complex(re, im);
    }
    fail(where, "expected a number or {re, im}");
}

ComplexMatrix parse_matrix(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where, "expected a nonempty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j.at(0).size();
    ComplexMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j.at(r);
        if (!row.is_array() || row.size() != cols) fail(where, "ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_complex(row.at(c), where);
        }
    }
    return m;
}

double parse_beta(const json& j, const std::string& where) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        fail(where, "beta string must be \"inf\"");
    }
    return j.get<double>();
}

Experiment parse_experiment(const std::string& name) {
    if (name == "svne") return Experiment::svne;
    if (name == "twostate") return Experiment::twostate;
    if (name == "deterministic") return Experiment::deterministic;
    if (name == "oracle") return Experiment::oracle;
    if (name == "noise_validate") return Experiment::noise_validate;
    if (name == "wick_verify") return Experiment::wick_verify;
    if (name == "measure_demo") return Experiment::measure_demo;
    if (name == "compare") return Experiment::compare;
    fail("experiment", "unknown experiment '" + name + "'");
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::svne: return "svne";
        case Experiment::twostate: return "twostate";
        case Experiment::deterministic: return "deterministic";
        case Experiment::oracle: return "oracle";
        case Experiment::noise_validate: return "noise_validate";
        case Experiment::wick_verify: return "wick_verify";
        case Experiment::measure_demo: return "measure_demo";
        case Experiment::compare: return "compare";
    }
    return "unknown";
}

RunConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail("config", std::string("invalid JSON: ") + e.what());
    }

    RunConfig config;
    config.config_hash = fnv1a(text);
    try {
        config.experiment = parse_experiment(j.at("experiment").get<std::string>());

        const json& sys = j.at("system");
        config.system.h_s = parse_matrix(sys.at("h_s"), "system.h_s");
        for (std::size_t a = 0; a < sys.at("couplings").size(); ++a) {
            const json& c = sys.at("couplings").at(a);
            config.system.couplings.push_back(
                parse_matrix(c.at("matrix"), "system.couplings.matrix"));
            config.system.labels.push_back(c.contains("label")
                                               ? c.at("label").get<std::string>()
                                               : "A" + std::to_string(a));
        }

        const json& bath = j.at("bath");
        for (const json& m : bath.at("modes")) {
            config.bath.modes.push_back(
                BathMode{m.at("omega").get<double>(),
                         m.contains("mass") ? m.at("mass").get<double>() : 1.0});
        }
        for (const json& row : bath.at("coupling")) {
            config.bath.coupling.push_back(row.get<std::vector<double>>());
        }
        const json& state = bath.at("state");
        const std::string kind = state.at("type").get<std::string>();
        if (kind == "thermal") {
            config.bath.state = BathState::thermal_state(parse_beta(state.at("beta"), "bath.state.beta"));
        } else if (kind == "displaced") {
            config.bath.state = BathState::displaced_state(
                parse_beta(state.at("beta"), "bath.state.beta"),
                state.at("mean_x").get<std::vector<double>>(),
                state.at("mean_p").get<std::vector<double>>());
        } else {
            fail("bath.state.type", "must be 'thermal' or 'displaced'");
        }

        const json& grid = j.at("grid");
        config.grid.t_max = grid.at("t_max").get<double>();
        config.grid.n_steps = grid.at("n_steps").get<int>();

        config.initial_state = parse_matrix(j.at("initial_state"), "initial_state");

        if (j.contains("sampler")) {
            const json& s = j.at("sampler");
            if (s.contains("method")) {
                const std::string m = s.at("method").get<std::string>();
                if (m == "contour_takagi") {
                    config.sampler.method = SamplerMethod::contour_takagi;
                } else if (m == "rotated_factorization") {
                    config.sampler.method = SamplerMethod::rotated_factorization;
                } else {
                    fail("sampler.method", "unknown method '" + m + "'");
                }
            }
            if (s.contains("eigen_clip")) config.sampler.eigen_clip = s.at("eigen_clip").get<double>();
        }

        if (j.contains("n_traj")) config.n_traj = j.at("n_traj").get<long>();
        if (j.contains("base_seed")) config.base_seed = j.at("base_seed").get<std::uint64_t>();
        config.sampler.base_seed = config.base_seed;
        if (j.contains("threads")) config.threads = j.at("threads").get<int>();
        if (j.contains("integrator") && j.at("integrator").contains("blowup_guard")) {
            config.blowup_guard = j.at("integrator").at("blowup_guard").get<double>();
        }

        if (j.contains("observables")) {
            for (const json& o : j.at("observables")) {
                config.observables.push_back(NamedObservable{
                    o.at("name").get<std::string>(),
                    parse_matrix(o.at("matrix"), "observables.matrix")});
            }
        }

        if (j.contains("fock")) {
            FockConfig fock;
            fock.cutoffs = j.at("fock").at("cutoffs").get<std::vector<int>>();
            if (j.at("fock").contains("tail_tol")) {
                fock.tail_tol = j.at("fock").at("tail_tol").get<double>();
            }
            config.fock = fock;
        }

        if (j.contains("preparation")) {
            PreparationSpec prep;
            prep.h_s_prime = parse_matrix(j.at("preparation").at("h_s_prime"),
                                          "preparation.h_s_prime");
            prep.b = j.at("preparation").at("b").get<double>();
            config.preparation = prep;
        }

        if (j.contains("wick")) {
            if (j.at("wick").contains("m_max")) config.wick_m_max = j.at("wick").at("m_max").get<int>();
            if (j.at("wick").contains("tolerance")) {
                config.wick_tolerance = j.at("wick").at("tolerance").get<double>();
            }
        }

        if (j.contains("measurement")) {
            MeasurementSpec spec;
            spec.sigma_x = j.at("measurement").at("sigma_x").get<std::vector<double>>();
            spec.sigma_p = j.at("measurement").at("sigma_p").get<std::vector<double>>();
            config.measurement = spec;
            if (j.at("measurement").contains("n_outcomes")) {
                config.n_outcomes = j.at("measurement").at("n_outcomes").get<int>();
            }
            if (j.at("measurement").contains("n_traj_per_outcome")) {
                config.n_traj_per_outcome =
                    j.at("measurement").at("n_traj_per_outcome").get<long>();
            }
        }

        if (j.contains("noise") && j.at("noise").contains("dump")) {
            config.noise_dump = j.at("noise").at("dump").get<bool>();
        }
    } catch (const json::exception& e) {
        fail("config", e.what());
    }

    // Structural validation before any allocation-heavy work.
    try {
        config.system.validate();
        config.bath.validate();
        config.grid.validate();
        if (config.initial_state.rows() != config.system.h_s.rows() ||
            config.initial_state.cols() != config.system.h_s.cols()) {
            fail("initial_state", "dimension mismatch with system.h_s");
        }
        if (config.bath.n_channels() != config.system.n_channels()) {
            fail("bath.coupling", "channel count must match system.couplings");
        }
        for (const auto& obs : config.observables) {
            if (obs.matrix.rows() != config.system.h_s.rows()) {
                fail("observables", "dimension mismatch for '" + obs.name + "'");
            }
        }
        if (config.measurement) {
            config.measurement->validate(static_cast<std::size_t>(config.bath.n_modes()));
        }
        if (config.n_traj <= 0) fail("n_traj", "must be positive");
    } catch (const std::invalid_argument& e) {
        fail("config", e.what());
    }
    return config;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace kelsim::cli
