#include "experiments.hpp"

#include "kelsim/measurement.hpp"
#include "kelsim/oracle.hpp"
#include "kelsim/propagator.hpp"
#include "kelsim/tolerances.hpp"
#include "kelsim/wick.hpp"

#include "json.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

namespace kelsim::cli {

using nlohmann::json;

namespace {

// Fixed-format doubles so reruns are byte-identical.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct SeriesColumn {
    std::string name;
    std::vector<Complex> mean;
    std::vector<double> se_re;
    std::vector<double> se_im;
};

void write_series_csv(const std::string& path, const TimeGrid& grid,
                      const std::vector<SeriesColumn>& columns) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "time";
    for (const auto& col : columns) {
        out << "," << col.name << "_re," << col.name << "_im," << col.name << "_re_se,"
            << col.name << "_im_se";
    }
    out << "\n";
    for (int j = 0; j < grid.n_nodes(); ++j) {
        out << fmt(grid.node(j));
        for (const auto& col : columns) {
            const auto ju = static_cast<std::size_t>(j);
            out << "," << fmt(col.mean[ju].real()) << "," << fmt(col.mean[ju].imag()) << ","
                << fmt(col.se_re[ju]) << "," << fmt(col.se_im[ju]);
        }
        out << "\n";
    }
}

std::vector<SeriesColumn> columns_from_ensemble(const RunConfig& config,
                                                const EnsembleResult& result) {
    std::vector<SeriesColumn> columns;
    for (std::size_t o = 0; o < config.observables.size(); ++o) {
        columns.push_back(SeriesColumn{config.observables[o].name,
                                       result.observables[o].mean,
                                       result.observables[o].se_re,
                                       result.observables[o].se_im});
    }
    return columns;
}

std::vector<SeriesColumn> columns_from_states(const RunConfig& config,
                                              const std::vector<ComplexMatrix>& states) {
    std::vector<SeriesColumn> columns;
    const std::size_t n = states.size();
    for (const auto& obs : config.observables) {
        SeriesColumn col;
        col.name = obs.name;
        col.mean.resize(n);
        col.se_re.assign(n, 0.0);
        col.se_im.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) col.mean[j] = (obs.matrix * states[j]).trace();
        columns.push_back(std::move(col));
    }
    return columns;
}

json ensemble_summary(const EnsembleResult& result) {
    json out;
    out["n_used"] = result.n_used;
    out["n_flagged"] = result.n_flagged;
    out["reliable"] = result.reliable();
    out["max_hermiticity_z"] = result.max_hermiticity_z;
    double max_trace_dev = 0.0;
    for (std::size_t j = 0; j < result.trace_mean.size(); ++j) {
        max_trace_dev = std::max(max_trace_dev, std::abs(result.trace_mean[j] - Complex(1, 0)));
    }
    out["max_trace_deviation"] = max_trace_dev;
    return out;
}

EnsembleResult run_ensemble_for(const RunConfig& config, int threads, UnravelingKind kind) {
    const InteractionPictureCache cache(config.system, config.grid);
    const NoiseSampler sampler(config.bath, config.grid, config.sampler);
    EnsembleOptions options;
    options.kind = kind;
    options.n_traj = config.n_traj;
    options.threads = threads;
    options.blowup_guard = config.blowup_guard;

    std::vector<ComplexMatrix> obs;
    for (const auto& o : config.observables) obs.push_back(o.matrix);

    const bool shifted = config.bath.state.kind != BathStateKind::thermal;
    if (shifted && kind == UnravelingKind::svne) options.kind = UnravelingKind::svne_shifted;
    MeanFieldTable mf;
    if (options.kind == UnravelingKind::svne_shifted) {
        mf = MeanFieldTable::from_bath(config.bath, config.grid);
    }
    return run_ensemble(cache, sampler, config.grid, config.initial_state, options, obs,
                        options.kind == UnravelingKind::svne_shifted ? &mf : nullptr);
}

std::vector<ComplexMatrix> run_oracle_states(const RunConfig& config) {
    if (!config.fock) throw ConfigError("oracle: missing fock config");
    JointState joint;
    if (config.preparation) {
        joint = correlated_initial_state(config.system, config.bath, *config.preparation,
                                         *config.fock);
    } else {
        joint.matrix = kron(config.initial_state, env_initial_state(config.bath, *config.fock));
    }
    return evolve_exact(joint, config.system, config.bath, *config.fock, config.grid);
}

double series_trace_distance(const std::vector<ComplexMatrix>& a,
                             const std::vector<ComplexMatrix>& b, bool symmetrize_a) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const ComplexMatrix lhs = symmetrize_a ? ComplexMatrix(0.5 * (a[j] + a[j].adjoint()))
                                               : a[j];
        worst = std::max(worst, trace_distance(lhs, b[j]));
    }
    return worst;
}

void write_noise_dump(const std::string& path, const NoiseSampler& sampler, long n_traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const char magic[8] = {'K', 'S', 'N', 'O', 'I', 'S', 'E', '1'};
    out.write(magic, 8);
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(n_traj),
                                     static_cast<std::uint32_t>(sampler.n_channels()),
                                     static_cast<std::uint32_t>(sampler.n_nodes())};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (long i = 0; i < n_traj; ++i) {
        const NoiseTrajectory traj = sampler.sample(static_cast<std::uint64_t>(i));
        auto write_vec = [&](const ComplexVector& v) {
            for (Eigen::Index k = 0; k < v.size(); ++k) {
                const double pair[2] = {v(k).real(), v(k).imag()};
                out.write(reinterpret_cast<const char*>(pair), sizeof(pair));
            }
        };
        write_vec(traj.nu);
        write_vec(traj.eta);
    }
}

}  // namespace

void run_experiment(const RunConfig& config, const std::string& out_dir, int threads) {
    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/series.csv";
    const std::string summary_path = out_dir + "/summary.json";

    json summary;
    summary["experiment"] = experiment_name(config.experiment);
    summary["config_hash"] = config.config_hash;
    summary["base_seed"] = config.base_seed;
    summary["threads"] = threads;

    bool unreliable = false;
    try {
        switch (config.experiment) {
            case Experiment::svne:
            case Experiment::twostate: {
                const UnravelingKind kind = config.experiment == Experiment::twostate
                                                ? UnravelingKind::two_state
                                                : UnravelingKind::svne;
                const EnsembleResult result = run_ensemble_for(config, threads, kind);
                summary["ensemble"] = ensemble_summary(result);
                summary["n_traj"] = config.n_traj;
                write_series_csv(csv_path, config.grid, columns_from_ensemble(config, result));
                unreliable = !result.reliable();
                break;
            }
            case Experiment::deterministic: {
                const auto states =
                    evolve_ferialdi(config.system, config.bath, config.initial_state, config.grid);
                write_series_csv(csv_path, config.grid, columns_from_states(config, states));
                break;
            }
            case Experiment::oracle: {
                const auto states = run_oracle_states(config);
                write_series_csv(csv_path, config.grid, columns_from_states(config, states));
                break;
            }
            case Experiment::noise_validate: {
                const NoiseSampler sampler(config.bath, config.grid, config.sampler);
                EmpiricalMoments moments(config.bath.n_channels() * config.grid.n_nodes());
                for (long i = 0; i < config.n_traj; ++i) {
                    moments.add(sampler.sample(static_cast<std::uint64_t>(i)));
                }
                const ComplexMatrix target_nn =
                    nu_covariance(config.bath, config.grid).cast<Complex>();
                const ComplexMatrix target_ne =
                    Complex(0, 1) * retarded_kernel(config.bath, config.grid).cast<Complex>();
                auto max_z = [](const ComplexMatrix& emp, const ComplexMatrix& tgt,
                                const RealMatrix& se) {
                    // SE floor: structurally-zero entries carry only roundoff.
                    const double floor = 1e-10 * (1.0 + max_abs(tgt));
                    double worst = 0.0;
                    for (Eigen::Index i = 0; i < emp.rows(); ++i) {
                        for (Eigen::Index j = 0; j < emp.cols(); ++j) {
                            worst = std::max(worst, std::abs(emp(i, j) - tgt(i, j)) /
                                                        std::max(se(i, j), floor));
                        }
                    }
                    return worst;
                };
                const double z_nn = max_z(moments.mean_nu_nu(), target_nn, moments.se_nu_nu());
                const double z_ne = max_z(moments.mean_nu_eta(), target_ne, moments.se_nu_eta());
                const double z_ee = max_z(moments.mean_eta_eta(),
                                          ComplexMatrix::Zero(target_nn.rows(), target_nn.cols()),
                                          moments.se_eta_eta());
                summary["noise"] = {{"n_traj", config.n_traj},
                                    {"max_z_nu_nu", z_nn},
                                    {"max_z_nu_eta", z_ne},
                                    {"max_z_eta_eta", z_ee},
                                    {"clipped_mass", sampler.clipped_mass()},
                                    {"pass_5se", z_nn < tol::noise_z && z_ne < tol::noise_z &&
                                                     z_ee < tol::noise_z}};
                if (config.noise_dump) {
                    write_noise_dump(out_dir + "/noise.bin", sampler, config.n_traj);
                    summary["noise"]["dump"] = "noise.bin";
                }
                write_series_csv(csv_path, config.grid, {});
                break;
            }
            case Experiment::wick_verify: {
                const WickVerifyReport report =
                    verify_substitution_on_grid(config.system, config.bath, config.grid,
                                                config.initial_state, config.wick_m_max,
                                                config.wick_tolerance);
                json terms = json::array();
                for (const auto& t : report.terms) {
                    terms.push_back({{"m", t.m}, {"k", t.k}, {"residual", t.residual}});
                }
                summary["wick"] = {{"terms", terms},
                                   {"max_residual", report.max_residual},
                                   {"pass", report.pass}};
                write_series_csv(csv_path, config.grid, {});
                if (!report.pass) {
                    throw NumericalError("wick_verify: identity violated at (m,k) = (" +
                                         std::to_string(report.offending_m) + "," +
                                         std::to_string(report.offending_k) + ")");
                }
                break;
            }
            case Experiment::measure_demo: {
                if (!config.measurement) throw ConfigError("measure_demo: missing measurement");
                SemiclassicalConfig mc;
                mc.spec = *config.measurement;
                mc.grid = config.grid;
                mc.n_outcomes = config.n_outcomes;
                mc.n_traj_per_outcome = config.n_traj_per_outcome;
                mc.base_seed = config.base_seed;
                mc.threads = threads;
                std::vector<ComplexMatrix> reference;
                if (config.fock) reference = run_oracle_states(config);
                const SemiclassicalReport report = semiclassical_experiment(
                    config.system, config.bath, mc, config.initial_state, reference);
                summary["measurement"] = {
                    {"ratio_x", report.ratio_x},
                    {"ratio_p", report.ratio_p},
                    {"sigma_product", report.sigma_product},
                    {"in_regime", report.in_regime},
                    {"max_autocorr_rel_dev", report.max_autocorr_rel_dev},
                    {"max_autocorr_z", report.max_autocorr_z},
                    {"nu_y_share", report.nu_y_share},
                    {"flagged", report.flagged},
                };
                if (!report.restoration_td.empty()) {
                    summary["measurement"]["max_restoration_td"] = report.max_restoration_td;
                }
                // The restored series exists only when conditioned ensembles ran.
                write_series_csv(csv_path, config.grid,
                                 report.restored_mean.empty()
                                     ? std::vector<SeriesColumn>{}
                                     : columns_from_states(config, report.restored_mean));
                break;
            }
            case Experiment::compare: {
                const EnsembleResult result =
                    run_ensemble_for(config, threads, UnravelingKind::svne);
                summary["ensemble"] = ensemble_summary(result);
                summary["n_traj"] = config.n_traj;
                write_series_csv(csv_path, config.grid, columns_from_ensemble(config, result));
                unreliable = !result.reliable();

                json metrics;
                const auto deterministic =
                    evolve_ferialdi(config.system, config.bath, config.initial_state, config.grid);
                metrics["td_svne_deterministic"] =
                    series_trace_distance(result.mean_rho, deterministic, true);
                if (config.fock) {
                    const auto oracle_states = run_oracle_states(config);
                    metrics["td_svne_oracle"] =
                        series_trace_distance(result.mean_rho, oracle_states, true);
                    metrics["td_deterministic_oracle"] =
                        series_trace_distance(deterministic, oracle_states, false);
                }
                summary["compare"] = metrics;
                break;
            }
        }
    } catch (const std::bad_alloc&) {
        throw ResourceError("out of memory");
    }

    std::ofstream out(summary_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + summary_path);
    out << summary.dump(2) << "\n";

    if (unreliable) {
        throw NumericalError("ensemble unreliable: flagged trajectories exceed budget");
    }
}

}  // namespace kelsim::cli
