#pragma once

// Command-line front end. `run` is the whole program; tools/magnonlink.cpp only
// forwards argv to it.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "magnonlink/dynamics.hpp"
#include "magnonlink/errors.hpp"
#include "magnonlink/experiments.hpp"
#include "magnonlink/fitting.hpp"
#include "magnonlink/format.hpp"
#include "magnonlink/io.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/sync_solver.hpp"

namespace magnonlink::cli {

namespace detail {

struct Source {
    std::string preset;
    std::string scenario;

    Scenario load() const {
        if (!preset.empty() && !scenario.empty()) throw InputError("give either --preset or --scenario, not both");
        if (!preset.empty()) return magnonlink::preset(preset);
        if (!scenario.empty()) return load_scenario(scenario);
        throw InputError("an input is required: --preset NAME or --scenario FILE");
    }
};

inline std::ofstream open_output(const std::string& path) {
    const std::filesystem::path p(path);
    const auto parent = p.parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw InputError("output directory '" + parent.string() + "' does not exist");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw InputError("cannot write output file '" + path + "'");
    return os;
}

inline std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

inline void add_source(CLI::App* sub, Source& src) {
    sub->add_option("--preset", src.preset, "preset name (positionA, positionB, remote_coherent, remote_dissipative)");
    sub->add_option("--scenario", src.scenario, "JSON scenario file");
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"magnonlink: traveling-wave mediated photon-magnon coupling with an active cavity"};
    app.require_subcommand(1);

    detail::Source src;
    std::string out_path;

    auto* dispersion = app.add_subcommand("dispersion", "all steady-state branches over the scenario's detuning grid");
    detail::add_source(dispersion, src);
    dispersion->add_option("--out", out_path, "CSV output")->required();

    std::string direction = "scenario";
    std::string map_path;
    double nu_min = std::nan(""), nu_max = std::nan(""), linewidth = std::nan("");
    int nu_points = 801;
    auto* sweep = app.add_subcommand("sweep", "quasi-static hysteresis sweep with branch following");
    detail::add_source(sweep, src);
    sweep->add_option("--out", out_path, "CSV output")->required();
    sweep->add_option("--direction", direction, "up, down, both (default: scenario setting)");
    sweep->add_option("--map", map_path, "also write a Lorentzian spectral map (matrix CSV)");
    sweep->add_option("--nu-min", nu_min, "map: lowest probe frequency (MHz)");
    sweep->add_option("--nu-max", nu_max, "map: highest probe frequency (MHz)");
    sweep->add_option("--nu-points", nu_points, "map: number of probe frequencies")->check(CLI::PositiveNumber);
    sweep->add_option("--linewidth", linewidth, "map: peak full width (MHz); default nu_c / 2.8e4");

    std::optional<double> delta_opt;
    double duration = 20.0, sample_dt = 1e-3, rtol = 1e-9, atol = 1e-12;
    std::uint64_t seed = 1;
    auto* timetrace = app.add_subcommand("timetrace", "integrate the equations of motion at one detuning");
    detail::add_source(timetrace, src);
    timetrace->add_option("--out", out_path, "CSV output (t_us, re_a, im_a, re_m, im_m)")->required();
    timetrace->add_option("--delta", delta_opt, "detuning (MHz); default nu_m - nu_c");
    timetrace->add_option("--duration", duration, "integration time (us)")->check(CLI::PositiveNumber);
    timetrace->add_option("--sample-dt", sample_dt, "sample spacing (us)")->check(CLI::PositiveNumber);
    timetrace->add_option("--rtol", rtol)->check(CLI::PositiveNumber);
    timetrace->add_option("--atol", atol)->check(CLI::PositiveNumber);
    timetrace->add_option("--seed", seed, "seed for the small random initial amplitudes");

    std::vector<double> sigmas;
    int sigma_points = 11;
    auto* sigma = app.add_subcommand("sigma", "couplings and strong-coupling criteria versus transmission");
    detail::add_source(sigma, src);
    sigma->add_option("--out", out_path, "CSV output")->required();
    sigma->add_option("--sigmas", sigmas, "explicit transmissions")->delimiter(',');
    sigma->add_option("--points", sigma_points, "evenly spaced transmissions on [0, 1]")->check(CLI::Range(2, 100000));

    std::optional<double> sigma_threshold;
    std::string mode_name = "auto";
    auto* distance = app.add_subcommand("distance", "longest cable that keeps strong coupling");
    detail::add_source(distance, src);
    distance->add_option("--sigma", sigma_threshold, "use this transmission as the strong-coupling limit")
        ->check(CLI::Range(0.0, 1.0));
    distance->add_option("--mode", mode_name, "coherent, dissipative or auto (from the link phase)");

    std::string data_path, free_list = "g,alpha";
    int starts = 8;
    std::uint64_t fit_seed = 20240611;
    auto* fit = app.add_subcommand("fit", "fit couplings and damping to measured (delta, nu_s) data");
    detail::add_source(fit, src);
    fit->add_option("--data", data_path, "CSV with delta_mhz,nu_s_mhz[,branch][,weight]")->required();
    fit->add_option("--free", free_list, "comma-separated subset of g,J,Gamma,alpha,nu_c");
    fit->add_option("--out", out_path, "JSON fit report");
    fit->add_option("--starts", starts)->check(CLI::PositiveNumber);
    fit->add_option("--seed", fit_seed);

    auto* presets = app.add_subcommand("presets", "list the built-in parameter presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (presets->parsed()) {
            for (const auto& name : preset_names()) {
                const Scenario sc = preset(name);
                const CouplingSet c = coupling_from_link(sc.params, sc.link);
                out << name << ": " << sc.metadata.at("quoted") << " | g=" << exact(c.g) << " J=" << exact(c.J)
                    << " Gamma=" << exact(c.Gamma) << " Re(alpha')=" << exact(c.re_alpha()) << " MHz, kappa="
                    << exact(sc.params.kappa) << " gamma=" << exact(sc.params.gamma) << " phi=" << exact(sc.link.phi)
                    << '\n';
            }
            out << "cavity: nu_c=" << exact(SystemParams{}.nu_c) << " MHz, beta=" << exact(SystemParams{}.beta)
                << " MHz\n";
            return 0;
        }

        const Scenario sc = src.load();
        const CouplingSet c = coupling_from_link(sc.params, sc.link);

        if (dispersion->parsed()) {
            auto os = detail::open_output(out_path);
            std::vector<double> grid = sc.delta_grid;
            std::sort(grid.begin(), grid.end());
            const auto curve = dispersion_curve(grid, c, sc.params);
            write_dispersion_csv(os, curve);
            const FoldPoints f = fold_points(c);
            out << "dispersion: " << curve.size() << " detunings; folds "
                << (f.exists ? "at " + exact(f.delta_down) + " and " + exact(f.delta_up) + " MHz" : "absent") << '\n';
            return 0;
        }

        if (sweep->parsed()) {
            const SweepDirection dir = direction == "scenario" ? sc.sweep : parse_direction(direction);
            std::optional<HysteresisLoop> loop;
            std::optional<SweepTrace> single;
            std::vector<const SweepTrace*> traces;
            if (dir == SweepDirection::both) {
                loop = hysteresis_loop(sc);
                traces = {&loop->up, &loop->down};
            } else {
                single = hysteresis_sweep(sc, dir);
                traces = {&*single};
            }
            auto os = detail::open_output(out_path);
            write_sweep_csv(os, traces);
            if (!map_path.empty()) {
                auto mos = detail::open_output(map_path);
                const double lo = std::isnan(nu_min) ? sc.params.nu_c - 80.0 : nu_min;
                const double hi = std::isnan(nu_max) ? sc.params.nu_c + 80.0 : nu_max;
                if (!(hi > lo) || nu_points < 2) throw InputError("map needs nu-max > nu-min and at least 2 points");
                std::vector<double> nu(static_cast<std::size_t>(nu_points));
                for (int k = 0; k < nu_points; ++k) nu[k] = lo + (hi - lo) * k / (nu_points - 1);
                const double lw = std::isnan(linewidth) ? default_linewidth(sc.params) : linewidth;
                for (const SweepTrace* tr : traces) {
                    const auto map = spectra_map(*tr, nu, lw);
                    mos << "# direction=" << to_string(tr->direction) << '\n';
                    write_matrix(mos, map);
                }
            }
            std::string summary = "sweep " + sc.name + ":";
            for (const SweepTrace* tr : traces) {
                summary += " " + std::string(to_string(tr->direction)) + " jumps [";
                for (std::size_t k = 0; k < tr->jumps.size(); ++k)
                    summary += (k ? ", " : "") + detail::fixed(tr->jumps[k], 2);
                summary += "] MHz;";
            }
            summary.pop_back();
            out << summary << '\n';
            return 0;
        }

        if (timetrace->parsed()) {
            const double delta = delta_opt ? *delta_opt : sc.params.detuning();
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            const std::complex<double> a0(1e-3 * u(rng), 1e-3 * u(rng));
            const std::complex<double> m0(1e-3 * u(rng), 1e-3 * u(rng));
            IntegratorOptions opts;
            opts.rtol = rtol;
            opts.atol = atol;
            opts.sample_dt = sample_dt;
            const TimeTrace trace = integrate(sc.params, c, delta, a0, m0, duration, opts);
            auto os = detail::open_output(out_path);
            write_trace_csv(os, trace);
            const SteadyEstimate est = extract_steady_state(trace, duration / 4.0);
            out << "timetrace: " << trace.meta.steps << " steps; nu_s="
                << exact(est.nu_s) << " MHz, theta=" << detail::fixed(est.theta, 4) << " rad, |a|="
                << detail::fixed(est.A, 4) << ", |m|=" << detail::fixed(est.M, 4)
                << (est.converged ? ", converged" : ", not converged") << '\n';
            return 0;
        }

        if (sigma->parsed()) {
            std::vector<double> grid = sigmas;
            if (grid.empty())
                for (int k = 0; k < sigma_points; ++k) grid.push_back(static_cast<double>(k) / (sigma_points - 1));
            const auto rows = sigma_sweep(sc, grid);
            auto os = detail::open_output(out_path);
            write_sigma_csv(os, rows);
            const auto strong = std::count_if(rows.begin(), rows.end(), [](const SigmaPoint& r) {
                return r.report.strong_coherent || r.report.strong_dissipative;
            });
            out << "sigma: " << rows.size() << " transmissions, " << strong << " strongly coupled\n";
            return 0;
        }

        if (distance->parsed()) {
            CouplingMode mode;
            if (mode_name == "coherent") mode = CouplingMode::coherent;
            else if (mode_name == "dissipative") mode = CouplingMode::dissipative;
            else if (mode_name == "auto")
                mode = std::abs(std::sin(sc.link.phi)) >= std::abs(std::cos(sc.link.phi)) ? CouplingMode::coherent
                                                                                           : CouplingMode::dissipative;
            else throw InputError("mode must be coherent, dissipative or auto");
            const DistanceEstimate est = max_strong_coupling_distance(sc.params, sc.link, mode, sigma_threshold);
            const std::string mode_str = mode == CouplingMode::coherent ? "coherent" : "dissipative";
            const std::string method = est.method == DistanceEstimate::Method::threshold ? "threshold" : "bisection";
            if (est.method == DistanceEstimate::Method::bisection && !est.strong) {
                out << "distance: never strong (" << mode_str << " coupling never exceeds Re(alpha') for sigma in (0, 1])\n";
                return 0;
            }
            out << "distance: " << detail::fixed(est.length_m, 1) << " m (" << mode_str << ", sigma="
                << exact(est.sigma) << ", " << method << ", L=" << exact(est.length_m) << " m";
            if (est.method == DistanceEstimate::Method::threshold)
                out << ", model criterion at this sigma: " << (est.strong ? "strong" : "not strong");
            out << ")\n";
            return 0;
        }

        if (fit->parsed()) {
            std::ifstream in(data_path);
            if (!in) throw InputError("cannot open data file '" + data_path + "'");
            const DispersionData data = read_dispersion_csv(in);
            std::vector<FitParameter> free;
            std::stringstream ss(free_list);
            for (std::string tok; std::getline(ss, tok, ',');)
                if (!tok.empty()) free.push_back(parse_fit_parameter(tok));
            DispersionModel init{c, sc.params};
            FitOptions opts;
            opts.starts = starts;
            opts.seed = fit_seed;
            const FitResult res = fit_dispersion(data, free, init, opts);
            const json report = fit_report_json(res, free, data.points.size());
            if (!out_path.empty()) {
                auto os = detail::open_output(out_path);
                os << report.dump(2) << '\n';
            }
            std::string summary = "fit:";
            for (const auto& [k, v] : res.params) summary += " " + k + "=" + detail::fixed(v, 4);
            out << summary << " MHz; rms=" << exact(res.rms_residual) << " MHz"
                << (res.converged ? "" : " (not converged)") << '\n';
            return res.converged ? 0 : 2;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace magnonlink::cli
