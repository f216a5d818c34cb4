#pragma once

// File formats: JSON scenarios, CSV result tables, spectral-map matrices,
// dispersion-data CSV and JSON fit reports. Every number is written in its
// shortest round-trip form.

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "magnonlink/errors.hpp"
#include "magnonlink/experiments.hpp"
#include "magnonlink/fitting.hpp"
#include "magnonlink/format.hpp"

namespace magnonlink {

using json = nlohmann::json;

namespace detail {

inline const std::set<std::string>& scenario_keys() {
    static const std::set<std::string> keys{
        "name",  "nu_c",  "beta", "N",     "eps",           "kappa",      "nu_m",       "alpha",
        "gamma", "g",     "phi",  "sigma", "atten_db_per_m", "baseline_m", "delta_grid", "delta_min",
        "delta_max", "delta_step", "sweep", "metadata"};
    return keys;
}

inline double number(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number()) throw InputError(std::string("scenario key '") + key + "' must be a number");
    return v.get<double>();
}

}  // namespace detail

/// Parses the flat scenario schema; absent keys keep their defaults, unknown
/// keys are rejected.
inline Scenario scenario_from_json(const json& j) {
    if (!j.is_object()) throw InputError("scenario must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!detail::scenario_keys().contains(key)) throw InputError("unknown scenario key '" + key + "'");

    Scenario sc;
    sc.name = j.value("name", std::string("scenario"));
    sc.delta_grid = linear_grid(-60.0, 60.0, 0.5);
    auto set = [&](const char* key, double& field) {
        if (j.contains(key)) field = detail::number(j, key);
    };
    SystemParams& p = sc.params;
    set("nu_c", p.nu_c);
    p.nu_m = p.nu_c;
    set("beta", p.beta);
    set("N", p.N);
    set("eps", p.eps);
    set("kappa", p.kappa);
    set("nu_m", p.nu_m);
    set("alpha", p.alpha);
    set("gamma", p.gamma);
    set("g", p.g);
    set("phi", sc.link.phi);
    set("sigma", sc.link.sigma);
    set("atten_db_per_m", sc.link.atten_db_per_m);
    set("baseline_m", sc.link.baseline_m);

    const bool has_range = j.contains("delta_min") || j.contains("delta_max") || j.contains("delta_step");
    if (j.contains("delta_grid") && has_range) throw InputError("give either delta_grid or delta_min/max/step");
    if (j.contains("delta_grid")) {
        if (!j.at("delta_grid").is_array()) throw InputError("delta_grid must be an array of numbers");
        sc.delta_grid.clear();
        for (const auto& v : j.at("delta_grid")) {
            if (!v.is_number()) throw InputError("delta_grid must be an array of numbers");
            sc.delta_grid.push_back(v.get<double>());
        }
    } else if (has_range) {
        if (!(j.contains("delta_min") && j.contains("delta_max") && j.contains("delta_step")))
            throw InputError("delta_min, delta_max and delta_step must be given together");
        sc.delta_grid = linear_grid(detail::number(j, "delta_min"), detail::number(j, "delta_max"),
                                    detail::number(j, "delta_step"));
    }
    if (j.contains("sweep")) {
        if (!j.at("sweep").is_string()) throw InputError("sweep must be \"up\", \"down\" or \"both\"");
        sc.sweep = parse_direction(j.at("sweep").get<std::string>());
    }
    if (j.contains("metadata")) {
        if (!j.at("metadata").is_object()) throw InputError("metadata must be an object of strings");
        for (const auto& [k, v] : j.at("metadata").items()) {
            if (!v.is_string()) throw InputError("metadata values must be strings");
            sc.metadata[k] = v.get<std::string>();
        }
    }
    validate(sc);
    return sc;
}

inline json scenario_to_json(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["nu_c"] = sc.params.nu_c;
    j["beta"] = sc.params.beta;
    j["N"] = sc.params.N;
    j["eps"] = sc.params.eps;
    j["kappa"] = sc.params.kappa;
    j["nu_m"] = sc.params.nu_m;
    j["alpha"] = sc.params.alpha;
    j["gamma"] = sc.params.gamma;
    j["g"] = sc.params.g;
    j["phi"] = sc.link.phi;
    j["sigma"] = sc.link.sigma;
    j["atten_db_per_m"] = sc.link.atten_db_per_m;
    j["baseline_m"] = sc.link.baseline_m;
    j["delta_grid"] = sc.delta_grid;
    j["sweep"] = std::string(to_string(sc.sweep));
    if (!sc.metadata.empty()) j["metadata"] = sc.metadata;
    return j;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open scenario file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InputError("malformed JSON in '" + path + "': " + e.what());
    }
    return scenario_from_json(j);
}

inline void write_sweep_csv(std::ostream& os, const std::vector<const SweepTrace*>& traces) {
    os << "direction,delta_mhz,nu_s_mhz,theta_rad,r,stable,branch_count\n";
    for (const SweepTrace* tr : traces) {
        for (const auto& pt : tr->points) {
            os << to_string(tr->direction) << ',' << exact(pt.delta) << ',';
            if (pt.selected) {
                os << exact(pt.selected->nu_s) << ',' << exact(pt.selected->theta) << ',' << exact(pt.selected->r)
                   << ',' << (pt.selected->stable ? 1 : 0);
            } else {
                os << "nan,nan,nan,0";
            }
            os << ',' << pt.branches.size() << '\n';
        }
    }
}

inline void write_dispersion_csv(std::ostream& os, const std::vector<DispersionPoint>& curve) {
    os << "delta_mhz,branch,nu_s_mhz,theta_rad,r,A,M,stable,branch_count\n";
    for (const auto& pt : curve) {
        for (std::size_t b = 0; b < pt.branches.size(); ++b) {
            const auto& s = pt.branches[b];
            os << exact(pt.delta) << ',' << b << ',' << exact(s.nu_s) << ',' << exact(s.theta) << ',' << exact(s.r)
               << ',' << exact(s.A) << ',' << exact(s.M) << ',' << (s.stable ? 1 : 0) << ',' << pt.branches.size()
               << '\n';
        }
    }
}

inline void write_sigma_csv(std::ostream& os, const std::vector<SigmaPoint>& rows) {
    os << "sigma,J_mhz,Gamma_mhz,re_alpha_eff_mhz,im_alpha_eff_mhz,strong_coherent,strong_dissipative,"
          "cooperativity,cable_length_m\n";
    for (const auto& r : rows) {
        os << exact(r.sigma) << ',' << exact(r.coupling.J) << ',' << exact(r.coupling.Gamma) << ','
           << exact(r.coupling.alpha_eff.real()) << ',' << exact(r.coupling.alpha_eff.imag()) << ','
           << (r.report.strong_coherent ? 1 : 0) << ',' << (r.report.strong_dissipative ? 1 : 0) << ','
           << exact(r.report.cooperativity) << ',' << (r.cable_length_m ? exact(*r.cable_length_m) : "inf") << '\n';
    }
}

/// First row: "delta_mhz\nu_mhz" followed by the column frequencies; then one
/// row per detuning.
inline void write_matrix(std::ostream& os, const SpectralMap& map) {
    os << "delta_mhz\\nu_mhz";
    for (double nu : map.col_nu) os << ',' << exact(nu);
    os << '\n';
    for (std::size_t r = 0; r < map.rows(); ++r) {
        os << exact(map.row_delta[r]);
        for (std::size_t c = 0; c < map.cols(); ++c) os << ',' << exact(map.at(r, c));
        os << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) {
        while (!cur.empty() && (cur.back() == '\r' || cur.back() == ' ')) cur.pop_back();
        while (!cur.empty() && cur.front() == ' ') cur.erase(cur.begin());
        out.push_back(cur);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InputError("line " + std::to_string(line_no) + ": '" + s + "' is not a number");
    }
}

}  // namespace detail

/// Reads delta_mhz,nu_s_mhz[,branch][,weight] with a header row.
inline DispersionData read_dispersion_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("dispersion CSV is empty");
    const auto header = detail::split_csv(line);
    int col_delta = -1, col_nu = -1, col_branch = -1, col_weight = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "delta_mhz") col_delta = static_cast<int>(i);
        else if (header[i] == "nu_s_mhz") col_nu = static_cast<int>(i);
        else if (header[i] == "branch") col_branch = static_cast<int>(i);
        else if (header[i] == "weight") col_weight = static_cast<int>(i);
        else throw InputError("unknown dispersion CSV column '" + header[i] + "'");
    }
    if (col_delta < 0 || col_nu < 0) throw InputError("dispersion CSV needs delta_mhz and nu_s_mhz columns");
    DispersionData data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size())
            throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " fields");
        DispersionData::Point pt{detail::parse_double(f[col_delta], line_no), detail::parse_double(f[col_nu], line_no),
                                 col_branch >= 0 ? parse_hint(f[col_branch]) : BranchHint::none};
        data.points.push_back(pt);
        if (col_weight >= 0) data.weights.push_back(detail::parse_double(f[col_weight], line_no));
    }
    return data;
}

inline void write_dispersion_data_csv(std::ostream& os, const DispersionData& data) {
    os << "delta_mhz,nu_s_mhz,branch" << (data.weights.empty() ? "" : ",weight") << '\n';
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        const auto& p = data.points[i];
        os << exact(p.delta) << ',' << exact(p.nu_s) << ',' << to_string(p.hint);
        if (!data.weights.empty()) os << ',' << exact(data.weights[i]);
        os << '\n';
    }
}

inline json fit_report_json(const FitResult& fit, std::span<const FitParameter> free, std::size_t n_points) {
    json j;
    j["params"] = fit.params;
    std::vector<std::string> names;
    for (FitParameter p : free) names.emplace_back(to_string(p));
    j["free"] = names;
    j["model"] = {{"g", fit.model.coupling.g},
                  {"J", fit.model.coupling.J},
                  {"Gamma", fit.model.coupling.Gamma},
                  {"alpha", fit.model.coupling.alpha_eff.real()},
                  {"nu_c", fit.model.params.nu_c}};
    j["rms_residual_mhz"] = fit.rms_residual;
    j["loss_mhz2"] = fit.loss;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["n_points"] = n_points;
    return j;
}

}  // namespace magnonlink
