#pragma once

// Measurement protocols: quasi-static detuning sweeps with history-dependent
// branch selection, transmission sweeps, Lorentzian spectral maps and the
// parameter presets for the measured configurations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "magnonlink/errors.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/parallel.hpp"
#include "magnonlink/sync_solver.hpp"
#include "magnonlink/units.hpp"

namespace magnonlink {

enum class SweepDirection { up, down, both };

inline std::string_view to_string(SweepDirection d) {
    switch (d) {
        case SweepDirection::up: return "up";
        case SweepDirection::down: return "down";
        case SweepDirection::both: return "both";
    }
    return "both";
}

inline SweepDirection parse_direction(std::string_view s) {
    if (s == "up") return SweepDirection::up;
    if (s == "down") return SweepDirection::down;
    if (s == "both") return SweepDirection::both;
    throw InputError("sweep direction must be up, down or both, got '" + std::string(s) + "'");
}

struct Scenario {
    std::string name;
    SystemParams params;
    LinkSettings link;
    std::vector<double> delta_grid;  // MHz
    SweepDirection sweep = SweepDirection::both;
    std::map<std::string, std::string> metadata;
};

inline std::vector<double> linear_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw InputError("grid needs lo <= hi and a positive step");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid[i] = lo + step * static_cast<double>(i);
    return grid;
}

inline void validate(const Scenario& sc) {
    validate(sc.params);
    validate(sc.link);
    const auto& g = sc.delta_grid;
    if (g.empty()) throw InputError("scenario '" + sc.name + "' has an empty detuning grid");
    for (double d : g)
        if (!std::isfinite(d)) throw InputError("detuning grid values must be finite");
    const bool ascending = std::adjacent_find(g.begin(), g.end(), std::greater_equal<>()) == g.end();
    const bool descending = std::adjacent_find(g.begin(), g.end(), std::less_equal<>()) == g.end();
    if (!ascending && !descending) throw InputError("detuning grid must be strictly monotone");
}

struct SweepPoint {
    double delta = 0.0;
    std::optional<SyncSolution> selected;
    std::vector<SyncSolution> branches;
    bool jumped = false;  // selection switched branch on arrival at this point
};

struct SweepTrace {
    SweepDirection direction = SweepDirection::up;
    std::vector<SweepPoint> points;
    std::vector<double> jumps;  // observed jump detunings, MHz
};

/// Follows a stable branch along `deltas` in the given order. A branch is a
/// monotone piece of Delta(theta); while it still carries a root the selection
/// stays on it, otherwise the nearest stable root in theta takes over and the
/// jump is logged midway between the two grid points.
inline SweepTrace track_branch(const DispersionRelation& relation, std::span<const double> deltas,
                               const SystemParams& p, SweepDirection direction) {
    SweepTrace trace;
    trace.direction = direction;
    trace.points.reserve(deltas.size());
    std::optional<SyncSolution> prev;
    double prev_delta = 0.0;
    for (double delta : deltas) {
        SweepPoint pt;
        pt.delta = delta;
        pt.branches = relation.solve(delta, p);
        std::vector<const SyncSolution*> stable;
        for (const auto& s : pt.branches)
            if (s.stable) stable.push_back(&s);

        if (stable.empty()) {
            prev.reset();
        } else if (!prev) {
            // start on the cavity-dominated state
            pt.selected = **std::min_element(stable.begin(), stable.end(),
                                             [](auto* x, auto* y) { return x->r < y->r; });
        } else {
            const auto same = std::find_if(stable.begin(), stable.end(),
                                           [&](auto* s) { return s->segment == prev->segment; });
            if (same != stable.end()) {
                pt.selected = **same;
            } else {
                pt.selected = **std::min_element(stable.begin(), stable.end(), [&](auto* x, auto* y) {
                    return std::abs(x->theta - prev->theta) < std::abs(y->theta - prev->theta);
                });
                pt.jumped = true;
                trace.jumps.push_back(0.5 * (prev_delta + delta));
            }
        }
        if (pt.selected) prev = pt.selected;
        prev_delta = delta;
        trace.points.push_back(std::move(pt));
    }
    return trace;
}

namespace detail {

inline DispersionRelation sweep_relation(const Scenario& sc, SolverOptions opts) {
    validate(sc);
    const CouplingSet c = coupling_from_link(sc.params, sc.link);
    try {
        return DispersionRelation(c, opts);
    } catch (const DecoupledError& e) {
        throw NoSynchronizationError(std::string("no synchronization: ") + e.what());
    }
}

inline std::vector<double> ordered_grid(const Scenario& sc, SweepDirection dir) {
    std::vector<double> grid = sc.delta_grid;
    std::sort(grid.begin(), grid.end());
    if (dir == SweepDirection::down) std::reverse(grid.begin(), grid.end());
    return grid;
}

inline void require_synchronization(const SweepTrace& t) {
    const bool any = std::any_of(t.points.begin(), t.points.end(), [](const SweepPoint& p) { return p.selected; });
    if (!any) throw NoSynchronizationError("no synchronization: no stable steady state anywhere on the grid");
}

}  // namespace detail

/// Quasi-static sweep in one direction (`both` is treated as `up`).
inline SweepTrace hysteresis_sweep(const Scenario& sc, SweepDirection direction = SweepDirection::up,
                                   SolverOptions opts = {}) {
    if (direction == SweepDirection::both) direction = SweepDirection::up;
    const DispersionRelation relation = detail::sweep_relation(sc, opts);
    const auto grid = detail::ordered_grid(sc, direction);
    SweepTrace t = track_branch(relation, grid, sc.params, direction);
    detail::require_synchronization(t);
    return t;
}

struct HysteresisLoop {
    SweepTrace up;
    SweepTrace down;

    /// First jump of each sweep; exists when both directions jumped.
    FoldPoints observed() const {
        FoldPoints f;
        if (!up.jumps.empty()) f.delta_up = up.jumps.front();
        if (!down.jumps.empty()) f.delta_down = down.jumps.front();
        f.exists = !up.jumps.empty() && !down.jumps.empty();
        return f;
    }
};

inline HysteresisLoop hysteresis_loop(const Scenario& sc, SolverOptions opts = {}) {
    const DispersionRelation relation = detail::sweep_relation(sc, opts);
    HysteresisLoop loop;
    const auto up = detail::ordered_grid(sc, SweepDirection::up);
    const auto down = detail::ordered_grid(sc, SweepDirection::down);
    loop.up = track_branch(relation, up, sc.params, SweepDirection::up);
    loop.down = track_branch(relation, down, sc.params, SweepDirection::down);
    detail::require_synchronization(loop.up);
    return loop;
}

struct SigmaPoint {
    double sigma = 0.0;
    CouplingSet coupling;
    CouplingReport report;
    std::optional<double> cable_length_m;  // empty at sigma = 0 (unbounded)
};

inline std::vector<SigmaPoint> sigma_sweep(const Scenario& sc, std::span<const double> sigma_grid) {
    std::vector<SigmaPoint> out;
    out.reserve(sigma_grid.size());
    for (double sigma : sigma_grid) {
        LinkSettings link = sc.link;
        link.sigma = sigma;
        SigmaPoint pt;
        pt.sigma = sigma;
        pt.coupling = coupling_from_link(sc.params, link);
        pt.report = strong_coupling_report(pt.coupling);
        if (sigma > 0.0) pt.cable_length_m = equivalent_cable_length(sigma, link);
        out.push_back(pt);
    }
    return out;
}

inline constexpr double kActiveQualityFactor = 2.8e4;

/// Cosmetic linewidth of the self-oscillating cavity peak, nu_c / Q.
inline double default_linewidth(const SystemParams& p) { return p.nu_c / kActiveQualityFactor; }

/// Row-major matrix, rows indexed by detuning and columns by probe frequency.
struct SpectralMap {
    std::vector<double> row_delta;
    std::vector<double> col_nu;
    std::vector<double> values;

    std::size_t rows() const noexcept { return row_delta.size(); }
    std::size_t cols() const noexcept { return col_nu.size(); }
    double at(std::size_t r, std::size_t c) const { return values.at(r * cols() + c); }
};

/// Lorentzian (full width `linewidth`) at the selected nu_s of each sweep point,
/// peak height A^2. Points without a selected state give an empty row.
inline SpectralMap spectra_map(const SweepTrace& sweep, std::span<const double> nu_grid, double linewidth) {
    if (!(linewidth > 0.0)) throw InputError("linewidth must be positive");
    SpectralMap map;
    map.col_nu.assign(nu_grid.begin(), nu_grid.end());
    for (const auto& pt : sweep.points) map.row_delta.push_back(pt.delta);
    map.values.assign(map.rows() * map.cols(), 0.0);
    const double hw2 = 0.25 * linewidth * linewidth;
    parallel_for(map.rows(), [&](std::size_t r) {
        const auto& sel = sweep.points[r].selected;
        if (!sel) return;
        const double peak = sel->A * sel->A;
        for (std::size_t c = 0; c < map.cols(); ++c) {
            const double d = map.col_nu[c] - sel->nu_s;
            map.values[r * map.cols() + c] = peak * hw2 / (d * d + hw2);
        }
    });
    return map;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"positionA", "positionB", "remote_coherent", "remote_dissipative"};
    return names;
}

/// Measured configurations. The magnon radiation rate gamma is back-solved so
/// that sqrt(kappa*gamma) equals the quoted indirect coupling at sigma = 1, and
/// alpha so that Re(alpha') equals the quoted effective damping.
inline Scenario preset(std::string_view name) {
    Scenario sc;
    sc.name = std::string(name);
    sc.params = SystemParams{};  // cavity: nu_c 3820 MHz, beta 85.4 MHz, kappa 18.7 MHz
    sc.link = LinkSettings{};
    sc.delta_grid = linear_grid(-60.0, 60.0, 0.5);
    sc.sweep = SweepDirection::both;
    sc.metadata["gain"] = "N = 2 beta, eps = 1 (not reported; steady-state relations do not depend on them)";

    auto back_solve = [&](double coupling, double alpha_eff, double phi) {
        sc.link.phi = phi;
        sc.params.gamma = coupling * coupling / sc.params.kappa;
        sc.params.alpha = alpha_eff - sc.params.gamma * std::cos(2.0 * phi);
        sc.metadata["gamma_backsolve"] = "gamma = " + std::to_string(coupling) + "^2 / kappa";
        sc.metadata["alpha_backsolve"] =
            "alpha = " + std::to_string(alpha_eff) + " - gamma cos(2 phi), so Re(alpha') matches at sigma = 1";
    };

    if (name == "positionA") {
        // direct overlap, magnon decoupled from the cable
        sc.params.g = 11.0;
        sc.params.alpha = 1.8;
        sc.params.gamma = 0.0;
        sc.metadata["quoted"] = "g = 11 MHz, alpha' = 1.8 MHz";
    } else if (name == "positionB") {
        sc.params.g = 0.0;
        back_solve(6.2, 3.0, 0.0);
        sc.metadata["quoted"] = "Gamma = 6.2 MHz, alpha' = 3 MHz, g ~ 0";
    } else if (name == "remote_coherent") {
        sc.params.g = 0.0;
        back_solve(7.1, 1.3, kPi / 2.0);
        sc.metadata["quoted"] = "|J| = 7.1 MHz, alpha' = 1.3 MHz at sigma = 1";
    } else if (name == "remote_dissipative") {
        sc.params.g = 0.0;
        back_solve(7.4, 6.2, 0.0);
        sc.metadata["quoted"] = "|Gamma| = 7.4 MHz, alpha' = 6.2 MHz at sigma = 1";
    } else {
        std::string known;
        for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
        throw InputError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
    }
    return sc;
}

}  // namespace magnonlink
