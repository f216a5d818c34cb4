#pragma once

// Recovering couplings and damping from measured synchronization frequencies.
// The loss is the weighted squared mismatch of nu_s only; theta is never
// observed. Branch selection follows the sweep history when points carry an
// up/down hint, otherwise the stable root closest to the datum is used.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "magnonlink/errors.hpp"
#include "magnonlink/experiments.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/parallel.hpp"
#include "magnonlink/sync_solver.hpp"

namespace magnonlink {

enum class BranchHint { up, down, none };

inline std::string_view to_string(BranchHint h) {
    switch (h) {
        case BranchHint::up: return "up";
        case BranchHint::down: return "down";
        case BranchHint::none: return "none";
    }
    return "none";
}

inline BranchHint parse_hint(std::string_view s) {
    if (s == "up") return BranchHint::up;
    if (s == "down") return BranchHint::down;
    if (s == "none" || s.empty()) return BranchHint::none;
    throw InputError("branch hint must be up, down or none, got '" + std::string(s) + "'");
}

struct DispersionData {
    struct Point {
        double delta;  // MHz
        double nu_s;   // MHz
        BranchHint hint = BranchHint::none;
    };
    std::vector<Point> points;
    std::vector<double> weights;  // empty: unit weights

    double weight(std::size_t i) const { return weights.empty() ? 1.0 : weights[i]; }
};

enum class FitParameter { g, J, Gamma, alpha, nu_c };

inline std::string_view to_string(FitParameter p) {
    switch (p) {
        case FitParameter::g: return "g";
        case FitParameter::J: return "J";
        case FitParameter::Gamma: return "Gamma";
        case FitParameter::alpha: return "alpha";
        case FitParameter::nu_c: return "nu_c";
    }
    return "?";
}

inline FitParameter parse_fit_parameter(std::string_view s) {
    for (FitParameter p : {FitParameter::g, FitParameter::J, FitParameter::Gamma, FitParameter::alpha,
                           FitParameter::nu_c})
        if (s == to_string(p)) return p;
    throw InputError("unknown fit parameter '" + std::string(s) + "' (expected g, J, Gamma, alpha, nu_c)");
}

/// Couplings plus the cavity frequency: everything nu_s depends on.
struct DispersionModel {
    CouplingSet coupling;
    SystemParams params;

    double get(FitParameter p) const {
        switch (p) {
            case FitParameter::g: return coupling.g;
            case FitParameter::J: return coupling.J;
            case FitParameter::Gamma: return coupling.Gamma;
            case FitParameter::alpha: return coupling.alpha_eff.real();
            case FitParameter::nu_c: return params.nu_c;
        }
        return 0.0;
    }
    void set(FitParameter p, double v) {
        switch (p) {
            case FitParameter::g: coupling.g = v; break;
            case FitParameter::J: coupling.J = v; break;
            case FitParameter::Gamma: coupling.Gamma = v; break;
            case FitParameter::alpha: coupling.alpha_eff = {v, coupling.alpha_eff.imag()}; break;
            case FitParameter::nu_c: params.nu_c = v; break;
        }
    }
};

struct FitOptions {
    int starts = 8;
    std::uint64_t seed = 20240611;
    int max_iterations = 4000;
    double ftol = 1e-16;    // absolute spread of the simplex losses, MHz^2
    double xtol = 1e-10;    // relative simplex size
    double start_spread = 0.3;  // log-scale perturbation of the extra starts
    SolverOptions solver;
};

struct FitResult {
    DispersionModel model;
    std::map<std::string, double> params;  // fitted subset by name
    double rms_residual = 0.0;             // MHz
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline constexpr double kMissingBranchResidual = 1e3;  // MHz, charged when no stable root exists

/// Model nu_s at each data point (NaN where no stable state exists).
inline std::vector<double> predict_dispersion(const DispersionData& data, const DispersionModel& model,
                                              SolverOptions opts = {}) {
    std::vector<double> out(data.points.size(), std::numeric_limits<double>::quiet_NaN());
    std::optional<DispersionRelation> relation;
    try {
        relation.emplace(model.coupling, opts);
    } catch (const InputError&) {
        return out;
    }

    for (BranchHint hint : {BranchHint::up, BranchHint::down}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.points.size(); ++i)
            if (data.points[i].hint == hint) idx.push_back(i);
        if (idx.empty()) continue;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
            return hint == BranchHint::up ? data.points[x].delta < data.points[y].delta
                                          : data.points[x].delta > data.points[y].delta;
        });
        std::vector<double> deltas;
        for (std::size_t i : idx) deltas.push_back(data.points[i].delta);
        const SweepTrace tr = track_branch(*relation, deltas, model.params,
                                           hint == BranchHint::up ? SweepDirection::up : SweepDirection::down);
        for (std::size_t k = 0; k < idx.size(); ++k)
            if (tr.points[k].selected) out[idx[k]] = tr.points[k].selected->nu_s;
    }
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        if (data.points[i].hint != BranchHint::none) continue;
        double best = std::numeric_limits<double>::quiet_NaN();
        for (const auto& s : relation->solve(data.points[i].delta, model.params)) {
            if (!s.stable) continue;
            if (std::isnan(best) || std::abs(s.nu_s - data.points[i].nu_s) < std::abs(best - data.points[i].nu_s))
                best = s.nu_s;
        }
        out[i] = best;
    }
    return out;
}

/// Weighted sum of squared nu_s residuals (MHz^2).
inline double dispersion_loss(const DispersionData& data, const DispersionModel& model, SolverOptions opts = {}) {
    const auto pred = predict_dispersion(data, model, opts);
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = std::isnan(pred[i]) ? kMissingBranchResidual : pred[i] - data.points[i].nu_s;
        loss += data.weight(i) * r * r;
    }
    return loss;
}

namespace detail {

struct SimplexResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead (GSL nmsimplex2). Stops when the simplex losses agree to ftol and its
// size relative to the best vertex is below xtol.
template <typename F>
SimplexResult nelder_mead(F&& f, const std::vector<double>& x0, const std::vector<double>& step, int max_iter,
                          double ftol, double xtol) {
    static const bool handler_off = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)handler_off;

    const std::size_t n = x0.size();
    struct Ctx {
        std::remove_reference_t<F>* f;
        std::vector<double> x;
    } ctx{&f, std::vector<double>(n)};
    gsl_multimin_function fn;
    fn.n = n;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* v, void* raw) {
        auto* c = static_cast<Ctx*>(raw);
        for (std::size_t i = 0; i < c->x.size(); ++i) c->x[i] = gsl_vector_get(v, i);
        const double val = (*c->f)(c->x);
        return std::isfinite(val) ? val : std::numeric_limits<double>::max();
    };

    const auto to_gsl = [n](const std::vector<double>& src) {
        gsl_vector* v = gsl_vector_alloc(n);
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(v, i, src[i]);
        return v;
    };
    gsl_vector* x = to_gsl(x0);
    gsl_vector* ss = to_gsl(step);
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    gsl_multimin_fminimizer_set(m, &fn, x, ss);

    SimplexResult res;
    int it = 0;
    double prev = m->fval;
    for (; it < max_iter; ++it) {
        if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
        double scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(gsl_vector_get(m->x, i)));
        const bool flat = std::abs(prev - m->fval) <= ftol + 1e-12 * std::abs(m->fval);
        prev = m->fval;
        if (flat && gsl_multimin_fminimizer_size(m) <= xtol * scale) {
            res.converged = true;
            ++it;
            break;
        }
    }
    res.iterations = it;
    res.f = m->fval;
    res.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.x[i] = gsl_vector_get(m->x, i);
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(ss);
    gsl_vector_free(x);
    return res;
}

inline bool is_damping(FitParameter p) { return p == FitParameter::alpha; }
inline bool is_coupling(FitParameter p) {
    return p == FitParameter::g || p == FitParameter::J || p == FitParameter::Gamma;
}

// Quadratic penalty outside dampings in (1e-4, 1e3) MHz and couplings in (-1e3, 1e3) MHz.
inline double bound_violation(FitParameter p, double v) {
    if (is_damping(p)) {
        if (v <= 1e-4) return 1e-4 - v + 1e-12;
        if (v >= 1e3) return v - 1e3 + 1e-12;
    } else if (is_coupling(p)) {
        if (std::abs(v) >= 1e3) return std::abs(v) - 1e3 + 1e-12;
    }
    return 0.0;
}

inline void validate(const DispersionData& data) {
    if (data.points.size() < 4) throw InputError("dispersion fit needs at least 4 points");
    if (!data.weights.empty() && data.weights.size() != data.points.size())
        throw InputError("weights must match the number of points");
    for (const auto& pt : data.points)
        if (!std::isfinite(pt.delta) || !std::isfinite(pt.nu_s)) throw InputError("dispersion data must be finite");
    for (double w : data.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("weights must be finite and non-negative");
    const double d0 = data.points.front().delta;
    if (std::all_of(data.points.begin(), data.points.end(), [&](const auto& p) { return p.delta == d0; }))
        throw InputError("degenerate data: all points share one detuning");
}

}  // namespace detail

/// Multi-start simplex fit of the `free` parameters; the others stay at `init`.
inline FitResult fit_dispersion(const DispersionData& data, std::span<const FitParameter> free,
                                const DispersionModel& init, FitOptions opts = {}) {
    detail::validate(data);
    if (free.empty()) throw InputError("no free parameters");
    for (std::size_t i = 0; i < free.size(); ++i)
        for (std::size_t j = i + 1; j < free.size(); ++j)
            if (free[i] == free[j]) throw InputError("duplicate free parameter " + std::string(to_string(free[i])));
    for (FitParameter p : free)
        if (detail::bound_violation(p, init.get(p)) > 0.0)
            throw InputError("initial " + std::string(to_string(p)) + " outside physical bounds");
    if (opts.starts < 1) throw InputError("at least one start required");

    const std::size_t n = free.size();
    auto loss_at = [&](const std::vector<double>& x) {
        DispersionModel m = init;
        double penalty = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = detail::bound_violation(free[i], x[i]);
            penalty += v * v;
            m.set(free[i], x[i]);
        }
        if (penalty > 0.0) return 1e10 * (1.0 + penalty);
        return dispersion_loss(data, m, opts.solver);
    };

    // deterministic starting points
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<std::vector<double>> starts;
    std::vector<double> x0(n);
    for (std::size_t i = 0; i < n; ++i) x0[i] = init.get(free[i]);
    starts.push_back(x0);
    for (int s = 1; s < opts.starts; ++s) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = unit(rng);
            if (free[i] == FitParameter::nu_c) {
                x[i] = x0[i] + 2.0 * u;
            } else if (x0[i] == 0.0) {
                x[i] = u;
            } else {
                x[i] = x0[i] * std::exp(opts.start_spread * u);
            }
        }
        starts.push_back(std::move(x));
    }
    auto steps_for = [&](const std::vector<double>& x) {
        std::vector<double> st(n);
        for (std::size_t i = 0; i < n; ++i)
            st[i] = free[i] == FitParameter::nu_c ? 0.5 : std::max(0.1 * std::abs(x[i]), 0.05);
        return st;
    };

    std::vector<detail::SimplexResult> runs(starts.size());
    parallel_for(starts.size(), [&](std::size_t s) {
        runs[s] = detail::nelder_mead(loss_at, starts[s], steps_for(starts[s]), opts.max_iterations, opts.ftol,
                                      opts.xtol);
    });
    std::size_t best = 0;
    int iterations = 0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
        iterations += runs[s].iterations;
        if (runs[s].f < runs[best].f) best = s;
    }
    // restart from the best vertex: collapses a prematurely shrunk simplex
    std::vector<double> polish_step = steps_for(runs[best].x);
    for (double& v : polish_step) v *= 0.1;
    detail::SimplexResult polished =
        detail::nelder_mead(loss_at, runs[best].x, polish_step, opts.max_iterations, opts.ftol, opts.xtol);
    iterations += polished.iterations;
    if (polished.f > runs[best].f) polished = runs[best];

    FitResult out;
    out.model = init;
    for (std::size_t i = 0; i < n; ++i) {
        out.model.set(free[i], polished.x[i]);
        out.params[std::string(to_string(free[i]))] = polished.x[i];
    }
    out.loss = polished.f;
    double wsum = 0.0;
    for (std::size_t i = 0; i < data.points.size(); ++i) wsum += data.weight(i);
    out.rms_residual = wsum > 0.0 ? std::sqrt(out.loss / wsum) : 0.0;
    out.iterations = iterations;
    out.converged = polished.converged && runs[best].converged;
    return out;
}

inline FitResult fit_dispersion(const DispersionData& data, std::initializer_list<FitParameter> free,
                                const DispersionModel& init, FitOptions opts = {}) {
    const std::vector<FitParameter> v(free);
    return fit_dispersion(data, std::span<const FitParameter>(v), init, opts);
}

/// Branch-selected nu_s along up and/or down sweeps of `delta_grid`, with additive
/// Gaussian noise of standard deviation `noise_mhz`. Deterministic per seed.
inline DispersionData synthesize_dispersion(const CouplingSet& c, const SystemParams& p,
                                            std::span<const double> delta_grid, double noise_mhz,
                                            std::uint64_t seed, SweepDirection directions = SweepDirection::both,
                                            SolverOptions opts = {}) {
    if (!(noise_mhz >= 0.0)) throw InputError("noise must be non-negative");
    const DispersionRelation relation(c, opts);
    std::vector<double> up(delta_grid.begin(), delta_grid.end());
    std::sort(up.begin(), up.end());
    std::vector<double> down(up.rbegin(), up.rend());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DispersionData data;
    auto emit = [&](const SweepTrace& tr, BranchHint hint) {
        for (const auto& pt : tr.points) {
            if (!pt.selected) continue;
            const double noise = noise_mhz > 0.0 ? noise_mhz * gauss(rng) : 0.0;
            data.points.push_back({pt.delta, pt.selected->nu_s + noise, hint});
        }
    };
    if (directions != SweepDirection::down) emit(track_branch(relation, up, p, SweepDirection::up), BranchHint::up);
    if (directions != SweepDirection::up)
        emit(track_branch(relation, down, p, SweepDirection::down), BranchHint::down);
    return data;
}

}  // namespace magnonlink
