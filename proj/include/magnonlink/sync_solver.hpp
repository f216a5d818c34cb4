#pragma once

// Steady states of the gain-driven photon-magnon system.
//
// In the synchronized state a = A exp(-i w t), m = M exp(-i(w t + theta)). The
// amplitude ratio r = M / A and the detuning are both functions of theta alone:
//
//   r(theta)     = [(g - Gamma) sin(theta) + J cos(theta)] / Re(alpha')
//   Delta(theta) = (g cos(theta) - J sin(theta)) (r - 1/r) + Gamma cos(theta) (r + 1/r)
//   nu_s         = nu_c + r [(g + Gamma) cos(theta) - J sin(theta)]
//
// so every branch at detuning Delta is a root of Delta(theta) - Delta on the
// length-pi interval where r > 0. Delta(theta) does not depend on Delta, which
// lets a single tabulation serve a whole sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "magnonlink/errors.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/parallel.hpp"
#include "magnonlink/units.hpp"

namespace magnonlink {

struct ThetaInterval {
    double lo = 0.0;
    double hi = kPi;

    bool contains(double theta) const noexcept { return theta > lo && theta < hi; }
};

/// One steady-state branch at a fixed detuning.
struct SyncSolution {
    double delta = 0.0;     // MHz
    double theta = 0.0;     // rad, inside theta_interval
    double r = 0.0;         // |m| / |a|
    double nu_s = 0.0;      // MHz
    double A = 0.0;         // |a|
    double M = 0.0;         // |m|
    double slope = 0.0;     // dDelta/dtheta, MHz/rad
    bool stable = false;    // slope rule: slope > 0
    bool gain_feasible = false;  // saturable gain can supply the demanded net gain
    std::size_t segment = 0;     // monotone piece of Delta(theta) the root sits on
};

struct FoldPoints {
    double delta_down = 0.0;  // MHz
    double delta_up = 0.0;    // MHz
    double theta_down = 0.0;
    double theta_up = 0.0;
    bool exists = false;
};

struct SolverOptions {
    int cells = 4096;
    double guard = 1e-6;            // rad excluded at each interval end
    double residual_tol = 1e-9;     // MHz
    double fold_theta_tol = 1e-8;   // rad
};

namespace detail {

inline double ratio_numerator(double theta, const CouplingSet& c) noexcept {
    return (c.g - c.Gamma) * std::sin(theta) + c.J * std::cos(theta);
}

}  // namespace detail

/// Length-pi interval of theta on which r(theta) > 0. The arctan in the closed
/// form is ambiguous by pi; the branch is chosen by the sign of r mid-interval.
inline ThetaInterval theta_interval(const CouplingSet& c) {
    if (c.g == 0.0 && c.J == 0.0 && c.Gamma == 0.0) throw DecoupledError("decoupled: g = J = Gamma = 0");
    if (!(c.re_alpha() > 0.0)) throw InputError("Re(alpha') must be positive");
    const double a = c.g - c.Gamma;
    if (a == 0.0 && c.J == 0.0)
        throw DecoupledError("degenerate coupling: g = Gamma and J = 0 make the amplitude ratio vanish");
    const double zero = a != 0.0 ? std::atan(-c.J / a) : kPi / 2.0;
    if (detail::ratio_numerator(zero + kPi / 2.0, c) > 0.0) return {zero, zero + kPi};
    return {zero - kPi, zero};
}

inline double amplitude_ratio(double theta, const CouplingSet& c) {
    return detail::ratio_numerator(theta, c) / c.re_alpha();
}

/// Left-hand side of the phase-balance equation: the detuning at which theta is
/// a steady state.
inline double eq1a_residual(double theta, const CouplingSet& c) {
    const double r = amplitude_ratio(theta, c);
    if (!(r > 0.0)) throw std::domain_error("theta outside the admissible interval (r <= 0)");
    const double cs = std::cos(theta), sn = std::sin(theta);
    return (c.g * cs - c.J * sn) * (r - 1.0 / r) + c.Gamma * cs * (r + 1.0 / r);
}

/// d(eq1a_residual)/dtheta, analytic.
inline double eq1a_slope(double theta, const CouplingSet& c) {
    const double r = amplitude_ratio(theta, c);
    if (!(r > 0.0)) throw std::domain_error("theta outside the admissible interval (r <= 0)");
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double dr = ((c.g - c.Gamma) * cs - c.J * sn) / c.re_alpha();
    const double p = c.g * cs - c.J * sn;
    const double dp = -c.g * sn - c.J * cs;
    const double q = c.Gamma * cs;
    const double dq = -c.Gamma * sn;
    const double inv2 = 1.0 / (r * r);
    return dp * (r - 1.0 / r) + p * (1.0 + inv2) * dr + dq * (r + 1.0 / r) + q * (1.0 - inv2) * dr;
}

/// nu_s - nu_c for a steady state at theta.
inline double sync_offset(double theta, const CouplingSet& c) {
    const double r = amplitude_ratio(theta, c);
    return r * ((c.g + c.Gamma) * std::cos(theta) - c.J * std::sin(theta));
}

/// Net cavity gain N(1 - eps A^2) - beta required to hold the steady state at theta.
inline double gain_demand(double theta, const CouplingSet& c) {
    const double r = amplitude_ratio(theta, c);
    return r * ((c.g + c.Gamma) * std::sin(theta) + c.J * std::cos(theta));
}

/// Fills in r, nu_s, amplitudes and the slope-rule stability for a root theta.
inline SyncSolution make_solution(double theta, double delta, const CouplingSet& c, const SystemParams& p,
                                  std::size_t segment = 0) {
    SyncSolution s;
    s.delta = delta;
    s.theta = theta;
    s.r = amplitude_ratio(theta, c);
    s.nu_s = p.nu_c + sync_offset(theta, c);
    s.slope = eq1a_slope(theta, c);
    s.stable = s.slope > 0.0;
    s.segment = segment;
    const double headroom = p.N - p.beta - gain_demand(theta, c);
    const double sat = p.N * p.eps;
    if (sat > 0.0 && headroom > 0.0) {
        s.A = std::sqrt(headroom / sat);
        s.M = s.r * s.A;
        s.gain_feasible = true;
    }
    return s;
}

/// Tabulated Delta(theta) over the admissible interval, split into monotone
/// segments at its refined extrema.
class DispersionRelation {
public:
    struct Extremum {
        double theta;
        double delta;
        bool is_max;
    };

    explicit DispersionRelation(const CouplingSet& c, SolverOptions opts = {})
        : coupling_(c), opts_(opts), interval_(theta_interval(c)) {
        if (opts_.cells < 2) throw InputError("solver needs at least two cells");
        const double lo = interval_.lo + opts_.guard;
        const double hi = interval_.hi - opts_.guard;
        const auto n = static_cast<std::size_t>(opts_.cells);
        std::vector<double> th(n + 1), dv(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            th[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
            dv[i] = eq1a_residual(th[i], c);
        }
        thetas_ = th;
        values_ = dv;

        // Segment boundaries: table ends plus every refined interior extremum.
        std::vector<std::pair<double, double>> bounds{{th.front(), dv.front()}};
        std::vector<std::size_t> bound_index{0};
        for (std::size_t i = 1; i < n; ++i) {
            const double left = dv[i] - dv[i - 1];
            const double right = dv[i + 1] - dv[i];
            const bool is_max = left > 0.0 && right <= 0.0;
            const bool is_min = left < 0.0 && right >= 0.0;
            if (!is_max && !is_min) continue;
            const double t = refine_extremum(th[i - 1], th[i + 1], is_max);
            const double d = eq1a_residual(t, c);
            extrema_.push_back({t, d, is_max});
            bounds.emplace_back(t, d);
            bound_index.push_back(i);
        }
        bounds.emplace_back(th.back(), dv.back());
        bound_index.push_back(n);

        for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
            Segment seg;
            seg.theta.push_back(bounds[k].first);
            seg.delta.push_back(bounds[k].second);
            for (std::size_t i = bound_index[k] + 1; i < bound_index[k + 1]; ++i) {
                if (th[i] <= seg.theta.back() || th[i] >= bounds[k + 1].first) continue;
                seg.theta.push_back(th[i]);
                seg.delta.push_back(dv[i]);
            }
            seg.theta.push_back(bounds[k + 1].first);
            seg.delta.push_back(bounds[k + 1].second);
            seg.increasing = seg.delta.back() > seg.delta.front();
            segments_.push_back(std::move(seg));
        }
    }

    const CouplingSet& coupling() const noexcept { return coupling_; }
    const ThetaInterval& interval() const noexcept { return interval_; }
    const std::vector<Extremum>& extrema() const noexcept { return extrema_; }
    std::span<const double> table_theta() const noexcept { return thetas_; }
    std::span<const double> table_delta() const noexcept { return values_; }
    std::size_t segment_count() const noexcept { return segments_.size(); }
    bool segment_increasing(std::size_t k) const { return segments_.at(k).increasing; }

    struct Root {
        double theta;
        std::size_t segment;
    };

    /// All roots of Delta(theta) = delta, ordered by theta.
    std::vector<Root> roots(double delta) const {
        std::vector<Root> out;
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            auto t = segment_root(segments_[k], delta);
            if (!t) continue;
            // a root sitting exactly on a shared extremum is reported once
            if (!out.empty() && *t == out.back().theta) continue;
            out.push_back({*t, k});
        }
        return out;
    }

    std::vector<SyncSolution> solve(double delta, const SystemParams& p) const {
        std::vector<SyncSolution> out;
        for (const Root& root : roots(delta)) out.push_back(make_solution(root.theta, delta, coupling_, p, root.segment));
        return out;
    }

    FoldPoints folds() const {
        FoldPoints f;
        bool have_max = false, have_min = false;
        for (const Extremum& e : extrema_) {
            if (e.is_max && (!have_max || e.delta > f.delta_up)) {
                f.delta_up = e.delta;
                f.theta_up = e.theta;
                have_max = true;
            }
            if (!e.is_max && (!have_min || e.delta < f.delta_down)) {
                f.delta_down = e.delta;
                f.theta_down = e.theta;
                have_min = true;
            }
        }
        f.exists = have_max && have_min && f.delta_down < f.delta_up;
        return f;
    }

private:
    struct Segment {
        std::vector<double> theta;
        std::vector<double> delta;
        bool increasing = true;
    };

    double refine_extremum(double a, double b, bool maximize) const {
        constexpr double kInvPhi = 0.6180339887498949;
        auto f = [&](double t) {
            const double d = eq1a_residual(t, coupling_);
            return maximize ? -d : d;
        };
        double x1 = b - kInvPhi * (b - a);
        double x2 = a + kInvPhi * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > opts_.fold_theta_tol) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kInvPhi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kInvPhi * (b - a);
                f2 = f(x2);
            }
        }
        return 0.5 * (a + b);
    }

    std::optional<double> segment_root(const Segment& seg, double delta) const {
        const double sign = seg.increasing ? 1.0 : -1.0;
        // s(theta) = sign * (Delta(theta) - delta) is non-decreasing on the segment.
        auto s = [&](double d) { return sign * (d - delta); };
        const std::size_t n = seg.theta.size();
        if (s(seg.delta.front()) > 0.0 || s(seg.delta.back()) < 0.0) return std::nullopt;
        if (s(seg.delta.front()) == 0.0) return seg.theta.front();
        // first node with s >= 0
        std::size_t lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (s(seg.delta[mid]) >= 0.0 ? hi : lo) = mid;
        }
        double a = seg.theta[lo], b = seg.theta[hi];
        if (s(seg.delta[hi]) == 0.0) return b;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double v = eq1a_residual(mid, coupling_) - delta;
            if (std::abs(v) < opts_.residual_tol * 1e-3) return mid;
            (sign * v >= 0.0 ? b : a) = mid;
        }
        const double fa = std::abs(eq1a_residual(a, coupling_) - delta);
        const double fb = std::abs(eq1a_residual(b, coupling_) - delta);
        return fa <= fb ? a : b;
    }

    CouplingSet coupling_;
    SolverOptions opts_;
    ThetaInterval interval_;
    std::vector<double> thetas_;
    std::vector<double> values_;
    std::vector<Extremum> extrema_;
    std::vector<Segment> segments_;
};

/// Every steady state at the given detuning, ordered by theta.
inline std::vector<SyncSolution> solve_branches(double delta, const CouplingSet& c, const SystemParams& p,
                                                SolverOptions opts = {}) {
    return DispersionRelation(c, opts).solve(delta, p);
}

inline FoldPoints fold_points(const CouplingSet& c, SolverOptions opts = {}) {
    return DispersionRelation(c, opts).folds();
}

struct DispersionPoint {
    double delta = 0.0;
    std::vector<SyncSolution> branches;
};

inline std::vector<DispersionPoint> dispersion_curve(std::span<const double> delta_grid, const CouplingSet& c,
                                                     const SystemParams& p, SolverOptions opts = {}) {
    if (!std::is_sorted(delta_grid.begin(), delta_grid.end())) throw InputError("detuning grid must be sorted");
    std::vector<DispersionPoint> out(delta_grid.size());
    if (delta_grid.empty()) return out;
    const DispersionRelation relation(c, opts);
    parallel_for(delta_grid.size(), [&](std::size_t i) {
        out[i].delta = delta_grid[i];
        out[i].branches = relation.solve(delta_grid[i], p);
    });
    return out;
}

}  // namespace magnonlink
