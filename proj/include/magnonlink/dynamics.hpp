#pragma once

// Time-domain mean-field dynamics of the active cavity and the magnon, in the
// frame rotating at nu_c (angular rates are 2pi times the cyclic MHz values, time
// in microseconds):
//
//   da/dt = 2pi { [N (1 - eps |a|^2) - beta] a - i (g + Gamma - iJ) m }
//   dm/dt = 2pi { -(i Delta + Re alpha') m - i (g - Gamma + iJ) a }
//
// Substituting a = A exp(-i w t), m = M exp(-i(w t + theta)) reproduces the
// steady-state relations in sync_solver.hpp term by term; the imaginary part of
// alpha' is a frequency pull that is taken as already absorbed into Delta.

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "magnonlink/errors.hpp"
#include "magnonlink/format.hpp"
#include "magnonlink/model.hpp"
#include "magnonlink/sync_solver.hpp"
#include "magnonlink/units.hpp"

namespace magnonlink {

using cplx = std::complex<double>;

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double sample_dt = 1e-3;     // us between recorded samples
    double initial_step = 1e-5;  // us
    double min_step = 1e-13;     // us; smaller steps abort the run
    long max_steps = 50'000'000;
    bool seed_injection = false;  // constant N*sqrt(eps/2) drive into the cavity
};

struct TraceMeta {
    long steps = 0;
    double rtol = 0.0;
    double atol = 0.0;
    double frame_nu = 0.0;  // MHz; samples are in the frame rotating at this frequency
    bool self_oscillating = true;
    std::optional<ThetaInterval> admissible;  // where extracted theta is mapped
};

struct TimeTrace {
    std::vector<double> t;  // us
    std::vector<cplx> a;
    std::vector<cplx> m;
    TraceMeta meta;
};

struct SteadyEstimate {
    double nu_s = 0.0;     // MHz
    double theta = 0.0;    // rad
    double A = 0.0;
    double M = 0.0;
    bool converged = false;
    double residual_drift = std::numeric_limits<double>::infinity();  // MHz
};

namespace detail {

struct Rhs {
    double two_pi_gain, two_pi_beta, eps, two_pi_delta, two_pi_alpha;
    cplx two_pi_cplus, two_pi_cminus;
    double seed;

    Rhs(const SystemParams& p, const CouplingSet& c, double delta, bool seed_on)
        : two_pi_gain(angular(p.N)),
          two_pi_beta(angular(p.beta)),
          eps(p.eps),
          two_pi_delta(angular(delta)),
          two_pi_alpha(angular(c.re_alpha())),
          two_pi_cplus(angular(1.0) * cplx(c.g + c.Gamma, -c.J)),
          two_pi_cminus(angular(1.0) * cplx(c.g - c.Gamma, c.J)),
          seed(seed_on ? angular(p.N) * std::sqrt(p.eps / 2.0) : 0.0) {}

    std::array<cplx, 2> operator()(const std::array<cplx, 2>& y) const {
        const cplx i(0.0, 1.0);
        const double gain = two_pi_gain * (1.0 - eps * std::norm(y[0])) - two_pi_beta;
        return {gain * y[0] - i * two_pi_cplus * y[1] + seed,
                -(i * two_pi_delta + two_pi_alpha) * y[1] - i * two_pi_cminus * y[0]};
    }
};

using State = std::array<cplx, 2>;

inline bool finite(const State& y) {
    return std::isfinite(y[0].real()) && std::isfinite(y[0].imag()) && std::isfinite(y[1].real()) &&
           std::isfinite(y[1].imag());
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) (odeint dense output) sampled every opts.sample_dt.
inline TimeTrace integrate(const SystemParams& p, const CouplingSet& c, double delta, cplx a0, cplx m0,
                           double duration, IntegratorOptions opts = {}) {
    namespace odeint = boost::numeric::odeint;
    validate(p);
    if (!(opts.rtol > 0.0 && opts.atol > 0.0)) throw InputError("rtol and atol must be positive");
    if (!(duration > 0.0) || !(opts.sample_dt > 0.0)) throw InputError("duration and sample_dt must be positive");

    const detail::Rhs f(p, c, delta, opts.seed_injection);
    TimeTrace trace;
    trace.meta.rtol = opts.rtol;
    trace.meta.atol = opts.atol;
    trace.meta.frame_nu = p.nu_c;
    trace.meta.self_oscillating = p.self_oscillating();
    try {
        trace.meta.admissible = theta_interval(c);
    } catch (const InputError&) {
        trace.meta.admissible.reset();
    }

    const auto samples = static_cast<std::size_t>(std::floor(duration / opts.sample_dt + 1e-9)) + 1;
    trace.t.reserve(samples);
    trace.a.reserve(samples);
    trace.m.reserve(samples);

    using detail::State;
    const State y0{a0, m0};
    if (!detail::finite(y0)) throw IntegrationError("non-finite initial state");
    trace.t.push_back(0.0);
    trace.a.push_back(y0[0]);
    trace.m.push_back(y0[1]);
    std::size_t next_sample = 1;

    auto system = [&f](const State& y, State& dydt, double) { dydt = f(y); };
    auto stepper = odeint::make_dense_output(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>());
    stepper.initialize(y0, 0.0, std::min(opts.initial_step, duration));

    State ys;
    try {
        while (next_sample < samples) {
            const double t = stepper.current_time();
            if (trace.meta.steps >= opts.max_steps)
                throw IntegrationError("step budget exhausted at t = " + std::to_string(t) + " us");
            if (stepper.current_time_step() < opts.min_step)
                throw IntegrationError("step size underflow (h = " + std::to_string(stepper.current_time_step()) +
                                       " us) at t = " + std::to_string(t) + " us");
            const auto [t0, t1] = stepper.do_step(system);
            ++trace.meta.steps;
            if (!detail::finite(stepper.current_state()))
                throw IntegrationError("non-finite state at t = " + std::to_string(t0) + " us");
            while (next_sample < samples) {
                const double ts = static_cast<double>(next_sample) * opts.sample_dt;
                if (ts > t1) break;
                stepper.calc_state(ts, ys);
                trace.t.push_back(ts);
                trace.a.push_back(ys[0]);
                trace.m.push_back(ys[1]);
                ++next_sample;
            }
        }
    } catch (const odeint::step_adjustment_error& e) {
        throw IntegrationError(std::string("step control failed: ") + e.what());
    }
    return trace;
}

namespace detail {

// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y, std::size_t begin,
                               std::size_t end) {
    const auto n = static_cast<double>(end - begin);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

}  // namespace detail

inline constexpr double kDriftThreshold = 1e-4;  // MHz

/// Synchronization frequency, relative phase and amplitudes over the final
/// `window` microseconds of a trace.
inline SteadyEstimate extract_steady_state(const TimeTrace& trace, double window) {
    if (trace.t.size() < 8 || !(window > 0.0)) throw InputError("trace too short for steady-state extraction");
    const double t_end = trace.t.back();
    if (t_end - trace.t.front() < 2.0 * window) throw InputError("trace must be longer than twice the window");

    const auto first = static_cast<std::size_t>(
        std::lower_bound(trace.t.begin(), trace.t.end(), t_end - window) - trace.t.begin());
    const std::size_t n = trace.t.size();
    SteadyEstimate est;
    if (n - first < 8) return est;

    // unwrapped cavity phase
    std::vector<double> phase(n, 0.0);
    double amp_a = 0.0, amp_m = 0.0, amp_lo = std::numeric_limits<double>::infinity(), amp_hi = 0.0;
    cplx rel_sum(0.0, 0.0);
    double prev = std::arg(trace.a[first]);
    phase[first] = prev;
    for (std::size_t i = first; i < n; ++i) {
        const double abs_a = std::abs(trace.a[i]);
        amp_a += abs_a;
        amp_m += std::abs(trace.m[i]);
        amp_lo = std::min(amp_lo, abs_a);
        amp_hi = std::max(amp_hi, abs_a);
        if (i > first) {
            const double raw = std::arg(trace.a[i]);
            const double d = std::remainder(raw - prev, kTwoPi);
            phase[i] = phase[i - 1] + d;
            prev = raw;
        }
        if (abs_a > 0.0) {
            const cplx ratio = trace.m[i] / trace.a[i];
            if (std::abs(ratio) > 0.0) rel_sum += ratio / std::abs(ratio);
        }
    }
    const auto count = static_cast<double>(n - first);
    est.A = amp_a / count;
    est.M = amp_m / count;
    constexpr double kAmplitudeFloor = 1e-9;
    if (!(est.A > kAmplitudeFloor)) return est;  // nothing oscillating

    const double slope = detail::regression_slope(trace.t, phase, first, n);
    const double w = -slope / kTwoPi;
    est.nu_s = trace.meta.frame_nu + w;

    const std::size_t mid = first + (n - first) / 2;
    const double w1 = -detail::regression_slope(trace.t, phase, first, mid) / kTwoPi;
    const double w2 = -detail::regression_slope(trace.t, phase, mid, n) / kTwoPi;
    est.residual_drift = std::abs(w2 - w1);

    double theta = std::abs(rel_sum) > 0.0 ? -std::arg(rel_sum) : 0.0;
    if (trace.meta.admissible) {
        const ThetaInterval iv = *trace.meta.admissible;
        while (theta <= iv.lo) theta += kTwoPi;
        while (theta > iv.lo + kTwoPi) theta -= kTwoPi;
        if (theta >= iv.hi && theta - kTwoPi > iv.lo - 1e-12) theta -= kTwoPi;
    }
    est.theta = theta;

    const double amp_spread = (amp_hi - amp_lo) / est.A;
    est.converged = est.residual_drift < kDriftThreshold && amp_spread < 1e-3;
    return est;
}

struct JacobianStability {
    std::vector<cplx> eigenvalues;  // rad/us
    cplx zero_mode;
    double max_real = 0.0;  // largest real part among the non-rotational modes
    bool stable = false;
};

/// Eigenvalues (rad/us) of the real 4x4 Jacobian of the equations of motion
/// (Re a, Im a, Re m, Im m) in the frame rotating at s.nu_s, at the steady state s.
inline std::vector<cplx> jacobian_eigenvalues(const SyncSolution& s, const SystemParams& p, const CouplingSet& c,
                                              double delta) {
    const cplx i(0.0, 1.0);
    const double w = s.nu_s - p.nu_c;
    const double A = s.A;
    const cplx m0 = std::polar(s.M, -s.theta);
    const cplx cplus(c.g + c.Gamma, -c.J);
    const cplx cminus(c.g - c.Gamma, c.J);
    const double alpha = c.re_alpha();
    const double gain = p.N * (1.0 - p.eps * A * A) - p.beta;

    const cplx fa = (gain + i * w) * A - i * cplus * m0;
    const cplx fm = (-i * delta + i * w - alpha) * m0 - i * cminus * A;
    const double scale = (std::abs(cplus) + std::abs(cminus) + p.N + p.beta + alpha + std::abs(delta) +
                          std::abs(w) + 1.0) * (A + s.M + 1e-300);
    if (!(std::abs(fa) + std::abs(fm) <= 1e-6 * scale))
        throw InputError("jacobian_eigenvalues: solution does not satisfy the steady-state equations");

    // complex-linear coefficient k: (x, y) -> [[kr, -ki], [ki, kr]]
    // conjugate-linear coefficient u: (x, y) -> [[ur, ui], [ui, -ur]]
    Eigen::Matrix4d jac = Eigen::Matrix4d::Zero();
    auto put_linear = [&](int row, int col, cplx k) {
        jac(row, col) += k.real();
        jac(row, col + 1) += -k.imag();
        jac(row + 1, col) += k.imag();
        jac(row + 1, col + 1) += k.real();
    };
    auto put_conj = [&](int row, int col, cplx u) {
        jac(row, col) += u.real();
        jac(row, col + 1) += u.imag();
        jac(row + 1, col) += u.imag();
        jac(row + 1, col + 1) += -u.real();
    };
    const double sat = p.N * p.eps * A * A;
    put_linear(0, 0, gain - sat + i * w);
    put_conj(0, 0, -sat);
    put_linear(0, 2, -i * cplus);
    put_linear(2, 2, -i * delta + i * w - alpha);
    put_linear(2, 0, -i * cminus);
    jac *= kTwoPi;

    Eigen::EigenSolver<Eigen::Matrix4d> solver(jac, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("Jacobian eigen-decomposition failed");
    std::vector<cplx> eig;
    for (int k = 0; k < 4; ++k) eig.push_back(solver.eigenvalues()[k]);
    std::sort(eig.begin(), eig.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });
    return eig;
}

/// Linear stability from the eigenvalues: the rotational zero mode (smallest
/// modulus) is discarded, all others must have negative real part.
inline JacobianStability classify_eigenvalues(std::vector<cplx> eigenvalues) {
    JacobianStability out;
    out.eigenvalues = std::move(eigenvalues);
    if (out.eigenvalues.empty()) return out;
    const auto zero = std::min_element(out.eigenvalues.begin(), out.eigenvalues.end(),
                                       [](cplx x, cplx y) { return std::abs(x) < std::abs(y); });
    out.zero_mode = *zero;
    out.max_real = -std::numeric_limits<double>::infinity();
    for (auto it = out.eigenvalues.begin(); it != out.eigenvalues.end(); ++it)
        if (it != zero) out.max_real = std::max(out.max_real, it->real());
    out.stable = out.max_real < 0.0;
    return out;
}

inline JacobianStability jacobian_stability(const SyncSolution& s, const SystemParams& p, const CouplingSet& c,
                                            double delta) {
    return classify_eigenvalues(jacobian_eigenvalues(s, p, c, delta));
}

/// Steady-state estimate with the default extraction used across the library:
/// integrate for `duration`, extract over the final quarter.
inline SteadyEstimate settle(const SystemParams& p, const CouplingSet& c, double delta, cplx a0, cplx m0,
                             double duration, IntegratorOptions opts = {}) {
    const TimeTrace trace = integrate(p, c, delta, a0, m0, duration, opts);
    return extract_steady_state(trace, duration / 4.0);
}

/// Writes t_us,re_a,im_a,re_m,im_m rows at full precision.
inline void write_trace_csv(std::ostream& os, const TimeTrace& trace) {
    const auto num = [](double v) { return exact(v); };
    os << "t_us,re_a,im_a,re_m,im_m\n";
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        os << num(trace.t[i]) << ',' << num(trace.a[i].real()) << ',' << num(trace.a[i].imag()) << ','
           << num(trace.m[i].real()) << ',' << num(trace.m[i].imag()) << '\n';
    }
}

}  // namespace magnonlink
