#pragma once

// Reference computations written independently of the library. Nothing here
// calls into magnonlink except for the plain parameter structs.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "magnonlink/model.hpp"

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Coherent-only relation Delta(theta), hand-derived.
inline double coherent_delta(double theta, double g, double alpha) {
    return g * g / (2.0 * alpha) * std::sin(2.0 * theta) - alpha / std::tan(theta);
}

inline double cable_length(double sigma, double db_per_m, double baseline) {
    return baseline - 20.0 * std::log(sigma) / std::log(10.0) / db_per_m;
}

// Gamma + iJ = sigma * sqrt(kappa gamma) * exp(-i phi)
inline std::pair<double, double> link_couplings(double kappa, double gamma, double phi, double sigma) {
    const cplx z = sigma * std::sqrt(kappa * gamma) * std::exp(cplx(0.0, -phi));
    return {z.imag(), z.real()};  // J, Gamma
}

struct Coupling {
    double g = 0, J = 0, Gamma = 0, alpha = 1;
    cplx plus() const { return {g + Gamma, -J}; }
    cplx minus() const { return {g - Gamma, J}; }
};

inline Coupling from(const magnonlink::CouplingSet& c) { return {c.g, c.J, c.Gamma, c.alpha_eff.real()}; }

// Steady state parametrised by the lock offset w = nu_s - nu_c. The magnon
// equation gives rho = m/a; the imaginary part of the cavity equation is a
// scalar equation in w alone and its real part fixes the net gain.
struct LockState {
    double w, theta, r, gain;
};

inline cplx rho(double w, double delta, const Coupling& c) {
    return cplx(0.0, -1.0) * c.minus() / cplx(c.alpha, delta - w);
}

inline double lock_equation(double w, double delta, const Coupling& c) {
    return w - (c.plus() * c.minus() / cplx(c.alpha, delta - w)).imag();
}

inline std::vector<LockState> lock_states(double delta, const Coupling& c, double span = 400.0,
                                          int samples = 400000) {
    std::vector<LockState> out;
    const double lo = -span, hi = span;
    double w0 = lo, f0 = lock_equation(w0, delta, c);
    for (int k = 1; k <= samples; ++k) {
        const double w1 = lo + (hi - lo) * k / samples;
        const double f1 = lock_equation(w1, delta, c);
        if (f0 == 0.0 || f0 * f1 < 0.0) {
            double a = w0, b = w1, fa = f0;
            for (int it = 0; it < 200 && b - a > 1e-14 * (1 + std::abs(a)); ++it) {
                const double m = 0.5 * (a + b), fm = lock_equation(m, delta, c);
                if ((fa < 0) == (fm < 0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            const double w = 0.5 * (a + b);
            const cplx q = rho(w, delta, c);
            const double gain = (c.plus() * c.minus() / cplx(c.alpha, delta - w)).real();
            out.push_back({w, -std::arg(q), std::abs(q), gain});
        }
        w0 = w1;
        f0 = f1;
    }
    return out;
}

// Equations of motion (rad/us) in the frame rotating at nu_c, written from scratch.
inline std::array<cplx, 2> rhs(const std::array<cplx, 2>& y, const magnonlink::SystemParams& p, const Coupling& c,
                               double delta) {
    const cplx i(0.0, 1.0);
    const double tau = 2.0 * pi;
    const cplx a = y[0], m = y[1];
    const double G = p.N * (1.0 - p.eps * std::norm(a)) - p.beta;
    return {tau * (G * a - i * c.plus() * m), tau * (-(i * delta + c.alpha) * m - i * c.minus() * a)};
}

// Central-difference Jacobian in the frame rotating at nu_c + w; eigenvalues
// are frame independent except for the rotational zero mode.
inline std::vector<cplx> fd_eigenvalues(const LockState& s, double delta, const magnonlink::SystemParams& p,
                                        const Coupling& c) {
    const double A2 = (p.N - p.beta - s.gain) / (p.N * p.eps);
    const double A = std::sqrt(A2);
    const cplx a0(A, 0.0), m0 = std::polar(s.r * A, -s.theta);
    auto f = [&](const Eigen::Vector4d& x) {
        const std::array<cplx, 2> y{cplx(x[0], x[1]), cplx(x[2], x[3])};
        auto d = rhs(y, p, c, delta);
        const cplx rot(0.0, 2.0 * pi * s.w);  // remove the lab rotation
        d[0] += rot * y[0];
        d[1] += rot * y[1];
        return Eigen::Vector4d(d[0].real(), d[0].imag(), d[1].real(), d[1].imag());
    };
    const Eigen::Vector4d x0(a0.real(), a0.imag(), m0.real(), m0.imag());
    Eigen::Matrix4d jac;
    for (int k = 0; k < 4; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x0[k]));
        Eigen::Vector4d xp = x0, xm = x0;
        xp[k] += h;
        xm[k] -= h;
        jac.col(k) = (f(xp) - f(xm)) / (2.0 * h);
    }
    Eigen::EigenSolver<Eigen::Matrix4d> es(jac, false);
    std::vector<cplx> ev;
    for (int k = 0; k < 4; ++k) ev.push_back(es.eigenvalues()[k]);
    return ev;
}

// Largest real part after discarding the eigenvalue closest to zero.
inline double max_real_nonzero(std::vector<cplx> ev) {
    std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    double mx = -1e300;
    for (std::size_t k = 1; k < ev.size(); ++k) mx = std::max(mx, ev[k].real());
    return mx;
}

// Classic fixed-step RK4 of the same equations, for cross-checking the adaptive integrator.
inline std::array<cplx, 2> rk4(std::array<cplx, 2> y, const magnonlink::SystemParams& p, const Coupling& c,
                               double delta, double duration, int steps) {
    const double h = duration / steps;
    auto add = [](const std::array<cplx, 2>& u, const std::array<cplx, 2>& v, double s) {
        return std::array<cplx, 2>{u[0] + s * v[0], u[1] + s * v[1]};
    };
    for (int k = 0; k < steps; ++k) {
        const auto k1 = rhs(y, p, c, delta);
        const auto k2 = rhs(add(y, k1, h / 2), p, c, delta);
        const auto k3 = rhs(add(y, k2, h / 2), p, c, delta);
        const auto k4 = rhs(add(y, k3, h), p, c, delta);
        for (int j = 0; j < 2; ++j) y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return y;
}

// Dense sign scan of f on (lo, hi); returns the bracketed sign changes.
inline int sign_changes(const std::function<double(double)>& f, double lo, double hi, int n) {
    int count = 0;
    double prev = f(lo);
    for (int k = 1; k <= n; ++k) {
        const double v = f(lo + (hi - lo) * k / n);
        if ((prev < 0) != (v < 0)) ++count;
        prev = v;
    }
    return count;
}

}  // namespace oracle
