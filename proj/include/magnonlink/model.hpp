#pragma once

// Physical parameters and the traveling-wave coupling algebra.
//
// A cable with propagation phase phi and one-way amplitude transmission sigma
// converts the radiation rates kappa (cavity) and gamma (magnon) into an
// indirect coupling sigma*sqrt(kappa*gamma)*exp(i*phi) = Gamma - iJ, plus a
// radiative back-action sigma^2*gamma*exp(2i*phi) on the magnon damping.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "magnonlink/errors.hpp"

namespace magnonlink {

/// Rates of the active cavity, the magnon and their direct coupling (MHz, cyclic).
struct SystemParams {
    double nu_c = 3820.0;   // cavity frequency
    double beta = 85.4;     // cavity intrinsic damping
    double N = 170.8;       // linear negative damping (gain)
    double eps = 1.0;       // gain saturation, per |a|^2
    double kappa = 18.7;    // cavity radiation into the cable
    double nu_m = 3820.0;   // magnon frequency
    double alpha = 1.8;     // magnon intrinsic damping
    double gamma = 0.0;     // magnon radiation into the cable
    double g = 0.0;         // direct coherent coupling

    double detuning() const noexcept { return nu_m - nu_c; }
    bool self_oscillating() const noexcept { return N > beta; }
};

/// Traveling-wave channel between cavity and magnon.
struct LinkSettings {
    double phi = 0.0;              // propagation phase (rad)
    double sigma = 1.0;            // amplitude transmission, [0, 1]
    double atten_db_per_m = 0.56;  // cable attenuation
    double baseline_m = 1.0;       // cable already in place
};

/// Effective couplings seen by the steady-state and time-domain models.
struct CouplingSet {
    double J = 0.0;                         // coherent (indirect)
    double Gamma = 0.0;                     // dissipative
    std::complex<double> alpha_eff{0.0, 0.0};  // effective magnon damping alpha'
    double g = 0.0;                         // direct coherent

    double re_alpha() const noexcept { return alpha_eff.real(); }
};

/// Reported alongside every cooperativity value.
inline constexpr std::string_view kCooperativityDefinition =
    "C = (g^2 + J^2 + Gamma^2) / Re(alpha')^2, cavity linewidth fully compensated by gain";

inline constexpr double kDampingFloor = 1e-12;  // MHz

struct CouplingReport {
    bool strong_coherent = false;     // |J| > Re(alpha')
    bool strong_dissipative = false;  // |Gamma| > Re(alpha')
    bool strong_direct = false;       // |g| > Re(alpha')
    double cooperativity = 0.0;
    double margin = 0.0;              // max(|J|, |Gamma|, |g|) - Re(alpha'), MHz
    bool damping_floored = false;     // Re(alpha') <= floor, cooperativity uses the floor
    std::string_view cooperativity_definition = kCooperativityDefinition;
};

inline void validate(const SystemParams& p) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!(finite(p.nu_c) && finite(p.beta) && finite(p.N) && finite(p.eps) && finite(p.kappa) &&
          finite(p.nu_m) && finite(p.alpha) && finite(p.gamma) && finite(p.g)))
        throw InputError("system parameters must be finite");
    if (p.beta < 0 || p.kappa < 0 || p.alpha < 0 || p.gamma < 0 || p.eps < 0 || p.N < 0)
        throw InputError("beta, N, eps, kappa, alpha and gamma must be non-negative");
}

inline void validate(const LinkSettings& link) {
    if (!std::isfinite(link.phi)) throw InputError("link phase must be finite");
    if (!(link.sigma >= 0.0 && link.sigma <= 1.0))
        throw InputError("link transmission sigma must lie in [0, 1], got " + std::to_string(link.sigma));
    if (!(link.atten_db_per_m > 0.0) || !std::isfinite(link.atten_db_per_m))
        throw InputError("cable attenuation must be positive");
    if (!(link.baseline_m >= 0.0) || !std::isfinite(link.baseline_m))
        throw InputError("baseline cable length must be non-negative");
}

/// J = -sigma*sqrt(kappa*gamma)*sin(phi), Gamma = sigma*sqrt(kappa*gamma)*cos(phi),
/// alpha' = alpha + sigma^2*gamma*exp(2i*phi). One cable pass scales the coupling by
/// sigma; the magnon's round-trip back-action scales by sigma^2.
inline CouplingSet coupling_from_link(const SystemParams& p, const LinkSettings& link) {
    validate(p);
    validate(link);
    const double strength = link.sigma * std::sqrt(p.kappa * p.gamma);
    CouplingSet c;
    c.J = -strength * std::sin(link.phi) + 0.0;  // + 0.0 drops the sign of a zero
    c.Gamma = strength * std::cos(link.phi) + 0.0;
    c.alpha_eff = p.alpha + link.sigma * link.sigma * p.gamma * std::polar(1.0, 2.0 * link.phi);
    c.g = p.g;
    return c;
}

inline CouplingReport strong_coupling_report(const CouplingSet& c) {
    CouplingReport rep;
    const double damping = c.re_alpha();
    rep.strong_coherent = std::abs(c.J) > damping;
    rep.strong_dissipative = std::abs(c.Gamma) > damping;
    rep.strong_direct = std::abs(c.g) > damping;
    rep.damping_floored = damping <= kDampingFloor;
    const double denom = std::max(damping, kDampingFloor);
    rep.cooperativity = (c.g * c.g + c.J * c.J + c.Gamma * c.Gamma) / (denom * denom);
    rep.margin = std::max({std::abs(c.J), std::abs(c.Gamma), std::abs(c.g)}) - damping;
    return rep;
}

/// Cable length whose attenuation equals an amplitude transmission sigma, on top
/// of the baseline cable.
inline double equivalent_cable_length(double sigma, const LinkSettings& link) {
    if (!(link.atten_db_per_m > 0.0)) throw InputError("cable attenuation must be positive");
    if (!(sigma > 0.0 && sigma <= 1.0)) {
        if (sigma == 0.0) throw InputError("sigma = 0: equivalent cable length is unbounded");
        throw InputError("sigma must lie in (0, 1]");
    }
    return link.baseline_m + (-20.0 * std::log10(sigma)) / link.atten_db_per_m;
}

enum class CouplingMode { coherent, dissipative };

struct DistanceEstimate {
    enum class Method { threshold, bisection };
    Method method = Method::threshold;
    bool strong = false;  // false: no sigma in (0, 1] satisfies the criterion
    double sigma = 0.0;   // weakest transmission that keeps strong coupling
    double length_m = std::numeric_limits<double>::infinity();
};

namespace detail {

// Coupling minus effective damping as a function of the transmission.
inline double strong_margin(const SystemParams& p, const LinkSettings& link, CouplingMode mode,
                            double sigma) {
    LinkSettings l = link;
    l.sigma = sigma;
    const CouplingSet c = coupling_from_link(p, l);
    const double coupling = mode == CouplingMode::coherent ? std::abs(c.J) : std::abs(c.Gamma);
    return coupling - c.re_alpha();
}

}  // namespace detail

/// Longest cable over which the chosen coupling mode stays strong. With a
/// threshold the transmission is taken as given; otherwise the smallest sigma at
/// which coupling catches up with the sigma-dependent damping is bisected.
inline DistanceEstimate max_strong_coupling_distance(const SystemParams& p, const LinkSettings& link,
                                                     CouplingMode mode,
                                                     std::optional<double> sigma_threshold = {}) {
    validate(p);
    validate(link);
    DistanceEstimate est;
    if (sigma_threshold) {
        est.method = DistanceEstimate::Method::threshold;
        est.sigma = *sigma_threshold;
        est.length_m = equivalent_cable_length(*sigma_threshold, link);
        est.strong = detail::strong_margin(p, link, mode, *sigma_threshold) > 0.0;
        return est;
    }
    est.method = DistanceEstimate::Method::bisection;

    constexpr int kScan = 1000;
    auto f = [&](double s) { return detail::strong_margin(p, link, mode, s); };
    double prev_s = 0.0;
    double prev_f = f(0.0);
    for (int i = 1; i <= kScan; ++i) {
        const double s = static_cast<double>(i) / kScan;
        const double fs = f(s);
        if (fs >= 0.0) {
            double lo = prev_s, hi = s;
            if (prev_f >= 0.0) {
                hi = lo;  // strong already at the lower end of the scan
            } else {
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (f(mid) >= 0.0 ? hi : lo) = mid;
                }
            }
            est.strong = true;
            est.sigma = hi;
            if (hi > 0.0) est.length_m = equivalent_cable_length(hi, link);
            return est;
        }
        prev_s = s;
        prev_f = fs;
    }
    return est;
}

}  // namespace magnonlink
