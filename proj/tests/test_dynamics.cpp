#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "magnonlink/dynamics.hpp"
#include "oracles.hpp"

using namespace magnonlink;

namespace {

CouplingSet coupling(double g, double J, double Gamma, double alpha) {
    CouplingSet c;
    c.g = g;
    c.J = J;
    c.Gamma = Gamma;
    c.alpha_eff = alpha;
    return c;
}

const CouplingSet kCoherent = coupling(11.0, 0.0, 0.0, 1.8);

SystemParams gain(double N, double beta, double eps) {
    SystemParams p;
    p.N = N;
    p.beta = beta;
    p.eps = eps;
    return p;
}

// hand-built trace with known frequency and phase lag
TimeTrace synthetic(double nu_offset, double theta, double A, double M, double frame) {
    TimeTrace tr;
    tr.meta.frame_nu = frame;
    for (int k = 0; k <= 4000; ++k) {
        const double t = k * 1e-3;
        const double ph = -2 * oracle::pi * nu_offset * t;
        tr.t.push_back(t);
        tr.a.push_back(std::polar(A, ph));
        tr.m.push_back(std::polar(M, ph - theta));
    }
    return tr;
}

}  // namespace

TEST(Integrate, UncoupledVanDerPolAmplitude) {
    for (auto [N, beta, eps] : {std::tuple{170.8, 85.4, 1.0}, {120.0, 100.0, 0.5}, {50.0, 10.0, 4.0}}) {
        const SystemParams p = gain(N, beta, eps);
        const auto tr = integrate(p, CouplingSet{{}, {}, 1.0, 0.0}, 0.0, {1e-3, 0.0}, {0.0, 0.0}, 3.0);
        EXPECT_NEAR(std::norm(tr.a.back()) / ((N - beta) / (N * eps)), 1.0, 1e-6);
        const auto est = extract_steady_state(tr, 0.5);
        EXPECT_NEAR(est.nu_s, p.nu_c, 1e-6);
    }
}

TEST(Integrate, NoGainDecays) {
    const SystemParams p = gain(50.0, 85.4, 1.0);
    const auto tr = integrate(p, CouplingSet{{}, {}, 1.0, 0.0}, 0.0, {0.5, 0.0}, {0.0, 0.0}, 0.2);
    // monotone down to the absolute tolerance floor
    for (std::size_t k = 1; k < tr.a.size(); ++k) EXPECT_LE(std::abs(tr.a[k]), std::abs(tr.a[k - 1]) + 1e-11);
    EXPECT_LT(std::abs(tr.a.back()), 1e-6);
    EXPECT_FALSE(tr.meta.self_oscillating);
    EXPECT_FALSE(extract_steady_state(tr, 0.05).converged);
}

TEST(Integrate, AgreesWithFixedStepRungeKutta) {
    const SystemParams p;
    const CouplingSet c = coupling(3.0, -2.0, 1.5, 2.0);
    const oracle::cplx a0(0.3, 0.1), m0(-0.1, 0.2);
    IntegratorOptions opts;
    opts.rtol = 1e-11;
    opts.atol = 1e-13;
    const auto tr = integrate(p, c, 4.0, a0, m0, 0.5, opts);
    const auto ref = oracle::rk4({a0, m0}, p, oracle::from(c), 4.0, 0.5, 200000);
    EXPECT_NEAR(std::abs(tr.a.back() - ref[0]), 0.0, 1e-8);
    EXPECT_NEAR(std::abs(tr.m.back() - ref[1]), 0.0, 1e-8);
}

TEST(Integrate, TighteningToleranceConverges) {
    const SystemParams p;
    const CouplingSet c = coupling(3.0, -2.0, 1.5, 2.0);
    double prev_err = 1e300;
    const auto ref = oracle::rk4({oracle::cplx(0.3, 0.1), oracle::cplx(-0.1, 0.2)}, p, oracle::from(c), 4.0, 0.3, 200000);
    for (double rtol : {1e-5, 1e-7, 1e-9}) {
        IntegratorOptions opts;
        opts.rtol = rtol;
        opts.atol = rtol * 1e-3;
        const auto tr = integrate(p, c, 4.0, {0.3, 0.1}, {-0.1, 0.2}, 0.3, opts);
        const double err = std::abs(tr.a.back() - ref[0]);
        EXPECT_LT(err, prev_err + 1e-12);
        prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-7);
}

TEST(Integrate, Errors) {
    const SystemParams p;
    EXPECT_THROW(integrate(p, kCoherent, 0.0, {std::nan(""), 0}, {}, 1.0), IntegrationError);
    IntegratorOptions opts;
    opts.min_step = 1.0;  // any real step is refused
    EXPECT_THROW(integrate(p, kCoherent, 0.0, {0.1, 0}, {}, 1.0, opts), IntegrationError);
    EXPECT_THROW(integrate(p, kCoherent, 0.0, {0.1, 0}, {}, -1.0), InputError);
    opts = {};
    opts.rtol = 0.0;
    EXPECT_THROW(integrate(p, kCoherent, 0.0, {0.1, 0}, {}, 1.0, opts), InputError);
}

TEST(Extract, SyntheticTrace) {
    const auto est = extract_steady_state(synthetic(1.7, 0.3, 1.0, 0.5, 3820.0), 2.0);
    EXPECT_TRUE(est.converged);
    EXPECT_NEAR(est.nu_s, 3821.7, 1e-9);
    EXPECT_NEAR(est.theta, 0.3, 1e-12);
    EXPECT_NEAR(est.A, 1.0, 1e-12);
    EXPECT_NEAR(est.M, 0.5, 1e-12);
}

TEST(Extract, DecayingTraceDoesNotConverge) {
    TimeTrace tr = synthetic(1.0, 0.3, 1.0, 0.5, 0.0);
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        tr.a[k] *= std::exp(-3.0 * tr.t[k]);
        tr.m[k] *= std::exp(-3.0 * tr.t[k]);
    }
    EXPECT_FALSE(extract_steady_state(tr, 2.0).converged);
}

TEST(Settle, CoherentZeroDetuningLocksToAnOuterRoot) {
    // At zero detuning the central root is slope-unstable; the oscillator locks
    // onto one of the two outer roots.
    const SystemParams p;
    const auto roots = solve_branches(0.0, kCoherent, p);
    ASSERT_EQ(roots.size(), 3u);
    const auto est = settle(p, kCoherent, 0.0, {0.8, 0.1}, {0.3, -0.2}, 20.0);
    ASSERT_TRUE(est.converged);
    const bool near_low = std::abs(est.nu_s - roots[0].nu_s) < 1e-3 && std::abs(est.theta - roots[0].theta) < 1e-2;
    const bool near_high = std::abs(est.nu_s - roots[2].nu_s) < 1e-3 && std::abs(est.theta - roots[2].theta) < 1e-2;
    EXPECT_TRUE(near_low || near_high) << est.nu_s << " " << est.theta;
}

TEST(Settle, BistableDetuningReachesBothStableRoots) {
    const SystemParams p;
    const double delta = 10.0;
    const auto roots = solve_branches(delta, kCoherent, p);
    ASSERT_EQ(roots.size(), 3u);
    for (std::size_t idx : {std::size_t{0}, std::size_t{2}}) {
        const auto& s = roots[idx];
        const cplx a0 = 0.98 * s.A, m0 = std::polar(0.98 * s.M, -s.theta + 0.05);
        const auto est = settle(p, kCoherent, delta, a0, m0, 20.0);
        ASSERT_TRUE(est.converged);
        EXPECT_NEAR(est.nu_s, s.nu_s, 1e-3);
        EXPECT_NEAR(est.theta, s.theta, 1e-2);
        EXPECT_NEAR(est.A, s.A, 1e-4);
    }
}

TEST(Jacobian, MatchesFiniteDifferenceOracle) {
    const SystemParams p;
    for (const CouplingSet& c : {kCoherent, coupling(2.0, -4.0, 3.0, 1.5), coupling(0.0, 0.0, 6.2, 3.0)}) {
        for (double delta : {-15.0, 0.0, 7.0}) {
            for (const auto& s : solve_branches(delta, c, p)) {
                if (!s.gain_feasible) continue;
                const auto lib = jacobian_eigenvalues(s, p, c, delta);
                const oracle::LockState ls{s.nu_s - p.nu_c, s.theta, s.r, gain_demand(s.theta, c)};
                auto ref = oracle::fd_eigenvalues(ls, delta, p, oracle::from(c));
                auto key = [](cplx x, cplx y) { return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag(); };
                std::sort(ref.begin(), ref.end(), key);
                ASSERT_EQ(lib.size(), 4u);
                for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(lib[k] - ref[k]), 0.0, 1e-4 * (1 + std::abs(ref[k])));
            }
        }
    }
}

TEST(Jacobian, UncoupledLimitCycleSpectrum) {
    // eigenvalues 0, -2*2pi(N - beta) and the magnon pair with real part -2pi alpha
    const SystemParams p;
    const CouplingSet c = coupling(1e-9, 0, 0, 1.8);
    const auto s = solve_branches(5.0, c, p).front();
    const auto stab = jacobian_stability(s, p, c, 5.0);
    EXPECT_NEAR(std::abs(stab.zero_mode), 0.0, 1e-6);
    std::vector<double> re;
    for (auto e : stab.eigenvalues) re.push_back(e.real());
    std::sort(re.begin(), re.end());
    EXPECT_NEAR(re[0], -2 * 2 * oracle::pi * (p.N - p.beta), 1e-5);
    EXPECT_NEAR(re[1], -2 * oracle::pi * 1.8, 1e-5);
    EXPECT_NEAR(re[2], -2 * oracle::pi * 1.8, 1e-5);
    EXPECT_TRUE(stab.stable);
}

TEST(Jacobian, MiddleBranchUnstableOuterStableInsideFoldWindow) {
    const SystemParams p;
    const auto roots = solve_branches(10.0, kCoherent, p);
    ASSERT_EQ(roots.size(), 3u);
    EXPECT_GT(jacobian_stability(roots[1], p, kCoherent, 10.0).max_real, 0.0);
    EXPECT_TRUE(jacobian_stability(roots[0], p, kCoherent, 10.0).stable);
    EXPECT_TRUE(jacobian_stability(roots[2], p, kCoherent, 10.0).stable);
}

TEST(Jacobian, OuterZeroDetuningRootsAreStableAndPerturbationsReturn) {
    const SystemParams p;
    const auto roots = solve_branches(0.0, kCoherent, p);
    const auto& s = roots[0];
    EXPECT_TRUE(jacobian_stability(s, p, kCoherent, 0.0).stable);
    const auto est = settle(p, kCoherent, 0.0, 1.05 * s.A, std::polar(0.95 * s.M, -s.theta - 0.1), 10.0);
    EXPECT_NEAR(est.nu_s, s.nu_s, 1e-3);
}

TEST(Jacobian, SlopeStableRootWithLargeRatioIsOscillatoryUnstable) {
    // damping-dominated lock with r well above sqrt(2): the slope rule passes but
    // a complex pair crosses into the right half plane
    SystemParams p;
    p.N = 1085.4;  // N - beta = 1000
    const CouplingSet c = coupling(11.0, 0, 0, 1.8);
    const auto roots = solve_branches(10.0, c, p);
    const auto& s = roots[0];
    ASSERT_TRUE(s.stable);
    const auto stab = jacobian_stability(s, p, c, 10.0);
    EXPECT_FALSE(stab.stable);
    bool complex_pair = false;
    for (auto e : stab.eigenvalues) complex_pair |= e.real() > 0 && std::abs(e.imag()) > 1e-6;
    EXPECT_TRUE(complex_pair);
}

TEST(Jacobian, RejectsNonSteadyInput) {
    const SystemParams p;
    auto s = solve_branches(10.0, kCoherent, p).front();
    s.theta += 0.1;
    EXPECT_THROW(jacobian_eigenvalues(s, p, kCoherent, 10.0), InputError);
}

TEST(TraceCsv, HeaderAndRows) {
    const auto tr = integrate(SystemParams{}, kCoherent, 0.0, {0.1, 0}, {}, 0.01);
    std::ostringstream os;
    write_trace_csv(os, tr);
    const std::string out = os.str();
    EXPECT_EQ(out.substr(0, out.find('\n')), "t_us,re_a,im_a,re_m,im_m");
    EXPECT_EQ(static_cast<std::size_t>(std::count(out.begin(), out.end(), '\n')), tr.t.size() + 1);
}

TEST(Settle, OscillatoryUnstableRootIsLeftByTheDynamics) {
    SystemParams p;
    p.N = 1085.4;
    const CouplingSet c = coupling(11.0, 0, 0, 1.8);
    const auto s = solve_branches(10.0, c, p).front();
    ASSERT_TRUE(s.stable);
    const auto est = settle(p, c, 10.0, s.A * (1 + 1e-6), std::polar(s.M, -s.theta), 40.0);
    EXPECT_TRUE(!est.converged || std::abs(est.nu_s - s.nu_s) > 1e-3);
}
