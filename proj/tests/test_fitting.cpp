#include <cmath>

#include <gtest/gtest.h>

#include "magnonlink/fitting.hpp"

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

std::vector<double> grid(double lo, double hi, int n) {
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(lo + (hi - lo) * k / (n - 1));
    return out;
}

}  // namespace

TEST(Synthesize, FollowsSweepHistory) {
    const auto d = grid(-60, 60, 41);
    const auto data = synthesize_dispersion(coupling(11, 0, 0, 1.8), SystemParams{}, d, 0.0, 1);
    ASSERT_EQ(data.points.size(), 82u);
    EXPECT_EQ(data.points.front().hint, BranchHint::up);
    EXPECT_EQ(data.points.back().hint, BranchHint::down);
    const auto same = synthesize_dispersion(coupling(11, 0, 0, 1.8), SystemParams{}, d, 0.05, 42);
    const auto again = synthesize_dispersion(coupling(11, 0, 0, 1.8), SystemParams{}, d, 0.05, 42);
    for (std::size_t i = 0; i < same.points.size(); ++i) EXPECT_EQ(same.points[i].nu_s, again.points[i].nu_s);
}

TEST(Predict, ReproducesNoiselessData) {
    const CouplingSet c = coupling(11, 0, 0, 1.8);
    const auto data = synthesize_dispersion(c, SystemParams{}, grid(-60, 60, 61), 0.0, 1);
    EXPECT_NEAR(dispersion_loss(data, {c, SystemParams{}}), 0.0, 1e-20);
}

TEST(Fit, NoiselessCoherentRecovery) {
    const CouplingSet truth = coupling(11, 0, 0, 1.8);
    const auto data = synthesize_dispersion(truth, SystemParams{}, grid(-60, 60, 100), 0.0, 1);
    DispersionModel init{coupling(9.0, 0, 0, 2.4), SystemParams{}};
    const auto fit = fit_dispersion(data, {FitParameter::g, FitParameter::alpha}, init);
    EXPECT_NEAR(fit.params.at("g"), 11.0, 11.0 * 1e-3);
    EXPECT_NEAR(fit.params.at("alpha"), 1.8, 1.8 * 1e-3);
    EXPECT_LT(fit.rms_residual, 1e-3);
}

TEST(Fit, NoiselessDissipativeRecovery) {
    const CouplingSet truth = coupling(0, 0, 6.2, 3.0);
    const auto data = synthesize_dispersion(truth, SystemParams{}, grid(-60, 60, 100), 0.0, 1);
    DispersionModel init{coupling(0, 0, 5.0, 3.6), SystemParams{}};
    const auto fit = fit_dispersion(data, {FitParameter::Gamma, FitParameter::alpha}, init);
    EXPECT_NEAR(fit.params.at("Gamma"), 6.2, 6.2 * 1e-3);
    EXPECT_NEAR(fit.params.at("alpha"), 3.0, 3.0 * 1e-3);
}

TEST(FitProperty, DuplicatingAPointEqualsDoublingItsWeight) {
    const CouplingSet truth = coupling(11, 0, 0, 1.8);
    auto data = synthesize_dispersion(truth, SystemParams{}, grid(-50, 50, 21), 0.2, 3);
    DispersionData dup = data;
    dup.points.push_back(data.points[5]);
    DispersionData weighted = data;
    weighted.weights.assign(data.points.size(), 1.0);
    weighted.weights[5] = 2.0;
    const DispersionModel probe{coupling(10.5, 0, 0, 2.0), SystemParams{}};
    EXPECT_NEAR(dispersion_loss(dup, probe), dispersion_loss(weighted, probe), 1e-9);

    FitOptions opts;
    opts.starts = 3;
    const DispersionModel init{coupling(10, 0, 0, 2), SystemParams{}};
    const auto a = fit_dispersion(dup, {FitParameter::g, FitParameter::alpha}, init, opts);
    const auto b = fit_dispersion(weighted, {FitParameter::g, FitParameter::alpha}, init, opts);
    EXPECT_NEAR(a.params.at("g"), b.params.at("g"), 1e-6);
    EXPECT_NEAR(a.params.at("alpha"), b.params.at("alpha"), 1e-6);
}

TEST(FitProperty, Deterministic) {
    const auto data = synthesize_dispersion(coupling(11, 0, 0, 1.8), SystemParams{}, grid(-50, 50, 21), 0.1, 9);
    const DispersionModel init{coupling(10, 0, 0, 2), SystemParams{}};
    FitOptions opts;
    opts.starts = 4;
    const auto a = fit_dispersion(data, {FitParameter::g, FitParameter::alpha}, init, opts);
    const auto b = fit_dispersion(data, {FitParameter::g, FitParameter::alpha}, init, opts);
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.loss, b.loss);
}

TEST(Fit, CavityFrequencyCanBeFree) {
    SystemParams p;
    p.nu_c = 3821.5;
    const auto data = synthesize_dispersion(coupling(0, 0, 6.2, 3.0), p, grid(-60, 60, 60), 0.0, 1);
    DispersionModel init{coupling(0, 0, 6.2, 3.0), SystemParams{}};
    const auto fit = fit_dispersion(data, {FitParameter::nu_c}, init);
    EXPECT_NEAR(fit.params.at("nu_c"), 3821.5, 1e-5);
}

TEST(Fit, InputErrors) {
    DispersionData tiny;
    tiny.points = {{0, 3820, BranchHint::none}, {1, 3820, BranchHint::none}};
    const DispersionModel init{coupling(11, 0, 0, 1.8), SystemParams{}};
    EXPECT_THROW(fit_dispersion(tiny, {FitParameter::g}, init), InputError);
    DispersionData same;
    for (int k = 0; k < 5; ++k) same.points.push_back({2.0, 3820.0 + k, BranchHint::none});
    EXPECT_THROW(fit_dispersion(same, {FitParameter::g}, init), InputError);
    const auto ok = synthesize_dispersion(coupling(11, 0, 0, 1.8), SystemParams{}, grid(-50, 50, 11), 0, 1);
    EXPECT_THROW(fit_dispersion(ok, std::span<const FitParameter>{}, init), InputError);
    EXPECT_THROW(fit_dispersion(ok, {FitParameter::g, FitParameter::g}, init), InputError);
    DispersionModel negative = init;
    negative.coupling.alpha_eff = -1.0;
    EXPECT_THROW(fit_dispersion(ok, {FitParameter::alpha}, negative), InputError);
    EXPECT_THROW(parse_fit_parameter("kappa"), InputError);
    EXPECT_THROW(parse_hint("sideways"), InputError);
}
