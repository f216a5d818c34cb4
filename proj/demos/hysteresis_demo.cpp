// Folds, sweep jumps and one integrated trace for the direct-coupling preset.

#include <cstdio>

#include "magnonlink.hpp"

using namespace magnonlink;

int main() {
    const Scenario sc = preset("positionA");
    const CouplingSet c = coupling_from_link(sc.params, sc.link);

    const FoldPoints f = fold_points(c);
    std::printf("folds: %.3f / %.3f MHz\n", f.delta_down, f.delta_up);

    const HysteresisLoop loop = hysteresis_loop(sc);
    for (double d : loop.up.jumps) std::printf("up sweep jumps at %.2f MHz\n", d);
    for (double d : loop.down.jumps) std::printf("down sweep jumps at %.2f MHz\n", d);

    // inside the bistable window both states are reachable
    const double delta = 10.0;
    for (const auto& s : solve_branches(delta, c, sc.params))
        std::printf("delta=%.1f theta=%.4f nu_s=%.4f %s\n", delta, s.theta, s.nu_s, s.stable ? "stable" : "unstable");

    const SteadyEstimate est = settle(sc.params, c, delta, {1e-3, 0.0}, {0.0, 1e-3}, 20.0);
    std::printf("integrated from a small seed: nu_s=%.4f theta=%.4f\n", est.nu_s, est.theta);
}
