// Manufactured-solution convergence of the flow solver.

#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "taylor_green.hpp"

using namespace pmdflow::testing;

TEST_CASE("spatial convergence is second order over three grids") {
    const Tg tg{0.05};
    double eu[3], ep[3];
    for (int m = 0; m < 3; ++m) {
        const int f = 1 << m;
        // dt shrinks with h so the time error stays subdominant.
        const auto r = run(tg, 16 * f + 1, 32 * f + 1, 0.02 / f, 0.5);
        eu[m] = r.velocity_error;
        ep[m] = r.pressure_error;
    }
    const double ou1 = std::log2(eu[0] / eu[1]), ou2 = std::log2(eu[1] / eu[2]);
    const double op1 = std::log2(ep[0] / ep[1]), op2 = std::log2(ep[1] / ep[2]);
    std::printf("velocity errors %.3e %.3e %.3e orders %.3f %.3f\n", eu[0], eu[1], eu[2], ou1, ou2);
    std::printf("pressure errors %.3e %.3e %.3e orders %.3f %.3f\n", ep[0], ep[1], ep[2], op1, op2);
    CHECK(ou1 >= 1.9);
    CHECK(ou2 >= 1.9);
    CHECK(op1 >= 1.8);
    CHECK(op2 >= 1.8);
}

TEST_CASE("temporal convergence is second order") {
    // Viscous regime on a fixed grid: the dt^2 truncation dominates the
    // O(dt h^2) momentum-interpolation term.
    const Tg tg{0.5};
    const double dt0 = 0.04, t_end = 0.8;
    const auto ref = run(tg, 65, 129, dt0 / 32, t_end);
    double en[3], ef[3];
    for (int m = 0; m < 3; ++m) {
        const auto r = run(tg, 65, 129, dt0 / (1 << m), t_end);
        en[m] = std::max(max_diff(r.u, ref.u), max_diff(r.v, ref.v));
        ef[m] = std::max(max_diff(r.flux_xi, ref.flux_xi), max_diff(r.flux_eta, ref.flux_eta));
    }
    const double on1 = std::log2(en[0] / en[1]), on2 = std::log2(en[1] / en[2]);
    const double of1 = std::log2(ef[0] / ef[1]), of2 = std::log2(ef[1] / ef[2]);
    std::printf("node velocity differences %.3e %.3e %.3e orders %.3f %.3f\n", en[0], en[1], en[2], on1, on2);
    std::printf("face flux differences %.3e %.3e %.3e orders %.3f %.3f\n", ef[0], ef[1], ef[2], of1, of2);
    CHECK(of1 >= 2.0);
    CHECK(of2 >= 2.0);
    CHECK(on1 >= 1.9);
    CHECK(on2 >= 1.9);
}
