// Taylor-Green vortices u = -cos x sin y F, v = sin x cos y F with
// F = exp(-2 nu t) and p = -(cos 2x + cos 2y) F^2 / 4 solve the
// incompressible Navier-Stokes equations exactly. The annulus 0.5 < r < 2
// carries the exact velocity as Dirichlet data on both rings.
#pragma once

#include <array>
#include <cmath>

#include "grid/ogrid.hpp"
#include "ns/fractional_step.hpp"

namespace pmdflow::testing {

struct Tg {
    double nu;
    std::array<double, 2> velocity(double x, double y, double t) const {
        const double f = std::exp(-2.0 * nu * t);
        return {-std::cos(x) * std::sin(y) * f, std::sin(x) * std::cos(y) * f};
    }
    double pressure(double x, double y, double t) const {
        return -0.25 * (std::cos(2.0 * x) + std::cos(2.0 * y)) * std::exp(-4.0 * nu * t);
    }
};

struct RunResult {
    double velocity_error = 0.0;  // area-weighted rms over interior nodes
    double pressure_error = 0.0;
    Field2D u, v, flux_xi, flux_eta;
};

inline RunResult run(const Tg& tg, int nr, int nc, double dt, double t_end) {
    grid::GridSpec spec;
    spec.n_radial = nr;
    spec.n_circ = nc;
    spec.domain_diameter = 4.0;
    const auto g = grid::build_grid(spec);
    ns::CaseConfig cfg;
    cfg.reynolds = 1.0 / tg.nu;
    cfg.dt = dt;
    cfg.perturbation_amplitude = 0.0;
    const ns::VelocityFunction exact = [&](double x, double y, double t) { return tg.velocity(x, y, t); };
    ns::FractionalStepSolver solver(g, cfg, {exact, exact});

    const int nt = nc - 1;
    ns::FlowState s{Field2D(nr, nt), Field2D(nr, nt), Field2D(nr, nt), 0.0};
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nt; ++j) {
            const auto w = tg.velocity(g.x()(i, j), g.y()(i, j), 0.0);
            s.u(i, j) = w[0];
            s.v(i, j) = w[1];
            s.p(i, j) = tg.pressure(g.x()(i, j), g.y()(i, j), 0.0);
        }
    solver.set_state(s);
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int k = 0; k < steps; ++k) solver.step();

    const auto& st = solver.state();
    // The solver gauges pressure to zero mean on the outer ring.
    double pref = 0.0;
    for (int j = 0; j < nt; ++j) pref += tg.pressure(g.x()(nr - 1, j), g.y()(nr - 1, j), st.t);
    pref /= nt;
    double eu = 0.0, ep = 0.0, area = 0.0;
    for (int i = 1; i < nr - 1; ++i)
        for (int j = 0; j < nt; ++j) {
            const double x = g.x()(i, j), y = g.y()(i, j), a = g.jacobian()(i, j);
            const auto w = tg.velocity(x, y, st.t);
            eu += a * (std::pow(st.u(i, j) - w[0], 2) + std::pow(st.v(i, j) - w[1], 2));
            ep += a * std::pow(st.p(i, j) - (tg.pressure(x, y, st.t) - pref), 2);
            area += a;
        }
    return {std::sqrt(eu / area), std::sqrt(ep / area), st.u, st.v, solver.flux_xi(), solver.flux_eta()};
}

inline double max_diff(const Field2D& a, const Field2D& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
    return m;
}

}  // namespace pmdflow::testing
