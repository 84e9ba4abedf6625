#include "ns/forces.hpp"

#include <cmath>

namespace pmdflow::ns {

std::vector<double> surface_vorticity(const FlowState& state, const grid::OGrid& grid) {
    const int nt = grid.n_theta();
    const auto& m = grid.metrics();
    std::vector<double> omega(static_cast<std::size_t>(nt));
    for (int j = 0; j < nt; ++j) {
        const int jn = wrap_next(j, nt), jp = wrap_prev(j, nt);
        const double u_xi = 0.5 * (-3.0 * state.u(0, j) + 4.0 * state.u(1, j) - state.u(2, j));
        const double v_xi = 0.5 * (-3.0 * state.v(0, j) + 4.0 * state.v(1, j) - state.v(2, j));
        const double u_eta = 0.5 * (state.u(0, jn) - state.u(0, jp));
        const double v_eta = 0.5 * (state.v(0, jn) - state.v(0, jp));
        const double dvdx = m.xi_x(0, j) * v_xi + m.eta_x(0, j) * v_eta;
        const double dudy = m.xi_y(0, j) * u_xi + m.eta_y(0, j) * u_eta;
        omega[j] = dvdx - dudy;
    }
    return omega;
}

ForceRecord integrate_surface_forces(std::span<const double> p_surface, std::span<const double> omega_surface,
                                     std::span<const grid::ArcElement> arcs, double reynolds) {
    ForceRecord f;
    for (std::size_t j = 0; j < arcs.size(); ++j) {
        const double s = std::sin(arcs[j].theta), c = std::cos(arcs[j].theta), w = arcs[j].dtheta;
        f.cl_pressure -= p_surface[j] * s * w;
        f.cd_pressure -= p_surface[j] * c * w;
        if (!omega_surface.empty()) {
            f.cl_viscous += omega_surface[j] * c * w / reynolds;
            f.cd_viscous -= omega_surface[j] * s * w / reynolds;
        }
    }
    f.cl_total = f.cl_pressure + f.cl_viscous;
    f.cd_total = f.cd_pressure + f.cd_viscous;
    return f;
}

ForceRecord compute_forces(const FlowState& state, const grid::OGrid& grid, const Motion& motion,
                           const CaseConfig& cfg) {
    const auto arcs = grid::surface_arc_elements(grid);
    const auto omega = surface_vorticity(state, grid);
    std::span<const double> p_wall(state.p.ring(0), static_cast<std::size_t>(grid.n_theta()));
    ForceRecord f = integrate_surface_forces(p_wall, omega, arcs, cfg.reynolds);
    f.t = state.t;
    f.y_cyl = motion.y;
    f.ydot = motion.ydot;
    f.yddot = motion.yddot;
    return f;
}

}  // namespace pmdflow::ns
