#pragma once

#include <span>
#include <vector>

#include "common/field.hpp"
#include "grid/ogrid.hpp"
#include "ns/case_config.hpp"

namespace pmdflow::ns {

/// Velocity (relative to the cylinder frame) and pressure at one time level.
struct FlowState {
    Field2D u, v, p;
    double t = 0.0;
};

/// Force coefficients (force / (0.5 rho U^2 D)) and the prescribed motion at t.
struct ForceRecord {
    double t = 0.0;
    double cl_pressure = 0.0, cl_viscous = 0.0, cl_total = 0.0;
    double cd_pressure = 0.0, cd_viscous = 0.0, cd_total = 0.0;
    double y_cyl = 0.0, ydot = 0.0, yddot = 0.0;
};

/// Spanwise vorticity on the wall ring, ordered by theta.
std::vector<double> surface_vorticity(const FlowState& state, const grid::OGrid& grid);

/// Quadrature of the wall traction for a cylinder of diameter 1:
///   C_L = -sum p sin(theta) dtheta + (1/Re) sum omega cos(theta) dtheta
///   C_D = -sum p cos(theta) dtheta - (1/Re) sum omega sin(theta) dtheta
/// with theta = 0 at the downstream base point.
ForceRecord integrate_surface_forces(std::span<const double> p_surface, std::span<const double> omega_surface,
                                     std::span<const grid::ArcElement> arcs, double reynolds);

/// Forces on the cylinder for `state`. The solver carries the frame
/// acceleration as a body force, so `state.p` is the physical pressure and
/// the surface integral is the lab-frame force without further correction.
ForceRecord compute_forces(const FlowState& state, const grid::OGrid& grid, const Motion& motion,
                           const CaseConfig& cfg);

}  // namespace pmdflow::ns
