#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>

#include "common/binary_io.hpp"
#include "common/field.hpp"
#include "grid/ogrid.hpp"
#include "ns/case_config.hpp"
#include "ns/forces.hpp"
#include "ns/separable_solver.hpp"

namespace pmdflow::ns {

/// Velocity prescribed as a function of (x, y, t).
using VelocityFunction = std::function<std::array<double, 2>(double x, double y, double t)>;

/// Radial boundary conditions. Empty functions select the physical setup:
/// a no-slip wall on the inner ring, and on the outer ring Dirichlet
/// freestream where the flow enters and a convective condition where it leaves.
struct BoundaryConditions {
    VelocityFunction inner;
    VelocityFunction outer;
};

struct PoissonResult {
    Field2D solution;
    /// max |L phi - rhs| / J over interior nodes (pointwise Laplacian residual).
    double residual = 0.0;
    int refinements = 0;
};

/// Pressure-Poisson operator of the projection step: flux-form Laplacian on
/// interior nodes, homogeneous Neumann through the two boundary-adjacent
/// face rows, null space fixed by a zero arithmetic mean over interior nodes.
class PressurePoisson {
public:
    explicit PressurePoisson(const grid::OGrid& grid);

    /// Solves L phi = rhs. `rhs` is volume-integrated (same units as L phi).
    /// Throws PoissonNotConverged if the residual cannot be brought below
    /// `tol`, Validation if the sum of `rhs` exceeds 1e-8 relative to
    /// max(sum |rhs|, `scale`). Callers whose rhs is a difference of larger
    /// terms pass their magnitude as `scale`.
    PoissonResult solve(const Field2D& rhs, double tol, int max_refinements = 4, double scale = 0.0);

    Field2D apply(const Field2D& phi) const { return solver_.laplacian(phi); }
    double residual(const Field2D& phi, const Field2D& rhs) const;

    std::span<const double> face_coef() const noexcept { return a_; }
    std::span<const double> ring_coef() const noexcept { return b_; }
    std::span<const double> volumes() const noexcept { return vol_; }

private:
    std::vector<double> a_, b_, vol_;
    SeparableSolver solver_;
};

/// Convenience form of PressurePoisson::solve for one-off solves.
PoissonResult solve_pressure_poisson(const Field2D& rhs, const grid::OGrid& grid, double tol);

struct StepDiagnostics {
    double poisson_residual = 0.0;
    /// max |div u| over interior control volumes after the corrector.
    double divergence = 0.0;
    double cfl = 0.0;
    /// Flux added to the outflow faces to balance the boundary mass flux.
    double mass_correction = 0.0;
};

/// Fractional-step integrator for the incompressible Navier-Stokes equations
/// in the cylinder frame.
///
/// Cartesian velocity components and pressure are collocated at the grid
/// nodes; contravariant volume fluxes live on the control-volume faces.
/// Each step:
///  1. predictor: QUICK convection (Adams-Bashforth 2), Crank-Nicolson
///     diffusion, explicit pressure gradient of the previous level and the
///     frame acceleration as a transverse body force;
///  2. face fluxes from the predicted velocity with the face pressure
///     gradient (momentum interpolation);
///  3. pressure-Poisson solve for the increment and flux/velocity/pressure
///     correction, which leaves the face fluxes discretely divergence-free.
///
/// Requires an orthogonal O-grid with ring-constant metric coefficients,
/// which build_grid produces.
class FractionalStepSolver {
public:
    FractionalStepSolver(const grid::OGrid& grid, const CaseConfig& cfg, BoundaryConditions bc = {});
    ~FractionalStepSolver();

    /// Uniform stream u = 1 impulsively started around the cylinder, projected
    /// onto a divergence-free field.
    void initialize_impulsive_start();

    /// Uses `s` as the current level. The velocity is projected onto the
    /// discretely divergence-free space; the pressure is kept as given.
    void set_state(const FlowState& s);

    /// Replaces the pressure by one consistent with the current velocity and
    /// the time discretisation: `sweeps` trial steps are taken from the
    /// current level, each time keeping only the resulting pressure. Avoids
    /// the start-up transient of a pressure that does not match the discrete
    /// operators.
    void iterate_initial_pressure(int sweeps);

    /// Advances one time step. Throws PoissonNotConverged, CflViolation or
    /// NonFinite on failure.
    const FlowState& step();

    const FlowState& state() const noexcept { return state_; }
    const grid::OGrid& grid() const noexcept { return grid_; }
    const CaseConfig& config() const noexcept { return cfg_; }
    std::int64_t step_count() const noexcept { return steps_; }
    const StepDiagnostics& diagnostics() const noexcept { return diag_; }

    /// Volume fluxes through the xi-faces (index i is the face between rings
    /// i and i+1) and the eta-faces (between nodes j and j+1 on ring i).
    const Field2D& flux_xi() const noexcept { return flux_xi_; }
    const Field2D& flux_eta() const noexcept { return flux_eta_; }

    /// max |div u| of the current face fluxes over interior control volumes.
    double max_divergence() const;
    double cfl() const;
    ForceRecord forces() const;

    /// Raw checkpoint block: grid dims, t, u/v/p planes (closing node
    /// included), followed by the auxiliary state needed for a bitwise
    /// identical restart.
    void write_checkpoint(io::BinaryWriter& out) const;
    void read_checkpoint(io::BinaryReader& in);

private:
    void set_boundary_values(Field2D& u, Field2D& v, double t, const Motion& motion) const;
    void convection(const Field2D& q, Field2D& out) const;
    void node_gradient(const Field2D& f, int i, int j, double& fx, double& fy) const;
    void interpolate_fluxes(const Field2D& u, const Field2D& v);
    double balance_boundary_mass();
    void flux_divergence(Field2D& out) const;
    void project(Field2D& u, Field2D& v, double dt, Field2D* pressure);
    void extrapolate_boundary(Field2D& f) const;
    void extrapolate_pressure(Field2D& p) const;
    bool is_outflow(int j) const;
    double inflow_v(double t, const Motion& motion) const;

    grid::OGrid grid_;
    CaseConfig cfg_;
    BoundaryConditions bc_;
    int nr_, nt_;

    std::vector<double> a_, b_, vol_;
    std::unique_ptr<SeparableSolver> helmholtz_;
    std::unique_ptr<PressurePoisson> poisson_;

    FlowState state_;
    Field2D flux_xi_, flux_eta_;
    Field2D conv_u_prev_, conv_v_prev_;
    bool have_prev_ = false;
    std::int64_t steps_ = 0;
    StepDiagnostics diag_;

    // Scratch.
    Field2D us_, vs_, cu_, cv_, rhs_u_, rhs_v_, phi_, div_;
};

}  // namespace pmdflow::ns
