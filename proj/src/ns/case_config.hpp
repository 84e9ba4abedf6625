#pragma once

#include <cstdint>

namespace pmdflow::ns {

/// Physical and numerical parameters of one simulation. Everything is
/// nondimensional: lengths in D, velocities in U, time in D/U, pressure in rho U^2.
struct CaseConfig {
    double reynolds = 200.0;
    /// A_e / D of the prescribed cross-flow oscillation.
    double amplitude_ratio = 0.0;
    /// f_e / f_s; 0 selects the stationary cylinder.
    double freq_ratio = 0.0;
    /// Shedding frequency (St U / D) used to turn freq_ratio into f_e.
    double f_shed_ref = 0.19;
    double dt = 0.005;
    /// Hard cap on time steps; 0 lets the pipeline derive it from the plan.
    std::int64_t n_steps = 0;
    /// Shedding cycles (periods of 1/f_shed_ref) discarded before recording.
    double transient_cycles = 30.0;

    /// Transverse inflow velocity added for t < perturbation_duration to
    /// trigger shedding deterministically.
    double perturbation_amplitude = 0.05;
    double perturbation_duration = 2.0;

    double poisson_tol = 1e-8;
    double divergence_tol = 1e-8;

    void validate() const;
    double excitation_frequency() const noexcept { return freq_ratio * f_shed_ref; }
    bool stationary() const noexcept { return freq_ratio == 0.0 || amplitude_ratio == 0.0; }
};

struct Motion {
    double y = 0.0;
    double ydot = 0.0;
    double yddot = 0.0;
};

/// Prescribed transverse displacement y = (A/D) sin(2 pi f_e t) and its
/// analytic derivatives; identically zero for the stationary case.
Motion cylinder_motion(double t, const CaseConfig& cfg) noexcept;

}  // namespace pmdflow::ns
