#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grid/ogrid.hpp"
#include "pod/pod.hpp"
#include "snapshot/snapshot.hpp"

namespace pmdflow::pmd {

/// Restriction of the mean field and the POD modes to the cylinder surface,
/// with the pointwise lift (-f sin) and drag (-f cos) integrands.
struct SurfaceModeSet {
    std::vector<double> theta;
    Eigen::VectorXd mean_surface;
    Eigen::MatrixXd modes_surface;  // n_surface x M
    Eigen::VectorXd mean_sine, mean_cosine;
    Eigen::MatrixXd sine_parts, cosine_parts;

    int n_surface() const noexcept { return static_cast<int>(theta.size()); }
    int n_modes() const noexcept { return static_cast<int>(modes_surface.cols()); }
};

SurfaceModeSet extract_surface(const pod::PodBasis& basis, std::span<const std::int32_t> surface_index,
                               std::span<const double> theta);

struct DecompCoefficients {
    double L_o = 0.0, D_o = 0.0;
    std::vector<double> L, D;
};

/// L_o = -sum p_mean sin dtheta, L_i = -sum psi_i sin dtheta (and cos for
/// drag) with the surface quadrature `arcs`.
DecompCoefficients decomposition_coefficients(const SurfaceModeSet& s, std::span<const grid::ArcElement> arcs);

/// Pressure lift and drag of a surface distribution.
struct SurfaceForce {
    double lift = 0.0, drag = 0.0;
};
SurfaceForce surface_pressure_force(std::span<const double> p_surface, std::span<const grid::ArcElement> arcs);

struct ModalForceHistory {
    std::vector<double> t;
    /// cl_modal(k, m) = C_L^m(t_k) for m = 0 .. M.
    Eigen::MatrixXd cl_modal, cd_modal;
    std::vector<double> cl_reference, cd_reference;
};

/// Modal reconstruction at every truncation level plus the reference from
/// direct quadrature of each stored snapshot's surface pressure.
ModalForceHistory modal_forces(const DecompCoefficients& c, const pod::PodBasis& basis,
                               const snapshot::SnapshotMatrix& w, std::span<const grid::ArcElement> arcs);

/// var(reconstruction) / var(reference).
double variance_capture(std::span<const double> reconstruction, std::span<const double> reference);

struct Spectrum {
    std::vector<double> freq;
    std::vector<double> magnitude;
    double bin_width = 0.0;
};

/// Hann-windowed DFT magnitude of an evenly sampled signal (mean removed),
/// on the natural bins k / (n * dt), k = 0 .. n/2.
Spectrum magnitude_spectrum(std::span<const double> signal, double dt);

struct Peak {
    int bin = 0;
    double freq = 0.0;
    double magnitude = 0.0;
};

/// Local maxima at or above `threshold` times the global maximum, ordered by
/// decreasing magnitude. Bin 0 is ignored.
std::vector<Peak> spectral_peaks(const Spectrum& s, double threshold = 0.25);

/// Two peaks above 25 % of the maximum that are more than one bin apart.
bool beat_flag(const std::vector<Peak>& peaks);

/// (max - min) / max of the per-cycle peaks of the signal about its mean.
/// Cycles run between upward mean crossings.
double modulation_depth(std::span<const double> signal);

/// Smallest m with cumulative energy fraction >= 0.99.
int n99(const Eigen::VectorXd& lambdas);

/// Mode numbers (1-based) ordered by decreasing |value|.
std::vector<int> magnitude_ranks(std::span<const double> values);

/// Per-case numbers that feed the cross-case summary.
struct CaseMetrics {
    std::string case_id;
    double freq_ratio = 0.0;
    double excitation_frequency = 0.0;
    double dominant_frequency = 0.0;
    int n_peaks = 0;
    bool beat = false;
    double modulation_depth = 0.0;
    int n99 = 0;
    std::vector<int> lift_ranks, drag_ranks;
    double L_o = 0.0, D_o = 0.0;
};

struct RegimeRow {
    CaseMetrics metrics;
    std::string regime;
};

/// Labels the cases (stationary, pre-synchronous, synchronous,
/// post-synchronous). Throws MissingCase unless all four are present.
std::vector<RegimeRow> regime_report(const std::vector<CaseMetrics>& cases, double sync_band = 0.05);

void write_regime_summary(const std::vector<RegimeRow>& rows, const std::filesystem::path& path,
                          const std::string& provenance);

// CSV exports.
void write_ldc_ddc(const DecompCoefficients& c, const std::filesystem::path& path, const std::string& provenance);
void write_surface_modes(const SurfaceModeSet& s, const std::filesystem::path& path, const std::string& provenance);
void write_modal_forces(const ModalForceHistory& h, const std::filesystem::path& path,
                        const std::string& provenance);

}  // namespace pmdflow::pmd
