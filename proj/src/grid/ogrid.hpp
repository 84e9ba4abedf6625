#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "common/field.hpp"

namespace pmdflow::grid {

/// Parameters of the body-fitted O-grid. Lengths are in cylinder diameters.
///
/// `n_circ` counts circumferential nodes *including* the periodic closing
/// node, so 257 gives 256 distinct angles and dtheta = 2*pi/256.
/// `stretch_ratio` is the ratio of the outermost to the innermost radial
/// spacing; 1 means uniform spacing.
struct GridSpec {
    int n_radial = 193;
    int n_circ = 257;
    double domain_diameter = 40.0;
    double cylinder_diameter = 1.0;
    double stretch_ratio = 1.0;

    void validate() const;

    /// Stretch ratio whose tanh clustering places the first radial node
    /// `first_spacing` off the wall. Returns 1 when uniform spacing is already
    /// at least that fine.
    static double stretch_for_wall_spacing(int n_radial, double domain_diameter,
                                           double cylinder_diameter, double first_spacing);
};

/// Node radii of the one-sided tanh distribution used by build_grid.
std::vector<double> radial_distribution(const GridSpec& spec);

/// Covariant derivatives and inverse metrics at every node.
struct NodeMetrics {
    Field2D x_xi, x_eta, y_xi, y_eta;
    Field2D xi_x, xi_y, eta_x, eta_y;
};

/// Geometry of the control-volume faces used by the flux-form solver.
///
/// xi-faces sit between rings i and i+1 (index i = 0..n_radial-2), eta-faces
/// between circumferential nodes j and j+1 on ring i. The face vectors are
/// scaled so that the contravariant volume flux through a face is
/// S . (u, v). g11/g22 are the diagonal entries of the mesh tensor on the
/// respective faces and g12 the off-diagonal entry (zero on an orthogonal
/// grid).
struct FaceMetrics {
    Field2D xi_sx, xi_sy, xi_g11, xi_g12;      // (n_radial-1) x n_theta
    Field2D eta_sx, eta_sy, eta_g22, eta_g12;  // n_radial x n_theta
};

class OGrid {
public:
    const GridSpec& spec() const noexcept { return spec_; }
    int n_radial() const noexcept { return spec_.n_radial; }
    int n_circ() const noexcept { return spec_.n_circ; }
    /// Number of distinct circumferential nodes (n_circ - 1).
    int n_theta() const noexcept { return spec_.n_circ - 1; }
    std::size_t n_points() const noexcept {
        return static_cast<std::size_t>(n_radial()) * static_cast<std::size_t>(n_theta());
    }

    const Field2D& x() const noexcept { return x_; }
    const Field2D& y() const noexcept { return y_; }
    /// x/y with the periodic wrap applied to j, so j == n_theta() is node 0.
    double x_at(int i, int j) const noexcept { return x_(i, j % n_theta()); }
    double y_at(int i, int j) const noexcept { return y_(i, j % n_theta()); }

    const Field2D& jacobian() const noexcept { return jac_; }
    const NodeMetrics& metrics() const noexcept { return node_; }
    const FaceMetrics& faces() const noexcept { return face_; }

    std::span<const double> radii() const noexcept { return radii_; }
    /// Angle of circumferential node j; 0 at the downstream base point,
    /// pi at the upstream stagnation ray, counterclockwise positive.
    std::span<const double> theta() const noexcept { return theta_; }
    double dtheta() const noexcept { return dtheta_; }

    /// Area weight of node (i, j): jacobian with half weight on the two
    /// boundary rings (trapezoidal rule in the radial index).
    double area_weight(int i, int j) const noexcept;
    /// Flattened area weights in row order i * n_theta + j.
    std::vector<double> area_weights() const;

    double first_spacing() const noexcept { return radii_[1] - radii_[0]; }
    double last_spacing() const noexcept { return radii_.back() - radii_[radii_.size() - 2]; }

private:
    friend OGrid build_grid(const GridSpec& spec);

    GridSpec spec_;
    std::vector<double> radii_;
    std::vector<double> theta_;
    double dtheta_ = 0.0;
    Field2D x_, y_, jac_;
    NodeMetrics node_;
    FaceMetrics face_;
};

/// Builds the O-grid; throws Error(Validation) when `spec` is inconsistent.
OGrid build_grid(const GridSpec& spec);

struct ArcElement {
    double theta;
    double dtheta;
};

/// Periodic trapezoidal quadrature over the cylinder surface, ordered by theta.
std::vector<ArcElement> surface_arc_elements(const OGrid& grid);

/// Largest |divergence of the face-vector field| over interior control
/// volumes. Zero (to round-off) means uniform flow is preserved exactly.
double metric_identity_residual(const OGrid& grid);

/// Largest relative circumferential variation of the ring-wise operator
/// coefficients; the separable solvers assume it is at round-off level.
double separability_defect(const OGrid& grid);

/// Binary grid file: int32 n_radial, int32 n_circ, then x and y planes of
/// float64, each n_radial x n_circ radial-major (closing node included).
void write_grid_binary(const OGrid& grid, const std::filesystem::path& path);

struct GridCoordinates {
    int n_radial = 0;
    int n_circ = 0;
    std::vector<double> x, y;
};
GridCoordinates read_grid_binary(const std::filesystem::path& path);

/// Debug dump: i, j, x, y, theta, jacobian, area_weight.
void write_grid_csv(const OGrid& grid, const std::filesystem::path& path);

}  // namespace pmdflow::grid
