#pragma once

#include <memory>
#include <vector>

#include "common/field.hpp"

namespace pmdflow::ns {

/// Direct solver for  (diag_i - alpha * L) q = rhs  on the interior rings
/// i = 1 .. n_radial-2 of an orthogonal O-grid, where
///
///   (L q)_ij = a_{i+1/2} (q_{i+1,j} - q_{ij}) - a_{i-1/2} (q_{ij} - q_{i-1,j})
///            + b_i (q_{i,j+1} - 2 q_ij + q_{i,j-1})
///
/// is the flux-form Laplacian with ring-constant coefficients. The
/// circumferential direction is diagonalised with a real FFT and each
/// wavenumber is a tridiagonal system in the radial index.
///
/// Radial boundaries:
///  - Dirichlet: q on rings 0 and n_radial-1 is taken from the input field.
///  - Neumann: the fluxes through the faces 1/2 and n_radial-3/2 are held
///    fixed (they are not part of L). With diag == 0 this operator is
///    singular; its constant null space is removed by returning the
///    zero-mean solution.
class SeparableSolver {
public:
    enum class Radial { Dirichlet, Neumann };

    /// `face_coef` has n_radial-1 entries (a_{i+1/2}), `ring_coef` and `diag`
    /// have n_radial entries.
    SeparableSolver(int n_radial, int n_theta, std::vector<double> face_coef,
                    std::vector<double> ring_coef, std::vector<double> diag, double alpha, Radial radial);
    ~SeparableSolver();
    SeparableSolver(SeparableSolver&&) noexcept;
    SeparableSolver& operator=(SeparableSolver&&) noexcept;
    SeparableSolver(const SeparableSolver&) = delete;
    SeparableSolver& operator=(const SeparableSolver&) = delete;

    /// Overwrites the interior rings of `q`. In Dirichlet mode the boundary
    /// rings of `q` must already hold the boundary values.
    void solve(Field2D& q, const Field2D& rhs);

    /// (diag - alpha L) q on the interior rings; boundary rings of the result
    /// are zero.
    Field2D apply(const Field2D& q) const;

    /// L q alone (no diag/alpha), same boundary treatment as the solver.
    Field2D laplacian(const Field2D& q) const;

    bool singular() const noexcept { return singular_; }
    int n_radial() const noexcept { return nr_; }
    int n_theta() const noexcept { return nt_; }

private:
    struct Fft;

    int nr_, nt_, nk_;
    std::vector<double> a_, b_, diag_;
    double alpha_;
    Radial radial_;
    bool singular_;
    // Thomas factorisation per wavenumber: inverse pivots and modified
    // super-diagonal, stored [k][interior ring].
    std::vector<double> inv_pivot_, upper_mod_;
    std::unique_ptr<Fft> fft_;
};

}  // namespace pmdflow::ns
