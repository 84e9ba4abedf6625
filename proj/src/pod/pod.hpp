#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "snapshot/snapshot.hpp"

namespace pmdflow::pod {

struct PodOptions {
    int n_modes = 10;
    /// Area-weighted inner product; false gives the plain Euclidean one.
    bool weighted = true;
    /// Modes with lambda <= cutoff_ratio * lambda_1 are treated as noise.
    double cutoff_ratio = 1e-12;
};

/// Snapshot POD of a pressure ensemble.
struct PodBasis {
    std::vector<double> times;
    Eigen::VectorXd mean;
    /// All eigenvalues of the correlation matrix, descending.
    Eigen::VectorXd lambdas;
    /// Eigenvectors of the correlation matrix (columns), same order.
    Eigen::MatrixXd Q;
    /// Retained spatial modes (columns), unit norm in the chosen inner product.
    Eigen::MatrixXd modes;
    /// temporal(k, i) = a_i(t_k).
    Eigen::MatrixXd temporal;
    /// Inner-product weights the basis was computed with.
    std::vector<double> weights;
    bool weighted = true;

    int n_modes() const noexcept { return static_cast<int>(modes.cols()); }
    int n_snaps() const noexcept { return static_cast<int>(times.size()); }
};

/// G = (1/N) P'^T diag(w) P', symmetrised.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& fluct, std::span<const double> weights);

struct EigenPairs {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Cyclic Jacobi eigensolver for a symmetric matrix. Throws EigenConvergence
/// if the off-diagonal mass does not vanish within `max_sweeps` sweeps.
EigenPairs eigendecompose(const Eigen::MatrixXd& g, int max_sweeps = 60);

/// Number of eigenvalues above cutoff_ratio * lambda_1.
int modes_above_cutoff(const Eigen::VectorXd& lambdas, double cutoff_ratio);

/// psi_i = P' Q_i / sqrt(N lambda_i) for i < n_modes, re-orthonormalised in
/// the weighted inner product. Throws DegenerateMode if any requested mode
/// lies at or below the cutoff.
Eigen::MatrixXd compute_modes(const Eigen::MatrixXd& fluct, std::span<const double> weights,
                              const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& q, int n_modes,
                              double cutoff_ratio = 1e-12);

/// a_i(t_k) = <P'_k, psi_i>_w, returned as an N x M matrix.
Eigen::MatrixXd temporal_coefficients(const Eigen::MatrixXd& fluct, std::span<const double> weights,
                                      const Eigen::MatrixXd& modes);

/// Flips each mode (with its eigenvector and coefficients) so that its value
/// of largest magnitude over `rows` is positive. All rows when `rows` is
/// empty.
void apply_sign_convention(PodBasis& basis, std::span<const std::int32_t> rows);

/// Full pipeline on an ensemble: mean split, correlation, eigenpairs, modes,
/// coefficients and the sign convention over the ensemble's surface rows.
PodBasis compute_pod(const snapshot::SnapshotMatrix& w, const PodOptions& opt);

/// Basis of the whole fluctuation column space: the eigenvector images
/// P' Q_i of every eigenpair, orthonormalised in order with deflation of
/// round-off remainders. Unlike compute_pod it keeps directions far below the
/// eigenvalue cutoff, so the reconstruction of every snapshot is exact to
/// round-off. Modes past the cutoff are not individually meaningful.
PodBasis compute_pod_full_rank(const snapshot::SnapshotMatrix& w, bool weighted);

/// mean + sum_{i < m} a_i psi_i for snapshot k.
Eigen::VectorXd reconstruct(const PodBasis& basis, int k, int m);

/// Basis container (magic POD1).
void save(const PodBasis& basis, const std::filesystem::path& path);
PodBasis load(const std::filesystem::path& path);

/// mode, lambda, lambda_normalized (lambda / sum lambda) for every eigenvalue.
void write_spectrum_csv(const PodBasis& basis, const std::filesystem::path& path, const std::string& provenance);
/// t, a_1 .. a_M.
void write_temporal_csv(const PodBasis& basis, const std::filesystem::path& path, const std::string& provenance);

}  // namespace pmdflow::pod
