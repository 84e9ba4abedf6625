#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "common/field.hpp"
#include "grid/ogrid.hpp"

namespace pmdflow::snapshot {

/// Recording cadence: snaps_per_cycle samples per shedding period for
/// n_cycles periods.
struct SnapshotPlan {
    int snaps_per_cycle = 40;
    int n_cycles = 4;
    double shedding_period = 0.0;

    void validate() const;
    int n_snaps() const noexcept { return snaps_per_cycle * n_cycles; }
    double interval() const noexcept { return shedding_period / snaps_per_cycle; }
};

/// Ensemble of pressure snapshots. Rows are grid points in the grid's
/// row order (i * n_theta + j), columns are time samples.
struct SnapshotMatrix {
    Eigen::MatrixXd data;
    std::vector<double> weights;
    std::vector<double> times;
    std::vector<std::int32_t> surface_index;

    int n_points() const noexcept { return static_cast<int>(data.rows()); }
    int n_snaps() const noexcept { return static_cast<int>(data.cols()); }
};

/// Area weights and surface rows of `grid` in snapshot row order. The
/// surface rows are the wall ring, ordered by theta.
SnapshotMatrix empty_ensemble(const grid::OGrid& grid, int n_snaps);

/// Picks snapshot times from a stream of solver steps. Target k sits at
/// t_start + k * interval; each is taken at the first step whose time is not
/// earlier than target - dt/2, i.e. the step nearest to it.
class Recorder {
public:
    Recorder(const grid::OGrid& grid, const SnapshotPlan& plan, double t_start, double dt);

    /// Offers the pressure at time t; returns true if it was recorded.
    bool offer(double t, const Field2D& pressure);
    bool done() const noexcept { return next_ == plan_.n_snaps(); }
    int recorded() const noexcept { return next_; }
    double next_target() const noexcept;

    /// Throws StreamEnded unless every planned column was recorded.
    SnapshotMatrix finish();

private:
    SnapshotPlan plan_;
    double t_start_, dt_;
    int next_ = 0;
    SnapshotMatrix w_;
};

/// Source of solver states: returns the next (t, pressure) or false when the
/// simulation has ended.
using PressureStream = std::function<bool(double& t, const Field2D*& pressure)>;

/// Drains `stream` until `plan` is satisfied. Throws StreamEnded when the
/// stream runs out first.
SnapshotMatrix record(const PressureStream& stream, const grid::OGrid& grid, const SnapshotPlan& plan,
                      double t_start, double dt);

struct MeanSplit {
    Eigen::VectorXd mean;
    Eigen::MatrixXd fluctuation;
};

/// Arithmetic column mean and the fluctuation matrix.
MeanSplit split_mean(const Eigen::MatrixXd& data);

/// Ensemble container (magic PMD1).
void save(const SnapshotMatrix& w, const std::filesystem::path& path);
SnapshotMatrix load(const std::filesystem::path& path);

/// One column as i, j, x, y, theta, p.
void write_snapshot_csv(const SnapshotMatrix& w, int column, const grid::OGrid& grid,
                        const std::filesystem::path& path, const std::string& provenance);

}  // namespace pmdflow::snapshot
