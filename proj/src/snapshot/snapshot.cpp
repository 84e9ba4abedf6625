#include "snapshot/snapshot.hpp"

#include <cmath>

#include "common/binary_io.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmdflow::snapshot {

void SnapshotPlan::validate() const {
    if (snaps_per_cycle < 2)
        fail(ErrorCode::Validation, "snaps_per_cycle must be >= 2 (got " + std::to_string(snaps_per_cycle) + ")");
    if (n_cycles < 1) fail(ErrorCode::Validation, "n_cycles must be >= 1 (got " + std::to_string(n_cycles) + ")");
    if (!(std::isfinite(shedding_period) && shedding_period > 0.0))
        fail(ErrorCode::Validation, "shedding_period must be > 0");
}

SnapshotMatrix empty_ensemble(const grid::OGrid& grid, int n_snaps) {
    SnapshotMatrix w;
    w.data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.n_points()), n_snaps);
    w.weights = grid.area_weights();
    w.times.assign(static_cast<std::size_t>(n_snaps), 0.0);
    w.surface_index.resize(static_cast<std::size_t>(grid.n_theta()));
    for (int j = 0; j < grid.n_theta(); ++j) w.surface_index[j] = j;
    return w;
}

Recorder::Recorder(const grid::OGrid& grid, const SnapshotPlan& plan, double t_start, double dt)
    : plan_(plan), t_start_(t_start), dt_(dt) {
    plan_.validate();
    if (!(dt > 0.0)) fail(ErrorCode::Validation, "recorder time step must be > 0");
    if (plan_.interval() < dt)
        fail(ErrorCode::Validation, "snapshot interval is shorter than the time step");
    w_ = empty_ensemble(grid, plan_.n_snaps());
}

double Recorder::next_target() const noexcept { return t_start_ + next_ * plan_.interval(); }

bool Recorder::offer(double t, const Field2D& pressure) {
    if (done() || t < next_target() - 0.5 * dt_) return false;
    if (static_cast<Eigen::Index>(pressure.size()) != w_.data.rows())
        fail(ErrorCode::Validation, "pressure field does not match the ensemble grid");
    w_.data.col(next_) = Eigen::Map<const Eigen::VectorXd>(pressure.values().data(), w_.data.rows());
    w_.times[static_cast<std::size_t>(next_)] = t;
    ++next_;
    return true;
}

SnapshotMatrix Recorder::finish() {
    if (!done())
        fail(ErrorCode::StreamEnded, "simulation ended after " + std::to_string(next_) + " of " +
                                         std::to_string(plan_.n_snaps()) + " snapshots");
    return std::move(w_);
}

SnapshotMatrix record(const PressureStream& stream, const grid::OGrid& grid, const SnapshotPlan& plan,
                      double t_start, double dt) {
    Recorder rec(grid, plan, t_start, dt);
    double t = 0.0;
    const Field2D* p = nullptr;
    while (!rec.done() && stream(t, p)) rec.offer(t, *p);
    return rec.finish();
}

MeanSplit split_mean(const Eigen::MatrixXd& data) {
    if (data.cols() < 1) fail(ErrorCode::Validation, "split_mean needs at least one snapshot");
    MeanSplit out;
    out.mean = data.rowwise().mean();
    out.fluctuation = data.colwise() - out.mean;
    return out;
}

void save(const SnapshotMatrix& w, const std::filesystem::path& path) {
    io::BinaryWriter out(path);
    out.magic("PMD1");
    out.i32(w.n_points());
    out.i32(w.n_snaps());
    out.i32(static_cast<std::int32_t>(w.surface_index.size()));
    out.f64s(w.times);
    out.f64s(w.weights);
    out.i32s(w.surface_index);
    out.f64s(std::span<const double>(w.data.data(), static_cast<std::size_t>(w.data.size())));
    out.close();
}

SnapshotMatrix load(const std::filesystem::path& path) {
    io::BinaryReader in(path);
    in.expect_magic("PMD1");
    const int np = in.i32(), ns = in.i32(), nsurf = in.i32();
    if (np < 0 || ns < 0 || nsurf < 0 || nsurf > np) fail(ErrorCode::Io, "corrupt ensemble header in " + path.string());
    SnapshotMatrix w;
    w.times = in.f64s(static_cast<std::size_t>(ns));
    w.weights = in.f64s(static_cast<std::size_t>(np));
    w.surface_index = in.i32s(static_cast<std::size_t>(nsurf));
    w.data.resize(np, ns);
    in.f64s(std::span<double>(w.data.data(), static_cast<std::size_t>(w.data.size())));
    return w;
}

void write_snapshot_csv(const SnapshotMatrix& w, int column, const grid::OGrid& grid,
                        const std::filesystem::path& path, const std::string& provenance) {
    if (column < 0 || column >= w.n_snaps())
        fail(ErrorCode::Validation, "snapshot column " + std::to_string(column) + " out of range");
    if (static_cast<std::size_t>(w.n_points()) != grid.n_points())
        fail(ErrorCode::Validation, "ensemble does not match the grid");
    csv::Writer out(path, provenance);
    out.header({"i", "j", "x", "y", "theta", "p"});
    const int nt = grid.n_theta();
    for (int i = 0; i < grid.n_radial(); ++i)
        for (int j = 0; j < nt; ++j)
            out.row({double(i), double(j), grid.x()(i, j), grid.y()(i, j), grid.theta()[j],
                     w.data(static_cast<Eigen::Index>(i) * nt + j, column)});
    out.close();
}

}  // namespace pmdflow::snapshot
