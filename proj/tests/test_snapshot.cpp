#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "grid/ogrid.hpp"
#include "snapshot/snapshot.hpp"

using namespace pmdflow;

namespace {

grid::OGrid small_grid() {
    grid::GridSpec s;
    s.n_radial = 9;
    s.n_circ = 17;
    s.domain_diameter = 10.0;
    return grid::build_grid(s);
}

// Stream of `n` steps of spacing dt whose pressure is `value(t)` everywhere.
snapshot::PressureStream stream_of(const grid::OGrid& g, double t0, double dt, int n,
                                   std::function<double(double)> value, Field2D& buf) {
    buf = Field2D(g.n_radial(), g.n_theta());
    auto k = std::make_shared<int>(0);
    return [=, &buf](double& t, const Field2D*& p) {
        if (*k >= n) return false;
        t = t0 + dt * *k;
        buf.fill(value(t));
        p = &buf;
        ++*k;
        return true;
    };
}

}  // namespace

TEST_CASE("plan sizes") {
    CHECK(snapshot::SnapshotPlan{40, 4, 5.0}.n_snaps() == 160);
    CHECK(snapshot::SnapshotPlan{40, 6, 5.0}.n_snaps() == 240);
    CHECK(snapshot::SnapshotPlan{40, 4, 5.0}.interval() == doctest::Approx(0.125));
    CHECK_THROWS_AS(snapshot::SnapshotPlan({1, 4, 5.0}).validate(), Error);
    CHECK_THROWS_AS(snapshot::SnapshotPlan({40, 0, 5.0}).validate(), Error);
    CHECK_THROWS_AS(snapshot::SnapshotPlan({40, 4, 0.0}).validate(), Error);
}

TEST_CASE("constant stream gives identical columns") {
    const auto g = small_grid();
    Field2D buf;
    auto s = stream_of(g, 10.0, 0.1, 100, [](double) { return 3.5; }, buf);
    const auto w = snapshot::record(s, g, {2, 1, 1.0}, 10.0, 0.1);
    REQUIRE(w.n_snaps() == 2);
    CHECK(w.data.col(0) == w.data.col(1));
    CHECK(w.data(0, 0) == 3.5);
    CHECK(w.times[0] == doctest::Approx(10.0));
    CHECK(w.times[1] == doctest::Approx(10.5));
}

TEST_CASE("recorded times are increasing with the planned spacing") {
    const auto g = small_grid();
    Field2D buf;
    auto s = stream_of(g, 0.0, 0.01, 10000, [](double t) { return std::sin(t); }, buf);
    const auto w = snapshot::record(s, g, {40, 4, 5.2}, 0.0, 0.01);
    REQUIRE(w.n_snaps() == 160);
    for (int k = 1; k < w.n_snaps(); ++k) {
        CHECK(w.times[k] > w.times[k - 1]);
        // Nearest step: within half a step of the target.
        CHECK(std::abs(w.times[k] - k * 5.2 / 40) <= 0.005 + 1e-12);
    }
    CHECK(w.data(5, 7) == doctest::Approx(std::sin(w.times[7])));
}

TEST_CASE("short stream raises StreamEnded") {
    const auto g = small_grid();
    Field2D buf;
    auto s = stream_of(g, 0.0, 0.1, 20, [](double) { return 0.0; }, buf);
    try {
        snapshot::record(s, g, {40, 4, 5.0}, 0.0, 0.1);
        FAIL("expected StreamEnded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StreamEnded);
    }
}

TEST_CASE("ensemble weights and surface rows") {
    grid::GridSpec spec;
    spec.n_radial = 49;
    spec.n_circ = 65;
    spec.stretch_ratio = grid::GridSpec::stretch_for_wall_spacing(49, 40.0, 1.0, 0.02);
    const auto g = grid::build_grid(spec);
    const auto w = snapshot::empty_ensemble(g, 3);
    for (double v : w.weights) REQUIRE(v > 0.0);
    const double total = std::accumulate(w.weights.begin(), w.weights.end(), 0.0);
    // Nodes sit on polygons, so the oracle is the polygonal annulus.
    const double area = 32.0 * std::sin(2.0 * std::numbers::pi / 64.0) * (400.0 - 0.25);
    CHECK(std::abs(total - area) / area < 1e-3);
    REQUIRE(w.surface_index.size() == 64);
    for (int j = 0; j < 64; ++j) {
        const int r = w.surface_index[j];
        // Row r is on the wall ring at angle theta_j.
        CHECK(r / 64 == 0);
        CHECK(g.theta()[r % 64] == doctest::Approx(j * g.dtheta()));
    }
}

TEST_CASE("mean split") {
    Eigen::MatrixXd same(4, 3);
    same.col(0) << 1, 2, 3, 4;
    same.col(1) = same.col(0);
    same.col(2) = same.col(0);
    auto s = snapshot::split_mean(same);
    CHECK(s.fluctuation.isZero(0.0));

    Eigen::MatrixXd pm(3, 2);
    pm.col(0) << 1.5, -2.0, 0.25;
    pm.col(1) = -pm.col(0);
    s = snapshot::split_mean(pm);
    CHECK(s.mean.isZero(0.0));
    CHECK(s.fluctuation == pm);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd r(50, 12);
    for (Eigen::Index k = 0; k < r.size(); ++k) r.data()[k] = 10.0 + nd(rng);
    s = snapshot::split_mean(r);
    CHECK(s.fluctuation.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    // Idempotence.
    const auto again = snapshot::split_mean(s.fluctuation);
    CHECK(again.mean.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((again.fluctuation - s.fluctuation).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(snapshot::split_mean(Eigen::MatrixXd(3, 0)), Error);
}

TEST_CASE("ensemble file round trip is bit exact") {
    const auto g = small_grid();
    auto w = snapshot::empty_ensemble(g, 5);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index k = 0; k < w.data.size(); ++k) w.data.data()[k] = u(rng);
    for (int k = 0; k < 5; ++k) w.times[k] = 0.1 * k + u(rng) * 1e-3;
    const auto path = std::filesystem::temp_directory_path() / "pmdflow_test_ensemble.pmd";
    snapshot::save(w, path);
    const auto back = snapshot::load(path);
    CHECK(back.data == w.data);
    CHECK(back.weights == w.weights);
    CHECK(back.times == w.times);
    CHECK(back.surface_index == w.surface_index);
    std::filesystem::remove(path);
}
