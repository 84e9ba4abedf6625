#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "common/error.hpp"
#include "pod/pod.hpp"

using namespace pmdflow;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = nd(rng);
    return m;
}

std::vector<double> random_weights(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::vector<double> w(static_cast<std::size_t>(n));
    for (double& v : w) v = u(rng);
    return w;
}

snapshot::SnapshotMatrix ensemble(const Eigen::MatrixXd& data, std::vector<double> weights) {
    snapshot::SnapshotMatrix w;
    w.data = data;
    w.weights = std::move(weights);
    w.times.resize(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index k = 0; k < data.cols(); ++k) w.times[static_cast<std::size_t>(k)] = 0.1 * k;
    return w;
}

double wdot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const std::vector<double>& w) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) s += a(i) * w[static_cast<std::size_t>(i)] * b(i);
    return s;
}

// Modes and eigenvalues from a direct SVD of diag(sqrt w) P' / sqrt(N).
struct SvdOracle {
    Eigen::VectorXd lambdas;
    Eigen::MatrixXd modes;
};

SvdOracle svd_oracle(const Eigen::MatrixXd& data, const std::vector<double>& w) {
    const Eigen::VectorXd mean = data.rowwise().mean();
    const Eigen::MatrixXd f = data.colwise() - mean;
    Eigen::VectorXd sw(f.rows());
    for (Eigen::Index i = 0; i < f.rows(); ++i) sw(i) = std::sqrt(w[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd a = sw.asDiagonal() * f / std::sqrt(static_cast<double>(f.cols()));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    SvdOracle o;
    o.lambdas = svd.singularValues().array().square();
    o.modes = sw.cwiseInverse().asDiagonal() * svd.matrixU();
    return o;
}

}  // namespace

TEST_CASE("correlation matrix") {
    const std::vector<double> w3{1.0, 2.0, 0.5};
    CHECK(pod::correlation_matrix(Eigen::MatrixXd::Zero(3, 4), w3).isZero(0.0));

    Eigen::MatrixXd c(3, 1);
    c << 1.0, -2.0, 3.0;
    const auto g1 = pod::correlation_matrix(c, w3);
    REQUIRE(g1.rows() == 1);
    CHECK(g1(0, 0) == doctest::Approx(1.0 + 8.0 + 4.5));

    const auto p = random_matrix(20, 5, 1);
    const auto w = random_weights(20, 2);
    const auto g = pod::correlation_matrix(p, w);
    Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(5, 5);
    for (int k = 0; k < 5; ++k)
        for (int l = 0; l < 5; ++l)
            for (int i = 0; i < 20; ++i) oracle(k, l) += w[i] * p(i, k) * p(i, l) / 5.0;
    CHECK((g - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g == g.transpose());
}

TEST_CASE("Jacobi eigendecomposition") {
    SUBCASE("identity") {
        const auto e = pod::eigendecompose(Eigen::MatrixXd::Identity(3, 3));
        CHECK(e.values.isApprox(Eigen::VectorXd::Ones(3)));
        CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);
    }
    SUBCASE("diagonal") {
        Eigen::MatrixXd d = Eigen::Vector3d(1.0, 4.0, 0.0).asDiagonal();
        const auto e = pod::eigendecompose(d);
        CHECK(e.values(0) == 4.0);
        CHECK(e.values(1) == 1.0);
        CHECK(e.values(2) == 0.0);
        CHECK(std::abs(e.vectors(1, 0)) == 1.0);
        CHECK(std::abs(e.vectors(0, 1)) == 1.0);
    }
    SUBCASE("random symmetric") {
        const auto r = random_matrix(10, 10, 3);
        const Eigen::MatrixXd g = r + r.transpose();
        const auto e = pod::eigendecompose(g);
        const Eigen::MatrixXd rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rec - g).cwiseAbs().maxCoeff() < 1e-10);
        for (int i = 0; i < 10; ++i) {
            CHECK((g * e.vectors.col(i) - e.values(i) * e.vectors.col(i)).norm() < 1e-10 * g.norm());
            if (i) CHECK(e.values(i) <= e.values(i - 1));
        }
        CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("sweep budget exhausted") {
        const auto r = random_matrix(6, 6, 4);
        try {
            pod::eigendecompose(r + r.transpose(), 0);
            FAIL("expected EigenConvergence");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EigenConvergence);
        }
    }
}

TEST_CASE("rank-one ensemble") {
    const int np = 30, ns = 8;
    Eigen::VectorXd c(np), s(ns);
    for (int i = 0; i < np; ++i) c(i) = std::sin(0.3 * i) + 0.2;
    for (int k = 0; k < ns; ++k) s(k) = std::cos(0.9 * k);
    s.array() -= s.mean();
    const auto w = random_weights(np, 5);
    const Eigen::MatrixXd data = c * s.transpose();
    const auto b = pod::compute_pod(ensemble(data, w), {1, true, 1e-12});
    const Eigen::VectorXd psi = b.modes.col(0);
    CHECK(wdot(psi, psi, w) == doctest::Approx(1.0).epsilon(1e-12));
    const double cosine = wdot(psi, c, w) / std::sqrt(wdot(c, c, w));
    CHECK(std::abs(cosine) == doctest::Approx(1.0).epsilon(1e-12));
    // a_1(t_k) = <c, psi> s_k up to the global sign.
    const double scale = wdot(c, psi, w);
    for (int k = 0; k < ns; ++k) CHECK(b.temporal(k, 0) == doctest::Approx(scale * s(k)).epsilon(1e-10));
    // Only one eigenvalue is above the cutoff.
    CHECK(pod::modes_above_cutoff(b.lambdas, 1e-12) == 1);
    CHECK_THROWS_AS(pod::compute_pod(ensemble(data, w), {2, true, 1e-12}), Error);
}

TEST_CASE("two known modes are recovered") {
    const int np = 64, ns = 80;
    const auto w = std::vector<double>(np, 1.0);
    Eigen::VectorXd f1(np), f2(np);
    for (int i = 0; i < np; ++i) {
        const double x = 2.0 * std::numbers::pi * i / np;
        f1(i) = std::sin(x);
        f2(i) = std::cos(2.0 * x);
    }
    REQUIRE(std::abs(f1.dot(f2)) < 1e-12);
    Eigen::MatrixXd data(np, ns);
    for (int k = 0; k < ns; ++k) {
        const double t = static_cast<double>(k) / ns * 4.0;
        data.col(k) = std::sin(2.0 * std::numbers::pi * t) * f1 + 0.3 * std::cos(4.0 * std::numbers::pi * t) * f2;
    }
    const auto b = pod::compute_pod(ensemble(data, w), {2, false, 1e-12});
    CHECK(std::abs(b.modes.col(0).dot(f1)) / f1.norm() > 0.999);
    CHECK(std::abs(b.modes.col(1).dot(f2)) / f2.norm() > 0.999);
    const double expected = (1.0 / 2.0) / (0.09 / 2.0);
    CHECK(b.lambdas(0) / b.lambdas(1) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("snapshot method agrees with a direct weighted SVD") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const auto data = random_matrix(200, 24, seed);
        const auto w = random_weights(200, seed + 100);
        const auto b = pod::compute_pod(ensemble(data, w), {10, true, 1e-12});
        const auto o = svd_oracle(data, w);
        for (int i = 0; i < 10; ++i) {
            CHECK(std::abs(b.lambdas(i) - o.lambdas(i)) <= 1e-8 * o.lambdas(i));
            const double sign = b.modes.col(i).dot(o.modes.col(i)) >= 0.0 ? 1.0 : -1.0;
            const double scale = o.modes.col(i).cwiseAbs().maxCoeff();
            CHECK((b.modes.col(i) - sign * o.modes.col(i)).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        }
    }
}

TEST_CASE("orthonormality, covariance and completeness") {
    const auto data = random_matrix(150, 30, 31);
    const auto w = random_weights(150, 32);
    const auto ens = ensemble(data, w);
    const auto b = pod::compute_pod(ens, {20, true, 1e-12});
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            CHECK(std::abs(wdot(b.modes.col(i), b.modes.col(j), w) - (i == j ? 1.0 : 0.0)) < 1e-10);
    const Eigen::MatrixXd cov = b.temporal.transpose() * b.temporal / 30.0;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double target = i == j ? b.lambdas(i) : 0.0;
            CHECK(std::abs(cov(i, j) - target) <= 1e-8 * std::sqrt(b.lambdas(i) * b.lambdas(j)));
        }

    const auto full = pod::compute_pod_full_rank(ens, true);
    CHECK(full.n_modes() == 29);  // mean removal costs one dimension
    double err = 0.0;
    for (int k = 0; k < 30; ++k)
        err = std::max(err, (pod::reconstruct(full, k, full.n_modes()) - data.col(k)).cwiseAbs().maxCoeff());
    CHECK(err < 1e-10);
    // Parseval: mean square coefficients equal the eigenvalue sum.
    const double energy = full.temporal.squaredNorm() / 30.0;
    CHECK(energy == doctest::Approx(full.lambdas.sum()).epsilon(1e-8));
    // m = 0 is the mean.
    CHECK(pod::reconstruct(b, 3, 0) == b.mean);
}

TEST_CASE("zero fluctuations give zero coefficients") {
    Eigen::MatrixXd data = Eigen::MatrixXd::Ones(10, 4) * 2.0;
    const std::vector<double> w(10, 1.0);
    const auto split = snapshot::split_mean(data);
    Eigen::MatrixXd modes = Eigen::MatrixXd::Zero(10, 2);
    modes(0, 0) = 1.0;
    modes(1, 1) = 1.0;
    CHECK(pod::temporal_coefficients(split.fluctuation, w, modes).isZero(0.0));
    try {
        pod::compute_pod(ensemble(data, w), {1, true, 1e-12});
        FAIL("expected DegenerateMode");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateMode);
    }
}

TEST_CASE("POD captures at least as much energy as random subspaces") {
    const auto data = random_matrix(20, 8, 41);
    const auto w = random_weights(20, 42);
    const auto b = pod::compute_pod(ensemble(data, w), {4, true, 1e-12});
    const auto f = snapshot::split_mean(data).fluctuation;
    std::mt19937_64 rng(43);
    std::normal_distribution<double> nd;
    for (int r = 1; r <= 4; ++r) {
        const double best = b.lambdas.head(r).sum();
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<Eigen::VectorXd> basis;
            double captured = 0.0;
            for (int d = 0; d < r; ++d) {
                Eigen::VectorXd e(20);
                for (int i = 0; i < 20; ++i) e(i) = nd(rng);
                for (const auto& q : basis) e -= wdot(e, q, w) * q;
                e /= std::sqrt(wdot(e, e, w));
                basis.push_back(e);
                for (int k = 0; k < 8; ++k) captured += std::pow(wdot(f.col(k), e, w), 2) / 8.0;
            }
            REQUIRE(captured <= best * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("sign convention puts the largest surface value positive") {
    const auto data = random_matrix(40, 10, 51);
    auto ens = ensemble(data, std::vector<double>(40, 1.0));
    ens.surface_index = {0, 1, 2, 3, 4, 5, 6, 7};
    const auto b = pod::compute_pod(ens, {5, false, 1e-12});
    for (int i = 0; i < 5; ++i) {
        double best = 0.0;
        for (int r : ens.surface_index)
            if (std::abs(b.modes(r, i)) > std::abs(best)) best = b.modes(r, i);
        CHECK(best > 0.0);
    }
    // Flipping a mode flips its coefficients: the reconstruction is unchanged.
    const auto rec = pod::reconstruct(b, 2, 5);
    auto e = pod::compute_pod(ens, {5, false, 1e-12});
    e.modes.col(1) *= -1.0;
    e.temporal.col(1) *= -1.0;
    CHECK((pod::reconstruct(e, 2, 5) - rec).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unweighted switch uses the Euclidean inner product") {
    const auto data = random_matrix(30, 9, 61);
    const auto w = random_weights(30, 62);
    const auto b = pod::compute_pod(ensemble(data, w), {3, false, 1e-12});
    CHECK(!b.weighted);
    for (int i = 0; i < 3; ++i) CHECK(b.modes.col(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
    const auto o = svd_oracle(data, std::vector<double>(30, 1.0));
    for (int i = 0; i < 3; ++i) CHECK(b.lambdas(i) == doctest::Approx(o.lambdas(i)).epsilon(1e-10));
}

TEST_CASE("basis file round trip") {
    const auto data = random_matrix(25, 7, 71);
    const auto b = pod::compute_pod(ensemble(data, random_weights(25, 72)), {4, true, 1e-12});
    const auto path = std::filesystem::temp_directory_path() / "pmdflow_test_basis.bin";
    pod::save(b, path);
    const auto c = pod::load(path);
    CHECK(c.times == b.times);
    CHECK(c.weights == b.weights);
    CHECK(c.mean == b.mean);
    CHECK(c.lambdas == b.lambdas);
    CHECK(c.Q == b.Q);
    CHECK(c.modes == b.modes);
    CHECK(c.temporal == b.temporal);
    CHECK(c.weighted == b.weighted);
    std::filesystem::remove(path);
}
