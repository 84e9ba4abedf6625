#include "pod/pod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/binary_io.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmdflow::pod {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> w) {
    return {w.data(), static_cast<Eigen::Index>(w.size())};
}

void check_weights(const Eigen::MatrixXd& fluct, std::span<const double> weights) {
    if (static_cast<Eigen::Index>(weights.size()) != fluct.rows())
        fail(ErrorCode::Validation, "weight vector length " + std::to_string(weights.size()) +
                                        " does not match " + std::to_string(fluct.rows()) + " rows");
}

double weighted_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& w) {
    return (a.array() * w.array() * b.array()).sum();
}

}  // namespace

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& fluct, std::span<const double> weights) {
    check_weights(fluct, weights);
    const Eigen::Index n = fluct.cols();
    if (n == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::MatrixXd wp = as_vector(weights).asDiagonal() * fluct;
    Eigen::MatrixXd g = fluct.transpose() * wp / static_cast<double>(n);
    return 0.5 * (g + g.transpose());
}

EigenPairs eigendecompose(const Eigen::MatrixXd& g_in, int max_sweeps) {
    const Eigen::Index n = g_in.rows();
    if (g_in.cols() != n) fail(ErrorCode::Validation, "eigendecompose needs a square matrix");
    Eigen::MatrixXd a = 0.5 * (g_in + g_in.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double scale = a.norm();

    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p) s += a(p, q) * a(p, q);
        return std::sqrt(2.0 * s);
    };

    bool converged = n <= 1 || scale == 0.0;
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // A <- J^T A J restricted to rows/columns p and q.
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        converged = off_norm() <= 1e-14 * scale;
    }
    if (!converged)
        fail(ErrorCode::EigenConvergence, "Jacobi eigensolver did not converge in " + std::to_string(max_sweeps) +
                                              " sweeps (off-diagonal norm " + std::to_string(off_norm()) + ")");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
    EigenPairs out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    return out;
}

int modes_above_cutoff(const Eigen::VectorXd& lambdas, double cutoff_ratio) {
    if (lambdas.size() == 0 || !(lambdas(0) > 0.0)) return 0;
    const double cut = cutoff_ratio * lambdas(0);
    int m = 0;
    while (m < lambdas.size() && lambdas(m) > cut) ++m;
    return m;
}

Eigen::MatrixXd compute_modes(const Eigen::MatrixXd& fluct, std::span<const double> weights,
                              const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& q, int n_modes,
                              double cutoff_ratio) {
    check_weights(fluct, weights);
    if (n_modes < 0) fail(ErrorCode::Validation, "number of modes must be >= 0");
    const int available = modes_above_cutoff(lambdas, cutoff_ratio);
    if (n_modes > available)
        fail(ErrorCode::DegenerateMode, "requested " + std::to_string(n_modes) + " modes but only " +
                                            std::to_string(available) + " eigenvalues exceed the cutoff");
    const double n = static_cast<double>(fluct.cols());
    const Eigen::Map<const Eigen::VectorXd> w = as_vector(weights);
    Eigen::MatrixXd modes(fluct.rows(), n_modes);
    for (int i = 0; i < n_modes; ++i) {
        Eigen::VectorXd psi = fluct * q.col(i) / std::sqrt(n * lambdas(i));
        // Modified Gram-Schmidt against the previous modes removes the
        // round-off the squared conditioning of the snapshot method leaves.
        for (int pass = 0; pass < 2; ++pass)
            for (int k = 0; k < i; ++k) psi -= weighted_dot(psi, modes.col(k), w) * modes.col(k);
        psi /= std::sqrt(weighted_dot(psi, psi, w));
        modes.col(i) = psi;
    }
    return modes;
}

Eigen::MatrixXd temporal_coefficients(const Eigen::MatrixXd& fluct, std::span<const double> weights,
                                      const Eigen::MatrixXd& modes) {
    check_weights(fluct, weights);
    const Eigen::MatrixXd wm = as_vector(weights).asDiagonal() * modes;
    return fluct.transpose() * wm;
}

void apply_sign_convention(PodBasis& basis, std::span<const std::int32_t> rows) {
    for (int i = 0; i < basis.n_modes(); ++i) {
        double best = 0.0;
        auto consider = [&](Eigen::Index r) {
            const double x = basis.modes(r, i);
            if (std::abs(x) > std::abs(best)) best = x;
        };
        if (rows.empty())
            for (Eigen::Index r = 0; r < basis.modes.rows(); ++r) consider(r);
        else
            for (std::int32_t r : rows) consider(r);
        if (best < 0.0) {
            basis.modes.col(i) *= -1.0;
            basis.temporal.col(i) *= -1.0;
            if (i < basis.Q.cols()) basis.Q.col(i) *= -1.0;
        }
    }
}

PodBasis compute_pod(const snapshot::SnapshotMatrix& w, const PodOptions& opt) {
    if (w.n_snaps() < 1) fail(ErrorCode::Validation, "POD needs at least one snapshot");
    PodBasis b;
    b.times = w.times;
    b.weighted = opt.weighted;
    b.weights = opt.weighted ? w.weights : std::vector<double>(static_cast<std::size_t>(w.n_points()), 1.0);
    auto split = snapshot::split_mean(w.data);
    b.mean = std::move(split.mean);
    const Eigen::MatrixXd g = correlation_matrix(split.fluctuation, b.weights);
    EigenPairs eig = eigendecompose(g);
    b.lambdas = std::move(eig.values);
    b.Q = std::move(eig.vectors);
    b.modes = compute_modes(split.fluctuation, b.weights, b.lambdas, b.Q, opt.n_modes, opt.cutoff_ratio);
    b.temporal = temporal_coefficients(split.fluctuation, b.weights, b.modes);
    apply_sign_convention(b, w.surface_index);
    return b;
}

PodBasis compute_pod_full_rank(const snapshot::SnapshotMatrix& w, bool weighted) {
    if (w.n_snaps() < 1) fail(ErrorCode::Validation, "POD needs at least one snapshot");
    PodBasis b;
    b.times = w.times;
    b.weighted = weighted;
    b.weights = weighted ? w.weights : std::vector<double>(static_cast<std::size_t>(w.n_points()), 1.0);
    auto split = snapshot::split_mean(w.data);
    b.mean = std::move(split.mean);
    EigenPairs eig = eigendecompose(correlation_matrix(split.fluctuation, b.weights));
    b.lambdas = std::move(eig.values);
    b.Q = std::move(eig.vectors);

    const Eigen::Map<const Eigen::VectorXd> wv = as_vector(b.weights);
    const Eigen::Index n = split.fluctuation.cols();
    std::vector<Eigen::VectorXd> kept;
    double ref = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd psi = split.fluctuation * b.Q.col(i);
        if (i == 0) ref = std::sqrt(weighted_dot(psi, psi, wv));
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : kept) psi -= weighted_dot(psi, q, wv) * q;
        const double r = std::sqrt(weighted_dot(psi, psi, wv));
        // Deflation: what is left of the null direction of the mean split is round-off.
        if (!(r > 1e-12 * ref)) continue;
        kept.push_back(psi / r);
    }
    b.modes.resize(split.fluctuation.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) b.modes.col(static_cast<Eigen::Index>(i)) = kept[i];
    b.temporal = temporal_coefficients(split.fluctuation, b.weights, b.modes);
    apply_sign_convention(b, w.surface_index);
    return b;
}

Eigen::VectorXd reconstruct(const PodBasis& basis, int k, int m) {
    if (k < 0 || k >= basis.temporal.rows()) fail(ErrorCode::Validation, "snapshot index out of range");
    if (m < 0 || m > basis.n_modes()) fail(ErrorCode::Validation, "truncation level out of range");
    Eigen::VectorXd out = basis.mean;
    for (int i = 0; i < m; ++i) out += basis.temporal(k, i) * basis.modes.col(i);
    return out;
}

void save(const PodBasis& b, const std::filesystem::path& path) {
    io::BinaryWriter out(path);
    out.magic("POD1");
    const auto np = static_cast<std::int32_t>(b.mean.size());
    const auto ns = static_cast<std::int32_t>(b.times.size());
    out.i32(np);
    out.i32(ns);
    out.i32(b.n_modes());
    out.i32(b.weighted ? 1 : 0);
    auto put = [&](const auto& m) { out.f64s(std::span<const double>(m.data(), static_cast<std::size_t>(m.size()))); };
    out.f64s(b.times);
    out.f64s(b.weights);
    put(b.mean);
    put(b.lambdas);
    put(b.Q);
    put(b.modes);
    put(b.temporal);
    out.close();
}

PodBasis load(const std::filesystem::path& path) {
    io::BinaryReader in(path);
    in.expect_magic("POD1");
    const int np = in.i32(), ns = in.i32(), nm = in.i32();
    const int weighted = in.i32();
    if (np < 0 || ns < 0 || nm < 0 || nm > ns) fail(ErrorCode::Io, "corrupt POD header in " + path.string());
    PodBasis b;
    b.weighted = weighted != 0;
    auto get = [&](auto& m) { in.f64s(std::span<double>(m.data(), static_cast<std::size_t>(m.size()))); };
    b.times = in.f64s(static_cast<std::size_t>(ns));
    b.weights = in.f64s(static_cast<std::size_t>(np));
    b.mean.resize(np);
    b.lambdas.resize(ns);
    b.Q.resize(ns, ns);
    b.modes.resize(np, nm);
    b.temporal.resize(ns, nm);
    get(b.mean);
    get(b.lambdas);
    get(b.Q);
    get(b.modes);
    get(b.temporal);
    return b;
}

void write_spectrum_csv(const PodBasis& b, const std::filesystem::path& path, const std::string& provenance) {
    csv::Writer out(path, provenance);
    out.header({"mode", "lambda", "lambda_normalized"});
    double total = 0.0;
    for (Eigen::Index i = 0; i < b.lambdas.size(); ++i) total += std::max(b.lambdas(i), 0.0);
    for (Eigen::Index i = 0; i < b.lambdas.size(); ++i)
        out.row({double(i + 1), b.lambdas(i), total > 0.0 ? b.lambdas(i) / total : 0.0});
    out.close();
}

void write_temporal_csv(const PodBasis& b, const std::filesystem::path& path, const std::string& provenance) {
    csv::Writer out(path, provenance);
    std::vector<std::string> cols{"t"};
    for (int i = 0; i < b.n_modes(); ++i) cols.push_back("a_" + std::to_string(i + 1));
    out.header(cols);
    std::vector<double> row(static_cast<std::size_t>(b.n_modes()) + 1);
    for (int k = 0; k < b.n_snaps(); ++k) {
        row[0] = b.times[k];
        for (int i = 0; i < b.n_modes(); ++i) row[i + 1] = b.temporal(k, i);
        out.row(row);
    }
    out.close();
}

}  // namespace pmdflow::pod
