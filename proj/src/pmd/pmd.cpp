#include "pmd/pmd.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmdflow::pmd {

namespace {

void check_arcs(std::size_t n, std::span<const grid::ArcElement> arcs) {
    if (arcs.size() != n)
        fail(ErrorCode::Validation, "surface quadrature has " + std::to_string(arcs.size()) + " elements, expected " +
                                        std::to_string(n));
}

double mean_of(std::span<const double> x) {
    return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

std::string join_ranks(const std::vector<int>& r, std::size_t n) {
    std::string out;
    for (std::size_t k = 0; k < std::min(n, r.size()); ++k) {
        if (k) out += ' ';
        out += std::to_string(r[k]);
    }
    return out;
}

}  // namespace

SurfaceModeSet extract_surface(const pod::PodBasis& basis, std::span<const std::int32_t> surface_index,
                               std::span<const double> theta) {
    if (surface_index.size() != theta.size())
        fail(ErrorCode::Validation, "surface index and theta lengths differ");
    const Eigen::Index np = basis.mean.size();
    for (std::int32_t r : surface_index)
        if (r < 0 || r >= np) fail(ErrorCode::Validation, "surface row " + std::to_string(r) + " out of range");

    const int ns = static_cast<int>(theta.size());
    const int m = basis.n_modes();
    SurfaceModeSet s;
    s.theta.assign(theta.begin(), theta.end());
    s.mean_surface.resize(ns);
    s.modes_surface.resize(ns, m);
    s.mean_sine.resize(ns);
    s.mean_cosine.resize(ns);
    s.sine_parts.resize(ns, m);
    s.cosine_parts.resize(ns, m);
    for (int j = 0; j < ns; ++j) {
        const double sn = std::sin(theta[j]), cs = std::cos(theta[j]);
        const double pm = basis.mean(surface_index[j]);
        s.mean_surface(j) = pm;
        s.mean_sine(j) = -pm * sn;
        s.mean_cosine(j) = -pm * cs;
        for (int i = 0; i < m; ++i) {
            const double psi = basis.modes(surface_index[j], i);
            s.modes_surface(j, i) = psi;
            s.sine_parts(j, i) = -psi * sn;
            s.cosine_parts(j, i) = -psi * cs;
        }
    }
    return s;
}

DecompCoefficients decomposition_coefficients(const SurfaceModeSet& s, std::span<const grid::ArcElement> arcs) {
    check_arcs(static_cast<std::size_t>(s.n_surface()), arcs);
    DecompCoefficients c;
    c.L.assign(static_cast<std::size_t>(s.n_modes()), 0.0);
    c.D.assign(static_cast<std::size_t>(s.n_modes()), 0.0);
    for (int j = 0; j < s.n_surface(); ++j) {
        const double w = arcs[j].dtheta;
        c.L_o += s.mean_sine(j) * w;
        c.D_o += s.mean_cosine(j) * w;
        for (int i = 0; i < s.n_modes(); ++i) {
            c.L[i] += s.sine_parts(j, i) * w;
            c.D[i] += s.cosine_parts(j, i) * w;
        }
    }
    return c;
}

SurfaceForce surface_pressure_force(std::span<const double> p_surface, std::span<const grid::ArcElement> arcs) {
    check_arcs(p_surface.size(), arcs);
    SurfaceForce f;
    for (std::size_t j = 0; j < arcs.size(); ++j) {
        f.lift -= p_surface[j] * std::sin(arcs[j].theta) * arcs[j].dtheta;
        f.drag -= p_surface[j] * std::cos(arcs[j].theta) * arcs[j].dtheta;
    }
    return f;
}

ModalForceHistory modal_forces(const DecompCoefficients& c, const pod::PodBasis& basis,
                               const snapshot::SnapshotMatrix& w, std::span<const grid::ArcElement> arcs) {
    const int m = basis.n_modes();
    const int n = basis.n_snaps();
    if (static_cast<int>(c.L.size()) != m || static_cast<int>(c.D.size()) != m)
        fail(ErrorCode::Validation, "decomposition coefficients do not match the basis");
    if (w.n_snaps() != n || basis.temporal.rows() != n)
        fail(ErrorCode::Validation, "ensemble and basis have different snapshot counts");
    check_arcs(w.surface_index.size(), arcs);

    ModalForceHistory h;
    h.t = basis.times;
    h.cl_modal.resize(n, m + 1);
    h.cd_modal.resize(n, m + 1);
    h.cl_reference.resize(static_cast<std::size_t>(n));
    h.cd_reference.resize(static_cast<std::size_t>(n));
    std::vector<double> ps(w.surface_index.size());
    for (int k = 0; k < n; ++k) {
        double cl = c.L_o, cd = c.D_o;
        h.cl_modal(k, 0) = cl;
        h.cd_modal(k, 0) = cd;
        for (int i = 0; i < m; ++i) {
            cl += basis.temporal(k, i) * c.L[i];
            cd += basis.temporal(k, i) * c.D[i];
            h.cl_modal(k, i + 1) = cl;
            h.cd_modal(k, i + 1) = cd;
        }
        for (std::size_t j = 0; j < ps.size(); ++j) ps[j] = w.data(w.surface_index[j], k);
        const SurfaceForce f = surface_pressure_force(ps, arcs);
        h.cl_reference[k] = f.lift;
        h.cd_reference[k] = f.drag;
    }
    return h;
}

double variance_capture(std::span<const double> reconstruction, std::span<const double> reference) {
    if (reconstruction.size() != reference.size())
        fail(ErrorCode::Validation, "variance_capture needs series of equal length");
    const double vr = variance_of(reference);
    if (!(vr > 0.0)) fail(ErrorCode::Validation, "reference series has zero variance");
    return variance_of(reconstruction) / vr;
}

Spectrum magnitude_spectrum(std::span<const double> signal, double dt) {
    const std::size_t n = signal.size();
    if (n < 4) fail(ErrorCode::Validation, "spectrum needs at least 4 samples");
    if (!(dt > 0.0)) fail(ErrorCode::Validation, "spectrum sample spacing must be > 0");
    const double mean = mean_of(signal);
    std::vector<double> x(n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t k = 0; k < n; ++k) {
        const double hann = 0.5 - 0.5 * std::cos(two_pi * static_cast<double>(k) / static_cast<double>(n - 1));
        x[k] = (signal[k] - mean) * hann;
    }
    Spectrum s;
    s.bin_width = 1.0 / (static_cast<double>(n) * dt);
    const std::size_t nb = n / 2 + 1;
    s.freq.resize(nb);
    s.magnitude.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        // Twiddles by recurrence would drift over long records; evaluate directly.
        std::complex<double> acc{};
        const double w = -two_pi * static_cast<double>(b) / static_cast<double>(n);
        for (std::size_t k = 0; k < n; ++k) acc += x[k] * std::polar(1.0, w * static_cast<double>(k));
        s.freq[b] = static_cast<double>(b) * s.bin_width;
        s.magnitude[b] = std::abs(acc);
    }
    return s;
}

std::vector<Peak> spectral_peaks(const Spectrum& s, double threshold) {
    std::vector<Peak> out;
    const std::size_t nb = s.magnitude.size();
    if (nb < 3) return out;
    const double top = *std::max_element(s.magnitude.begin() + 1, s.magnitude.end());
    if (!(top > 0.0)) return out;
    for (std::size_t b = 1; b < nb; ++b) {
        const double m = s.magnitude[b];
        const bool left = m > s.magnitude[b - 1];
        const bool right = b + 1 == nb || m >= s.magnitude[b + 1];
        if (left && right && m >= threshold * top) out.push_back({static_cast<int>(b), s.freq[b], m});
    }
    std::stable_sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.magnitude > b.magnitude; });
    return out;
}

bool beat_flag(const std::vector<Peak>& peaks) {
    for (std::size_t a = 0; a < peaks.size(); ++a)
        for (std::size_t b = a + 1; b < peaks.size(); ++b)
            if (std::abs(peaks[a].bin - peaks[b].bin) > 1) return true;
    return false;
}

double modulation_depth(std::span<const double> x) {
    if (x.size() < 3) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double hi = -INFINITY, lo = INFINITY;
    for (double v : x) {
        hi = std::max(hi, v - mean);
        lo = std::min(lo, v - mean);
    }
    const double h = 0.125 * (hi - lo);
    // Peak of each cycle between armed upward mean crossings.
    std::vector<double> peaks;
    bool armed = false, open = false;
    double peak = -INFINITY;
    for (std::size_t k = 1; k < x.size(); ++k) {
        const double a = x[k - 1] - mean, b = x[k] - mean;
        if (open) peak = std::max(peak, b);
        if (a < -h) armed = true;
        if (armed && a < 0.0 && b >= 0.0) {
            if (open) peaks.push_back(peak);
            open = true;
            armed = false;
            peak = b;
        }
    }
    if (peaks.size() < 2) return 0.0;
    const auto [mn, mx] = std::minmax_element(peaks.begin(), peaks.end());
    return *mx > 0.0 ? (*mx - *mn) / *mx : 0.0;
}

int n99(const Eigen::VectorXd& lambdas) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) total += std::max(lambdas(i), 0.0);
    if (!(total > 0.0)) return 0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        acc += std::max(lambdas(i), 0.0);
        if (acc >= 0.99 * total) return static_cast<int>(i + 1);
    }
    return static_cast<int>(lambdas.size());
}

std::vector<int> magnitude_ranks(std::span<const double> values) {
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int a, int b) { return std::abs(values[a]) > std::abs(values[b]); });
    for (int& i : idx) ++i;
    return idx;
}

std::vector<RegimeRow> regime_report(const std::vector<CaseMetrics>& cases, double sync_band) {
    std::vector<RegimeRow> rows;
    bool seen[4] = {false, false, false, false};
    const char* names[4] = {"stationary", "pre-synchronous", "synchronous", "post-synchronous"};
    for (const CaseMetrics& c : cases) {
        int r;
        if (c.freq_ratio == 0.0)
            r = 0;
        else if (c.freq_ratio < 1.0 - sync_band)
            r = 1;
        else if (c.freq_ratio <= 1.0 + sync_band)
            r = 2;
        else
            r = 3;
        seen[r] = true;
        rows.push_back({c, names[r]});
    }
    std::string missing;
    for (int r = 0; r < 4; ++r)
        if (!seen[r]) missing += (missing.empty() ? "" : ", ") + std::string(names[r]);
    if (!missing.empty()) fail(ErrorCode::MissingCase, "regime report is missing: " + missing);
    return rows;
}

void write_regime_summary(const std::vector<RegimeRow>& rows, const std::filesystem::path& path,
                          const std::string& provenance) {
    csv::Writer out(path, provenance);
    out.header({"case", "regime", "freq_ratio", "f_e", "dominant_frequency", "n_peaks", "beat", "modulation_depth",
                "n99", "L_o", "D_o", "lift_ranks", "drag_ranks"});
    for (const RegimeRow& r : rows) {
        const CaseMetrics& m = r.metrics;
        out.text_row({m.case_id, r.regime, csv::format(m.freq_ratio), csv::format(m.excitation_frequency),
                      csv::format(m.dominant_frequency), std::to_string(m.n_peaks), m.beat ? "1" : "0",
                      csv::format(m.modulation_depth), std::to_string(m.n99), csv::format(m.L_o),
                      csv::format(m.D_o), join_ranks(m.lift_ranks, 4), join_ranks(m.drag_ranks, 4)});
    }
    out.close();
}

void write_ldc_ddc(const DecompCoefficients& c, const std::filesystem::path& path, const std::string& provenance) {
    csv::Writer out(path, provenance);
    out.header({"mode", "L", "D"});
    out.row({0.0, c.L_o, c.D_o});
    for (std::size_t i = 0; i < c.L.size(); ++i) out.row({double(i + 1), c.L[i], c.D[i]});
    out.close();
}

void write_surface_modes(const SurfaceModeSet& s, const std::filesystem::path& path, const std::string& provenance) {
    csv::Writer out(path, provenance);
    const int m = s.n_modes();
    std::vector<std::string> cols{"theta", "p_mean", "sin_mean", "cos_mean"};
    for (int i = 1; i <= m; ++i) cols.push_back("psi_" + std::to_string(i));
    for (int i = 1; i <= m; ++i) cols.push_back("sin_" + std::to_string(i));
    for (int i = 1; i <= m; ++i) cols.push_back("cos_" + std::to_string(i));
    out.header(cols);
    std::vector<double> row(cols.size());
    for (int j = 0; j < s.n_surface(); ++j) {
        row[0] = s.theta[j];
        row[1] = s.mean_surface(j);
        row[2] = s.mean_sine(j);
        row[3] = s.mean_cosine(j);
        for (int i = 0; i < m; ++i) {
            row[4 + i] = s.modes_surface(j, i);
            row[4 + m + i] = s.sine_parts(j, i);
            row[4 + 2 * m + i] = s.cosine_parts(j, i);
        }
        out.row(row);
    }
    out.close();
}

void write_modal_forces(const ModalForceHistory& h, const std::filesystem::path& path,
                        const std::string& provenance) {
    csv::Writer out(path, provenance);
    const int m = static_cast<int>(h.cl_modal.cols()) - 1;
    std::vector<std::string> cols{"t", "cl_reference"};
    for (int i = 1; i <= m; ++i) cols.push_back("cl_" + std::to_string(i));
    cols.push_back("cd_reference");
    for (int i = 1; i <= m; ++i) cols.push_back("cd_" + std::to_string(i));
    out.header(cols);
    std::vector<double> row(cols.size());
    for (std::size_t k = 0; k < h.t.size(); ++k) {
        std::size_t c = 0;
        row[c++] = h.t[k];
        row[c++] = h.cl_reference[k];
        for (int i = 1; i <= m; ++i) row[c++] = h.cl_modal(static_cast<Eigen::Index>(k), i);
        row[c++] = h.cd_reference[k];
        for (int i = 1; i <= m; ++i) row[c++] = h.cd_modal(static_cast<Eigen::Index>(k), i);
        out.row(row);
    }
    out.close();
}

}  // namespace pmdflow::pmd
