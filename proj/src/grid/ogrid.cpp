#include "grid/ogrid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "common/binary_io.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmdflow::grid {

namespace {

// One-sided tanh clustering towards s = 0. delta -> 0 is the uniform limit.
std::vector<double> tanh_radii(int n, double r0, double r1, double delta) {
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        const double f = delta < 1e-10 ? s : 1.0 + std::tanh(delta * (s - 1.0)) / std::tanh(delta);
        r[static_cast<std::size_t>(i)] = r0 + (r1 - r0) * f;
    }
    r.front() = r0;
    r.back() = r1;
    return r;
}

double spacing_ratio(int n, double r0, double r1, double delta) {
    const auto r = tanh_radii(n, r0, r1, delta);
    return (r[n - 1] - r[n - 2]) / (r[1] - r[0]);
}

template <class F>
double bisect(F&& f, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid)) hi = mid; else lo = mid;
    }
    return 0.5 * (lo + hi);
}

constexpr double kMaxDelta = 30.0;

double delta_for_ratio(int n, double r0, double r1, double ratio) {
    if (ratio <= 1.0 + 1e-14 || n < 3) return 0.0;
    return bisect([&](double d) { return spacing_ratio(n, r0, r1, d) >= ratio; }, 0.0, kMaxDelta);
}

}  // namespace

void GridSpec::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorCode::Validation, "grid: " + what); };
    if (n_radial < 3) bad("n_radial must be >= 3 (got " + std::to_string(n_radial) + ")");
    if (n_circ < 8) bad("n_circ must be >= 8 (got " + std::to_string(n_circ) + ")");
    if (!(cylinder_diameter > 0.0) || !std::isfinite(cylinder_diameter))
        bad("cylinder_diameter must be positive");
    if (!(domain_diameter > cylinder_diameter) || !std::isfinite(domain_diameter))
        bad("domain_diameter must exceed cylinder_diameter");
    if (!(stretch_ratio >= 1.0) || !std::isfinite(stretch_ratio))
        bad("stretch_ratio must be >= 1 (clustering is towards the wall)");
    if (n_radial >= 3 && stretch_ratio > 1.0) {
        const double reachable = spacing_ratio(n_radial, 0.5 * cylinder_diameter,
                                               0.5 * domain_diameter, kMaxDelta);
        if (stretch_ratio > reachable) {
            std::ostringstream os;
            os << "stretch_ratio " << stretch_ratio << " exceeds the reachable maximum " << reachable;
            bad(os.str());
        }
    }
}

double GridSpec::stretch_for_wall_spacing(int n_radial, double domain_diameter,
                                          double cylinder_diameter, double first_spacing) {
    const double r0 = 0.5 * cylinder_diameter;
    const double r1 = 0.5 * domain_diameter;
    if (n_radial < 3 || first_spacing >= (r1 - r0) / (n_radial - 1)) return 1.0;
    const double delta = bisect(
        [&](double d) {
            const auto r = tanh_radii(n_radial, r0, r1, d);
            return r[1] - r[0] <= first_spacing;
        },
        0.0, kMaxDelta);
    return spacing_ratio(n_radial, r0, r1, delta);
}

std::vector<double> radial_distribution(const GridSpec& spec) {
    const double r0 = 0.5 * spec.cylinder_diameter;
    const double r1 = 0.5 * spec.domain_diameter;
    return tanh_radii(spec.n_radial, r0, r1, delta_for_ratio(spec.n_radial, r0, r1, spec.stretch_ratio));
}

double OGrid::area_weight(int i, int j) const noexcept {
    const double w = jac_(i, j);
    return (i == 0 || i == n_radial() - 1) ? 0.5 * w : w;
}

std::vector<double> OGrid::area_weights() const {
    std::vector<double> w(n_points());
    const int nt = n_theta();
    for (int i = 0; i < n_radial(); ++i)
        for (int j = 0; j < nt; ++j) w[static_cast<std::size_t>(i) * nt + j] = area_weight(i, j);
    return w;
}

OGrid build_grid(const GridSpec& spec) {
    spec.validate();

    OGrid g;
    g.spec_ = spec;
    const int nr = spec.n_radial;
    const int nt = spec.n_circ - 1;
    g.radii_ = radial_distribution(spec);
    g.dtheta_ = 2.0 * std::numbers::pi / nt;
    g.theta_.resize(static_cast<std::size_t>(nt));
    for (int j = 0; j < nt; ++j) g.theta_[j] = g.dtheta_ * j;

    g.x_ = Field2D(nr, nt);
    g.y_ = Field2D(nr, nt);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            g.x_(i, j) = g.radii_[i] * std::cos(g.theta_[j]);
            g.y_(i, j) = g.radii_[i] * std::sin(g.theta_[j]);
        }
    }

    // Node derivatives: central in the interior, second-order one-sided on the
    // two boundary rings, periodic central along eta.
    auto d_xi = [&](const Field2D& f, int i, int j) {
        if (i == 0) return 0.5 * (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j));
        if (i == nr - 1) return 0.5 * (3.0 * f(nr - 1, j) - 4.0 * f(nr - 2, j) + f(nr - 3, j));
        return 0.5 * (f(i + 1, j) - f(i - 1, j));
    };
    auto d_eta = [&](const Field2D& f, int i, int j) {
        return 0.5 * (f(i, wrap_next(j, nt)) - f(i, wrap_prev(j, nt)));
    };

    NodeMetrics& m = g.node_;
    for (Field2D* f : {&m.x_xi, &m.x_eta, &m.y_xi, &m.y_eta, &m.xi_x, &m.xi_y, &m.eta_x, &m.eta_y})
        *f = Field2D(nr, nt);
    g.jac_ = Field2D(nr, nt);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double xx = d_xi(g.x_, i, j), xe = d_eta(g.x_, i, j);
            const double yx = d_xi(g.y_, i, j), ye = d_eta(g.y_, i, j);
            const double jac = xx * ye - xe * yx;
            m.x_xi(i, j) = xx;
            m.x_eta(i, j) = xe;
            m.y_xi(i, j) = yx;
            m.y_eta(i, j) = ye;
            g.jac_(i, j) = jac;
            m.xi_x(i, j) = ye / jac;
            m.xi_y(i, j) = -xe / jac;
            m.eta_x(i, j) = -yx / jac;
            m.eta_y(i, j) = xx / jac;
        }
    }

    // Face geometry. Tangential derivatives on a face are averages of the
    // neighbouring node central differences, normal ones are compact; that
    // pairing makes the metric identity hold exactly for interior cells.
    FaceMetrics& fm = g.face_;
    for (Field2D* f : {&fm.xi_sx, &fm.xi_sy, &fm.xi_g11, &fm.xi_g12}) *f = Field2D(nr - 1, nt);
    for (Field2D* f : {&fm.eta_sx, &fm.eta_sy, &fm.eta_g22, &fm.eta_g12}) *f = Field2D(nr, nt);
    for (int i = 0; i + 1 < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double xe = 0.5 * (m.x_eta(i, j) + m.x_eta(i + 1, j));
            const double ye = 0.5 * (m.y_eta(i, j) + m.y_eta(i + 1, j));
            const double xx = g.x_(i + 1, j) - g.x_(i, j);
            const double yx = g.y_(i + 1, j) - g.y_(i, j);
            const double jac = xx * ye - xe * yx;
            fm.xi_sx(i, j) = ye;
            fm.xi_sy(i, j) = -xe;
            fm.xi_g11(i, j) = (xe * xe + ye * ye) / jac;
            fm.xi_g12(i, j) = -(xx * xe + yx * ye) / jac;
        }
    }
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const int jn = wrap_next(j, nt);
            const double xx = 0.5 * (m.x_xi(i, j) + m.x_xi(i, jn));
            const double yx = 0.5 * (m.y_xi(i, j) + m.y_xi(i, jn));
            const double xe = g.x_(i, jn) - g.x_(i, j);
            const double ye = g.y_(i, jn) - g.y_(i, j);
            const double jac = xx * ye - xe * yx;
            fm.eta_sx(i, j) = -yx;
            fm.eta_sy(i, j) = xx;
            fm.eta_g22(i, j) = (xx * xx + yx * yx) / jac;
            fm.eta_g12(i, j) = -(xx * xe + yx * ye) / jac;
        }
    }
    return g;
}

std::vector<ArcElement> surface_arc_elements(const OGrid& grid) {
    std::vector<ArcElement> arcs(static_cast<std::size_t>(grid.n_theta()));
    for (int j = 0; j < grid.n_theta(); ++j) arcs[j] = {grid.theta()[j], grid.dtheta()};
    return arcs;
}

double metric_identity_residual(const OGrid& grid) {
    const auto& f = grid.faces();
    const int nr = grid.n_radial(), nt = grid.n_theta();
    double worst = 0.0;
    for (int i = 1; i + 1 < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const int jp = wrap_prev(j, nt);
            const double dx = f.xi_sx(i, j) - f.xi_sx(i - 1, j) + f.eta_sx(i, j) - f.eta_sx(i, jp);
            const double dy = f.xi_sy(i, j) - f.xi_sy(i - 1, j) + f.eta_sy(i, j) - f.eta_sy(i, jp);
            worst = std::max({worst, std::abs(dx), std::abs(dy)});
        }
    }
    return worst;
}

double separability_defect(const OGrid& grid) {
    const auto& f = grid.faces();
    const int nr = grid.n_radial(), nt = grid.n_theta();
    double worst = 0.0;
    auto ring_spread = [&](const Field2D& a, int i) {
        double lo = a(i, 0), hi = a(i, 0);
        for (int j = 1; j < nt; ++j) {
            lo = std::min(lo, a(i, j));
            hi = std::max(hi, a(i, j));
        }
        return (hi - lo) / std::max(std::abs(hi), 1e-300);
    };
    for (int i = 0; i + 1 < nr; ++i) {
        worst = std::max(worst, ring_spread(f.xi_g11, i));
        double g12 = 0.0;
        for (int j = 0; j < nt; ++j) g12 = std::max(g12, std::abs(f.xi_g12(i, j)) / f.xi_g11(i, j));
        worst = std::max(worst, g12);
    }
    for (int i = 0; i < nr; ++i) {
        worst = std::max(worst, ring_spread(f.eta_g22, i));
        worst = std::max(worst, ring_spread(grid.jacobian(), i));
    }
    return worst;
}

void write_grid_binary(const OGrid& grid, const std::filesystem::path& path) {
    io::BinaryWriter w(path);
    const int nr = grid.n_radial(), nc = grid.n_circ();
    w.i32(nr);
    w.i32(nc);
    std::vector<double> plane(static_cast<std::size_t>(nr) * nc);
    for (const Field2D* f : {&grid.x(), &grid.y()}) {
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) plane[static_cast<std::size_t>(i) * nc + j] = (*f)(i, j % grid.n_theta());
        w.f64s(plane);
    }
    w.close();
}

GridCoordinates read_grid_binary(const std::filesystem::path& path) {
    io::BinaryReader r(path);
    GridCoordinates c;
    c.n_radial = r.i32();
    c.n_circ = r.i32();
    if (c.n_radial <= 0 || c.n_circ <= 0) fail(ErrorCode::Io, "bad grid dimensions in " + path.string());
    const auto n = static_cast<std::size_t>(c.n_radial) * static_cast<std::size_t>(c.n_circ);
    c.x = r.f64s(n);
    c.y = r.f64s(n);
    return c;
}

void write_grid_csv(const OGrid& grid, const std::filesystem::path& path) {
    csv::Writer w(path, "");
    w.header({"i", "j", "x", "y", "theta", "jacobian", "area_weight"});
    for (int i = 0; i < grid.n_radial(); ++i)
        for (int j = 0; j < grid.n_theta(); ++j)
            w.row({double(i), double(j), grid.x()(i, j), grid.y()(i, j), grid.theta()[j],
                   grid.jacobian()(i, j), grid.area_weight(i, j)});
    w.close();
}

}  // namespace pmdflow::grid
