#include "ns/fractional_step.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.hpp"

namespace pmdflow::ns {

namespace {

std::vector<double> ring_mean(const Field2D& f) {
    std::vector<double> out(static_cast<std::size_t>(f.n_radial()));
    for (int i = 0; i < f.n_radial(); ++i) {
        double s = 0.0;
        const double* r = f.ring(i);
        for (int j = 0; j < f.n_theta(); ++j) s += r[j];
        out[i] = s / f.n_theta();
    }
    return out;
}

// QUICK face value between nodes c (current) and n (next) with upstream
// neighbour u; falls back to the central average where u does not exist.
inline double quick(double up, double c, double n) { return 0.75 * c + 0.375 * n - 0.125 * up; }

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// PressurePoisson

PressurePoisson::PressurePoisson(const grid::OGrid& grid)
    : a_(ring_mean(grid.faces().xi_g11)),
      b_(ring_mean(grid.faces().eta_g22)),
      vol_(ring_mean(grid.jacobian())),
      solver_(grid.n_radial(), grid.n_theta(), a_, b_, std::vector<double>(grid.n_radial(), 0.0), -1.0,
              SeparableSolver::Radial::Neumann) {}

double PressurePoisson::residual(const Field2D& phi, const Field2D& rhs) const {
    const Field2D lp = solver_.laplacian(phi);
    double worst = 0.0;
    for (int i = 1; i + 1 < phi.n_radial(); ++i)
        for (int j = 0; j < phi.n_theta(); ++j)
            worst = std::max(worst, std::abs(lp(i, j) - rhs(i, j)) / vol_[i]);
    return worst;
}

PoissonResult PressurePoisson::solve(const Field2D& rhs, double tol, int max_refinements, double scale) {
    const int nr = rhs.n_radial(), nt = rhs.n_theta();
    double sum = 0.0, mag = 0.0;
    for (int i = 1; i + 1 < nr; ++i)
        for (int j = 0; j < nt; ++j) {
            sum += rhs(i, j);
            mag += std::abs(rhs(i, j));
        }
    if (std::abs(sum) > 1e-8 * std::max(mag, scale) + 1e-300)
        fail(ErrorCode::Validation,
             "pressure Poisson right-hand side violates the Neumann solvability condition (sum " + fmt(sum) +
                 ", sum|rhs| " + fmt(mag) + ")");

    Field2D work = rhs;
    const double mean = sum / (static_cast<double>(nr - 2) * nt);
    for (int i = 1; i + 1 < nr; ++i)
        for (int j = 0; j < nt; ++j) work(i, j) -= mean;

    PoissonResult out{Field2D(nr, nt), 0.0, 0};
    solver_.solve(out.solution, work);
    out.residual = residual(out.solution, work);
    while (out.residual >= tol && out.refinements < max_refinements) {
        const Field2D lp = solver_.laplacian(out.solution);
        Field2D r(nr, nt);
        for (int i = 1; i + 1 < nr; ++i)
            for (int j = 0; j < nt; ++j) r(i, j) = work(i, j) - lp(i, j);
        Field2D delta(nr, nt);
        solver_.solve(delta, r);
        for (int i = 1; i + 1 < nr; ++i)
            for (int j = 0; j < nt; ++j) out.solution(i, j) += delta(i, j);
        out.residual = residual(out.solution, work);
        ++out.refinements;
    }
    if (!(out.residual < tol))
        fail(ErrorCode::PoissonNotConverged, "pressure Poisson residual " + fmt(out.residual) +
                                                 " above tolerance " + fmt(tol) + " after " +
                                                 std::to_string(out.refinements) + " refinements");
    return out;
}

PoissonResult solve_pressure_poisson(const Field2D& rhs, const grid::OGrid& grid, double tol) {
    PressurePoisson p(grid);
    return p.solve(rhs, tol);
}

// ---------------------------------------------------------------------------
// FractionalStepSolver

FractionalStepSolver::FractionalStepSolver(const grid::OGrid& grid, const CaseConfig& cfg, BoundaryConditions bc)
    : grid_(grid), cfg_(cfg), bc_(std::move(bc)), nr_(grid.n_radial()), nt_(grid.n_theta()) {
    cfg_.validate();
    if (nr_ < 4) fail(ErrorCode::Validation, "solver needs at least 4 radial rings");
    const double defect = grid::separability_defect(grid_);
    if (defect > 1e-9)
        fail(ErrorCode::Validation, "grid is not an orthogonal ring-constant O-grid (defect " + fmt(defect) + ")");

    a_ = ring_mean(grid_.faces().xi_g11);
    b_ = ring_mean(grid_.faces().eta_g22);
    vol_ = ring_mean(grid_.jacobian());
    const double alpha = 0.5 * cfg_.dt / cfg_.reynolds;
    helmholtz_ = std::make_unique<SeparableSolver>(nr_, nt_, a_, b_, vol_, alpha,
                                                    SeparableSolver::Radial::Dirichlet);
    poisson_ = std::make_unique<PressurePoisson>(grid_);

    state_ = {Field2D(nr_, nt_), Field2D(nr_, nt_), Field2D(nr_, nt_), 0.0};
    flux_xi_ = Field2D(nr_ - 1, nt_);
    flux_eta_ = Field2D(nr_, nt_);
    for (Field2D* f : {&conv_u_prev_, &conv_v_prev_, &us_, &vs_, &cu_, &cv_, &rhs_u_, &rhs_v_, &phi_, &div_})
        *f = Field2D(nr_, nt_);
}

FractionalStepSolver::~FractionalStepSolver() = default;

double FractionalStepSolver::inflow_v(double t, const Motion& motion) const {
    return -motion.ydot + (t < cfg_.perturbation_duration ? cfg_.perturbation_amplitude : 0.0);
}

bool FractionalStepSolver::is_outflow(int j) const {
    // Fixed split by the freestream direction. Following the cross-flow
    // instead switches nodes between conditions mid-run and each switch
    // sends a pressure pulse through the domain. Tangential nodes count as
    // inflow; the margin keeps the split mirror-symmetric under round-off.
    return std::cos(grid_.theta()[j]) > 1e-12;
}

void FractionalStepSolver::set_boundary_values(Field2D& u, Field2D& v, double t, const Motion& motion) const {
    const int o = nr_ - 1;
    for (int j = 0; j < nt_; ++j) {
        if (bc_.inner) {
            const auto w = bc_.inner(grid_.x()(0, j), grid_.y()(0, j), t);
            u(0, j) = w[0];
            v(0, j) = w[1];
        } else {
            u(0, j) = 0.0;
            v(0, j) = 0.0;
        }
    }
    const double dr = grid_.last_spacing();
    const double dt = t - state_.t;
    // The outflow condition acts on the disturbance about the moving-frame
    // freestream (1, -ydot); otherwise the outflow ring lags the frame
    // acceleration and a domain-wide pressure gradient builds up.
    const double dv_inf = cylinder_motion(state_.t, cfg_).ydot - motion.ydot;
    for (int j = 0; j < nt_; ++j) {
        if (bc_.outer) {
            const auto w = bc_.outer(grid_.x()(o, j), grid_.y()(o, j), t);
            u(o, j) = w[0];
            v(o, j) = w[1];
        } else if (is_outflow(j)) {
            // d(q)/dt + U d(q)/dn = 0 with the freestream speed U = 1.
            const double c = dt / dr;
            u(o, j) = state_.u(o, j) - c * (state_.u(o, j) - state_.u(o - 1, j));
            v(o, j) = state_.v(o, j) - c * (state_.v(o, j) - state_.v(o - 1, j)) + dv_inf;
        } else {
            u(o, j) = 1.0;
            v(o, j) = inflow_v(t, motion);
        }
    }
}

void FractionalStepSolver::node_gradient(const Field2D& f, int i, int j, double& fx, double& fy) const {
    const auto& m = grid_.metrics();
    double f_xi;
    if (i == 0)
        f_xi = 0.5 * (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j));
    else if (i == nr_ - 1)
        f_xi = 0.5 * (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j));
    else
        f_xi = 0.5 * (f(i + 1, j) - f(i - 1, j));
    const double f_eta = 0.5 * (f(i, wrap_next(j, nt_)) - f(i, wrap_prev(j, nt_)));
    fx = m.xi_x(i, j) * f_xi + m.eta_x(i, j) * f_eta;
    fy = m.xi_y(i, j) * f_xi + m.eta_y(i, j) * f_eta;
}

void FractionalStepSolver::convection(const Field2D& q, Field2D& out) const {
    // Face transports F = flux * q_face; xi-faces stored in rhs scratch rows.
    std::vector<double> fx(static_cast<std::size_t>(nr_ - 1) * nt_);
    for (int i = 0; i + 1 < nr_; ++i) {
        const double* U = flux_xi_.ring(i);
        const double* qc = q.ring(i);
        const double* qn = q.ring(i + 1);
        const double* qm = i > 0 ? q.ring(i - 1) : nullptr;
        const double* qnn = i + 2 < nr_ ? q.ring(i + 2) : nullptr;
        double* dst = fx.data() + static_cast<std::size_t>(i) * nt_;
        for (int j = 0; j < nt_; ++j) {
            double face;
            if (U[j] >= 0.0)
                face = qm ? quick(qm[j], qc[j], qn[j]) : 0.5 * (qc[j] + qn[j]);
            else
                face = qnn ? quick(qnn[j], qn[j], qc[j]) : 0.5 * (qc[j] + qn[j]);
            dst[j] = U[j] * face;
        }
    }
    std::vector<double> fe(static_cast<std::size_t>(nt_));
    for (int i = 1; i + 1 < nr_; ++i) {
        const double* V = flux_eta_.ring(i);
        const double* qr = q.ring(i);
        for (int j = 0; j < nt_; ++j) {
            const int jn = wrap_next(j, nt_);
            double face;
            if (V[j] >= 0.0)
                face = quick(qr[wrap_prev(j, nt_)], qr[j], qr[jn]);
            else
                face = quick(qr[wrap_next(jn, nt_)], qr[jn], qr[j]);
            fe[j] = V[j] * face;
        }
        const double* fhi = fx.data() + static_cast<std::size_t>(i) * nt_;
        const double* flo = fx.data() + static_cast<std::size_t>(i - 1) * nt_;
        double* o = out.ring(i);
        const double inv = 1.0 / vol_[i];
        for (int j = 0; j < nt_; ++j)
            o[j] = -(fhi[j] - flo[j] + fe[j] - fe[wrap_prev(j, nt_)]) * inv;
    }
}

void FractionalStepSolver::interpolate_fluxes(const Field2D& u, const Field2D& v) {
    const auto& f = grid_.faces();
    for (int i = 0; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j)
            flux_xi_(i, j) = f.xi_sx(i, j) * 0.5 * (u(i, j) + u(i + 1, j)) +
                             f.xi_sy(i, j) * 0.5 * (v(i, j) + v(i + 1, j));
    for (int i = 0; i < nr_; ++i)
        for (int j = 0; j < nt_; ++j) {
            const int jn = wrap_next(j, nt_);
            flux_eta_(i, j) = f.eta_sx(i, j) * 0.5 * (u(i, j) + u(i, jn)) +
                              f.eta_sy(i, j) * 0.5 * (v(i, j) + v(i, jn));
        }
}

double FractionalStepSolver::balance_boundary_mass() {
    const auto& f = grid_.faces();
    const int o = nr_ - 2;
    double net = 0.0;
    for (int j = 0; j < nt_; ++j) net += flux_xi_(o, j) - flux_xi_(0, j);
    double area = 0.0;
    std::vector<double> share(static_cast<std::size_t>(nt_), 0.0);
    for (int j = 0; j < nt_; ++j) {
        if (bc_.outer || is_outflow(j)) {
            share[j] = std::hypot(f.xi_sx(o, j), f.xi_sy(o, j));
            area += share[j];
        }
    }
    if (area <= 0.0) return 0.0;
    const double c = -net / area;
    for (int j = 0; j < nt_; ++j) flux_xi_(o, j) += c * share[j];
    return c;
}

void FractionalStepSolver::flux_divergence(Field2D& out) const {
    for (int i = 1; i + 1 < nr_; ++i) {
        const double* hi = flux_xi_.ring(i);
        const double* lo = flux_xi_.ring(i - 1);
        const double* e = flux_eta_.ring(i);
        double* o = out.ring(i);
        for (int j = 0; j < nt_; ++j) o[j] = hi[j] - lo[j] + e[j] - e[wrap_prev(j, nt_)];
    }
}

double FractionalStepSolver::max_divergence() const {
    Field2D d(nr_, nt_);
    flux_divergence(d);
    double worst = 0.0;
    for (int i = 1; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) worst = std::max(worst, std::abs(d(i, j)) / vol_[i]);
    return worst;
}

double FractionalStepSolver::cfl() const {
    const auto& m = grid_.metrics();
    double worst = 0.0;
    for (int i = 1; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) {
            const double u = state_.u(i, j), v = state_.v(i, j);
            const double U = m.y_eta(i, j) * u - m.x_eta(i, j) * v;
            const double V = -m.y_xi(i, j) * u + m.x_xi(i, j) * v;
            worst = std::max(worst, (std::abs(U) + std::abs(V)) / grid_.jacobian()(i, j));
        }
    return worst * cfg_.dt;
}

// Linear extrapolation in r onto both boundary rings.
void FractionalStepSolver::extrapolate_boundary(Field2D& f) const {
    const auto r = grid_.radii();
    const int o = nr_ - 1;
    const double w0 = (r[1] - r[0]) / (r[2] - r[1]);
    const double wo = (r[o] - r[o - 1]) / (r[o - 1] - r[o - 2]);
    for (int j = 0; j < nt_; ++j) {
        f(0, j) = f(1, j) + w0 * (f(1, j) - f(2, j));
        f(o, j) = f(o - 1, j) + wo * (f(o - 1, j) - f(o - 2, j));
    }
}

// Boundary rings by extrapolation, then the gauge p = 0 in the mean over the
// outer ring.
void FractionalStepSolver::extrapolate_pressure(Field2D& p) const {
    extrapolate_boundary(p);
    const int o = nr_ - 1;
    double ref = 0.0;
    for (int j = 0; j < nt_; ++j) ref += p(o, j);
    ref /= nt_;
    for (double& x : p.values()) x -= ref;
}

// Solves for the pressure increment from the current face fluxes, corrects
// fluxes and the interior node velocities, and optionally adds the increment
// to `pressure`.
void FractionalStepSolver::project(Field2D& u, Field2D& v, double dt, Field2D* pressure) {
    flux_divergence(div_);
    for (int i = 1; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) div_(i, j) /= dt;
    // Round-off in the divergence sum scales with the boundary fluxes.
    double scale = 0.0;
    for (int j = 0; j < nt_; ++j) scale += std::abs(flux_xi_(0, j)) + std::abs(flux_xi_(nr_ - 2, j));
    PoissonResult res = poisson_->solve(div_, cfg_.poisson_tol, 4, scale / dt);
    diag_.poisson_residual = res.residual;
    phi_ = std::move(res.solution);
    extrapolate_boundary(phi_);
    for (int i = 1; i + 2 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) flux_xi_(i, j) -= dt * a_[i] * (phi_(i + 1, j) - phi_(i, j));
    for (int i = 1; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j)
            flux_eta_(i, j) -= dt * b_[i] * (phi_(i, wrap_next(j, nt_)) - phi_(i, j));
    for (int i = 1; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) {
            double gx, gy;
            node_gradient(phi_, i, j, gx, gy);
            u(i, j) -= dt * gx;
            v(i, j) -= dt * gy;
        }
    if (pressure) {
        for (int i = 1; i + 1 < nr_; ++i)
            for (int j = 0; j < nt_; ++j) (*pressure)(i, j) += phi_(i, j);
        extrapolate_pressure(*pressure);
    }
}

void FractionalStepSolver::initialize_impulsive_start() {
    state_.t = 0.0;
    state_.u.fill(1.0);
    state_.v.fill(0.0);
    state_.p.fill(0.0);
    const Motion m0 = cylinder_motion(0.0, cfg_);
    set_boundary_values(state_.u, state_.v, 0.0, m0);
    interpolate_fluxes(state_.u, state_.v);
    balance_boundary_mass();
    project(state_.u, state_.v, 1.0, nullptr);
    have_prev_ = false;
    steps_ = 0;
    diag_.divergence = max_divergence();
}

void FractionalStepSolver::set_state(const FlowState& s) {
    if (!s.u.same_shape(state_.u) || !s.v.same_shape(state_.u) || !s.p.same_shape(state_.u))
        fail(ErrorCode::Validation, "flow state does not match the grid");
    state_ = s;
    interpolate_fluxes(state_.u, state_.v);
    balance_boundary_mass();
    project(state_.u, state_.v, 1.0, nullptr);
    have_prev_ = false;
    diag_.divergence = max_divergence();
}

void FractionalStepSolver::iterate_initial_pressure(int sweeps) {
    const FlowState saved = state_;
    const Field2D fx = flux_xi_, fe = flux_eta_;
    const Field2D cu = conv_u_prev_, cv = conv_v_prev_;
    const bool had_prev = have_prev_;
    const std::int64_t steps = steps_;
    for (int k = 0; k < sweeps; ++k) {
        step();
        Field2D p = std::move(state_.p);
        state_ = saved;
        state_.p = std::move(p);
        flux_xi_ = fx;
        flux_eta_ = fe;
        conv_u_prev_ = cu;
        conv_v_prev_ = cv;
        have_prev_ = had_prev;
        steps_ = steps;
    }
}

const FlowState& FractionalStepSolver::step() {
    const double dt = cfg_.dt;
    const double t_new = state_.t + dt;
    const Motion m_new = cylinder_motion(t_new, cfg_);
    const Motion m_half = cylinder_motion(state_.t + 0.5 * dt, cfg_);

    convection(state_.u, cu_);
    convection(state_.v, cv_);
    if (!have_prev_) {
        conv_u_prev_ = cu_;
        conv_v_prev_ = cv_;
    }

    set_boundary_values(us_, vs_, t_new, m_new);
    const Field2D lu = helmholtz_->laplacian(state_.u);
    const Field2D lv = helmholtz_->laplacian(state_.v);
    const double alpha = 0.5 * dt / cfg_.reynolds;
    const double body_v = m_half.yddot == 0.0 ? 0.0 : -m_half.yddot;
    for (int i = 1; i + 1 < nr_; ++i) {
        const double vol = vol_[i];
        for (int j = 0; j < nt_; ++j) {
            double px, py;
            node_gradient(state_.p, i, j, px, py);
            rhs_u_(i, j) = vol * state_.u(i, j) +
                           dt * vol * (1.5 * cu_(i, j) - 0.5 * conv_u_prev_(i, j) - px) + alpha * lu(i, j);
            rhs_v_(i, j) = vol * state_.v(i, j) +
                           dt * vol * (1.5 * cv_(i, j) - 0.5 * conv_v_prev_(i, j) - py + body_v) +
                           alpha * lv(i, j);
        }
    }
    helmholtz_->solve(us_, rhs_u_);
    helmholtz_->solve(vs_, rhs_v_);

    // Momentum interpolation: add back the node pressure gradient (one-sided
    // on the boundary rings), interpolate, and apply the compact face gradient
    // instead.
    Field2D& uh = rhs_u_;
    Field2D& vh = rhs_v_;
    for (int i = 0; i < nr_; ++i)
        for (int j = 0; j < nt_; ++j) {
            double px, py;
            node_gradient(state_.p, i, j, px, py);
            uh(i, j) = us_(i, j) + dt * px;
            vh(i, j) = vs_(i, j) + dt * py;
        }
    interpolate_fluxes(uh, vh);
    const Field2D& p = state_.p;
    for (int i = 0; i + 1 < nr_; ++i)
        for (int j = 0; j < nt_; ++j) flux_xi_(i, j) -= dt * a_[i] * (p(i + 1, j) - p(i, j));
    for (int i = 0; i < nr_; ++i)
        for (int j = 0; j < nt_; ++j) flux_eta_(i, j) -= dt * b_[i] * (p(i, wrap_next(j, nt_)) - p(i, j));
    diag_.mass_correction = balance_boundary_mass();

    project(us_, vs_, dt, &state_.p);

    std::swap(state_.u, us_);
    std::swap(state_.v, vs_);
    std::swap(conv_u_prev_, cu_);
    std::swap(conv_v_prev_, cv_);
    have_prev_ = true;
    state_.t = t_new;
    ++steps_;

    diag_.divergence = max_divergence();
    diag_.cfl = cfl();
    for (const Field2D* f : {&state_.u, &state_.v, &state_.p})
        for (double x : f->values())
            if (!std::isfinite(x))
                fail(ErrorCode::NonFinite, "non-finite value in flow state at t = " + fmt(state_.t));
    if (!(diag_.divergence < cfg_.divergence_tol))
        fail(ErrorCode::PoissonNotConverged,
             "post-corrector divergence " + fmt(diag_.divergence) + " above " + fmt(cfg_.divergence_tol));
    if (!(diag_.cfl < 1.0))
        fail(ErrorCode::CflViolation, "CFL number " + fmt(diag_.cfl) + " at t = " + fmt(state_.t));
    return state_;
}

ForceRecord FractionalStepSolver::forces() const {
    return compute_forces(state_, grid_, cylinder_motion(state_.t, cfg_), cfg_);
}

void FractionalStepSolver::write_checkpoint(io::BinaryWriter& out) const {
    const int nc = grid_.n_circ();
    out.i32(nr_);
    out.i32(nc);
    out.f64(state_.t);
    std::vector<double> plane(static_cast<std::size_t>(nr_) * nc);
    for (const Field2D* f : {&state_.u, &state_.v, &state_.p}) {
        for (int i = 0; i < nr_; ++i)
            for (int j = 0; j < nc; ++j) plane[static_cast<std::size_t>(i) * nc + j] = (*f)(i, j % nt_);
        out.f64s(plane);
    }
    out.magic("AUX1");
    out.i64(steps_);
    out.i32(have_prev_ ? 1 : 0);
    for (const Field2D* f : {&flux_xi_, &flux_eta_, &conv_u_prev_, &conv_v_prev_}) out.f64s(f->values());
}

void FractionalStepSolver::read_checkpoint(io::BinaryReader& in) {
    const int nr = in.i32(), nc = in.i32();
    if (nr != nr_ || nc != grid_.n_circ())
        fail(ErrorCode::Io, "checkpoint grid " + std::to_string(nr) + "x" + std::to_string(nc) +
                                " does not match solver grid");
    state_.t = in.f64();
    std::vector<double> plane(static_cast<std::size_t>(nr_) * nc);
    for (Field2D* f : {&state_.u, &state_.v, &state_.p}) {
        in.f64s(std::span<double>(plane));
        for (int i = 0; i < nr_; ++i)
            for (int j = 0; j < nt_; ++j) (*f)(i, j) = plane[static_cast<std::size_t>(i) * nc + j];
    }
    in.expect_magic("AUX1");
    steps_ = in.i64();
    have_prev_ = in.i32() != 0;
    for (Field2D* f : {&flux_xi_, &flux_eta_, &conv_u_prev_, &conv_v_prev_}) in.f64s(f->values());
}

}  // namespace pmdflow::ns
