#include "ns/separable_solver.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "common/error.hpp"

namespace pmdflow::ns {

namespace {
// The FFTW planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

struct SeparableSolver::Fft {
    int rings, nt, nk;
    double* real = nullptr;
    fftw_complex* spec = nullptr;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    Fft(int rings_, int nt_) : rings(rings_), nt(nt_), nk(nt_ / 2 + 1) {
        std::lock_guard<std::mutex> lock(planner_mutex());
        real = fftw_alloc_real(static_cast<std::size_t>(rings) * nt);
        spec = fftw_alloc_complex(static_cast<std::size_t>(rings) * nk);
        int n[] = {nt};
        // FFTW_ESTIMATE keeps plan selection (and therefore the bits of the
        // result) independent of timing measurements.
        forward = fftw_plan_many_dft_r2c(1, n, rings, real, nullptr, 1, nt, spec, nullptr, 1, nk,
                                         FFTW_ESTIMATE);
        backward = fftw_plan_many_dft_c2r(1, n, rings, spec, nullptr, 1, nk, real, nullptr, 1, nt,
                                          FFTW_ESTIMATE | FFTW_DESTROY_INPUT);
        if (!forward || !backward) fail(ErrorCode::Internal, "FFTW plan creation failed");
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
        fftw_free(real);
        fftw_free(spec);
    }
};

SeparableSolver::SeparableSolver(int n_radial, int n_theta, std::vector<double> face_coef,
                                 std::vector<double> ring_coef, std::vector<double> diag,
                                 double alpha, Radial radial)
    : nr_(n_radial), nt_(n_theta), nk_(n_theta / 2 + 1), a_(std::move(face_coef)),
      b_(std::move(ring_coef)), diag_(std::move(diag)), alpha_(alpha), radial_(radial) {
    if (nr_ < 3 || nt_ < 2) fail(ErrorCode::Validation, "separable solver needs >= 3 rings and >= 2 angles");
    if (a_.size() != static_cast<std::size_t>(nr_ - 1) || b_.size() != static_cast<std::size_t>(nr_) ||
        diag_.size() != static_cast<std::size_t>(nr_))
        fail(ErrorCode::Validation, "separable solver coefficient sizes do not match the grid");

    bool zero_diag = true;
    for (int i = 1; i + 1 < nr_; ++i) zero_diag = zero_diag && diag_[i] == 0.0;
    singular_ = radial_ == Radial::Neumann && zero_diag;
    if (singular_ && alpha_ == 0.0) fail(ErrorCode::Validation, "separable solver operator is identically zero");

    const int rings = nr_ - 2;
    inv_pivot_.assign(static_cast<std::size_t>(nk_) * rings, 0.0);
    upper_mod_.assign(static_cast<std::size_t>(nk_) * rings, 0.0);
    const bool neumann = radial_ == Radial::Neumann;
    for (int k = 0; k < nk_; ++k) {
        if (singular_ && k == 0) continue;  // handled by flux integration
        const double s = std::sin(std::numbers::pi * k / nt_);
        const double lambda = 4.0 * s * s;
        double prev_upper_mod = 0.0;
        for (int m = 0; m < rings; ++m) {
            const int i = m + 1;
            const double a_lo = (neumann && i == 1) ? 0.0 : a_[i - 1];
            const double a_hi = (neumann && i == nr_ - 2) ? 0.0 : a_[i];
            const double lower = m > 0 ? -alpha_ * a_[i - 1] : 0.0;
            const double upper = m + 1 < rings ? -alpha_ * a_[i] : 0.0;
            const double d = diag_[i] + alpha_ * (a_lo + a_hi + b_[i] * lambda);
            const double piv = d - lower * prev_upper_mod;
            if (piv == 0.0 || !std::isfinite(piv))
                fail(ErrorCode::Internal, "separable solver: zero pivot");
            const double inv = 1.0 / piv;
            inv_pivot_[static_cast<std::size_t>(k) * rings + m] = inv;
            prev_upper_mod = upper * inv;
            upper_mod_[static_cast<std::size_t>(k) * rings + m] = prev_upper_mod;
        }
    }
    fft_ = std::make_unique<Fft>(rings, nt_);
}

SeparableSolver::~SeparableSolver() = default;
SeparableSolver::SeparableSolver(SeparableSolver&&) noexcept = default;
SeparableSolver& SeparableSolver::operator=(SeparableSolver&&) noexcept = default;

void SeparableSolver::solve(Field2D& q, const Field2D& rhs) {
    const int rings = nr_ - 2;
    double* real = fft_->real;
    for (int m = 0; m < rings; ++m) {
        const int i = m + 1;
        const double* r = rhs.ring(i);
        double* dst = real + static_cast<std::size_t>(m) * nt_;
        for (int j = 0; j < nt_; ++j) dst[j] = r[j];
    }
    if (radial_ == Radial::Dirichlet) {
        const double* q0 = q.ring(0);
        const double* qn = q.ring(nr_ - 1);
        double* first = real;
        double* last = real + static_cast<std::size_t>(rings - 1) * nt_;
        for (int j = 0; j < nt_; ++j) {
            first[j] += alpha_ * a_[0] * q0[j];
            last[j] += alpha_ * a_[nr_ - 2] * qn[j];
        }
    }
    fftw_execute(fft_->forward);

    fftw_complex* spec = fft_->spec;
    auto at = [&](int m, int k) -> fftw_complex& { return spec[static_cast<std::size_t>(m) * nk_ + k]; };
    for (int k = 0; k < nk_; ++k) {
        if (singular_ && k == 0) {
            // Integrate the radial flux outward from the fixed inner face.
            double flux_re = 0.0, flux_im = 0.0;
            double q_re = 0.0, q_im = 0.0;
            for (int m = 0; m < rings; ++m) {
                const double r_re = at(m, 0)[0], r_im = at(m, 0)[1];
                at(m, 0)[0] = q_re;
                at(m, 0)[1] = q_im;
                flux_re -= r_re / alpha_;
                flux_im -= r_im / alpha_;
                if (m + 1 < rings) {
                    q_re += flux_re / a_[m + 1];
                    q_im += flux_im / a_[m + 1];
                }
            }
            continue;
        }
        const double* inv = inv_pivot_.data() + static_cast<std::size_t>(k) * rings;
        const double* up = upper_mod_.data() + static_cast<std::size_t>(k) * rings;
        double prev_re = 0.0, prev_im = 0.0;
        for (int m = 0; m < rings; ++m) {
            const double lower = m > 0 ? -alpha_ * a_[m] : 0.0;
            const double re = (at(m, k)[0] - lower * prev_re) * inv[m];
            const double im = (at(m, k)[1] - lower * prev_im) * inv[m];
            at(m, k)[0] = prev_re = re;
            at(m, k)[1] = prev_im = im;
        }
        for (int m = rings - 2; m >= 0; --m) {
            at(m, k)[0] -= up[m] * at(m + 1, k)[0];
            at(m, k)[1] -= up[m] * at(m + 1, k)[1];
        }
    }
    fftw_execute(fft_->backward);

    const double scale = 1.0 / nt_;
    double mean = 0.0;
    for (int m = 0; m < rings; ++m) {
        double* dst = q.ring(m + 1);
        const double* src = real + static_cast<std::size_t>(m) * nt_;
        for (int j = 0; j < nt_; ++j) {
            dst[j] = src[j] * scale;
            mean += dst[j];
        }
    }
    if (singular_) {
        mean /= static_cast<double>(rings) * nt_;
        for (int m = 0; m < rings; ++m) {
            double* dst = q.ring(m + 1);
            for (int j = 0; j < nt_; ++j) dst[j] -= mean;
        }
    }
}

Field2D SeparableSolver::laplacian(const Field2D& q) const {
    Field2D out(nr_, nt_);
    const bool neumann = radial_ == Radial::Neumann;
    for (int i = 1; i + 1 < nr_; ++i) {
        const double* qm = q.ring(i - 1);
        const double* qc = q.ring(i);
        const double* qp = q.ring(i + 1);
        double* o = out.ring(i);
        const double a_lo = (neumann && i == 1) ? 0.0 : a_[i - 1];
        const double a_hi = (neumann && i == nr_ - 2) ? 0.0 : a_[i];
        for (int j = 0; j < nt_; ++j) {
            const int jn = wrap_next(j, nt_), jp = wrap_prev(j, nt_);
            o[j] = a_hi * (qp[j] - qc[j]) - a_lo * (qc[j] - qm[j]) + b_[i] * (qc[jn] - 2.0 * qc[j] + qc[jp]);
        }
    }
    return out;
}

Field2D SeparableSolver::apply(const Field2D& q) const {
    Field2D out = laplacian(q);
    for (int i = 1; i + 1 < nr_; ++i) {
        double* o = out.ring(i);
        const double* qc = q.ring(i);
        for (int j = 0; j < nt_; ++j) o[j] = diag_[i] * qc[j] - alpha_ * o[j];
    }
    return out;
}

}  // namespace pmdflow::ns
