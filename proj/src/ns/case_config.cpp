#include "ns/case_config.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "common/error.hpp"

namespace pmdflow::ns {

namespace {
void require(bool ok, const char* field, const char* rule, double value) {
    if (ok) return;
    std::ostringstream os;
    os << "field '" << field << "' " << rule << " (got " << value << ")";
    fail(ErrorCode::Validation, os.str());
}
}  // namespace

void CaseConfig::validate() const {
    require(std::isfinite(reynolds) && reynolds > 0.0, "reynolds", "must be > 0", reynolds);
    require(std::isfinite(amplitude_ratio) && amplitude_ratio >= 0.0, "amplitude_ratio", "must be >= 0",
            amplitude_ratio);
    require(std::isfinite(freq_ratio) && freq_ratio >= 0.0, "freq_ratio", "must be >= 0", freq_ratio);
    require(std::isfinite(f_shed_ref) && f_shed_ref > 0.0, "f_shed_ref", "must be > 0", f_shed_ref);
    require(std::isfinite(dt) && dt > 0.0, "dt", "must be > 0", dt);
    require(n_steps >= 0, "n_steps", "must be >= 0", static_cast<double>(n_steps));
    require(std::isfinite(transient_cycles) && transient_cycles >= 0.0, "transient_cycles", "must be >= 0",
            transient_cycles);
    require(std::isfinite(perturbation_amplitude), "perturbation_amplitude", "must be finite",
            perturbation_amplitude);
    require(std::isfinite(perturbation_duration) && perturbation_duration >= 0.0, "perturbation_duration",
            "must be >= 0", perturbation_duration);
    require(poisson_tol > 0.0, "poisson_tol", "must be > 0", poisson_tol);
    require(divergence_tol > 0.0, "divergence_tol", "must be > 0", divergence_tol);
}

Motion cylinder_motion(double t, const CaseConfig& cfg) noexcept {
    if (cfg.freq_ratio == 0.0) return {};
    const double w = 2.0 * std::numbers::pi * cfg.excitation_frequency();
    const double a = cfg.amplitude_ratio;
    return {a * std::sin(w * t), a * w * std::cos(w * t), -a * w * w * std::sin(w * t)};
}

}  // namespace pmdflow::ns
