#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "grid/ogrid.hpp"
#include "ns/case_config.hpp"

namespace pmdflow::pipeline {

inline constexpr const char* kToolkitVersion = "1.0.0";

/// Everything one case run depends on. Parsed from a flat `key = value` file.
struct RunConfig {
    std::string case_id;
    ns::CaseConfig ns;

    int n_radial = 193;
    int n_circ = 257;
    double domain_diameter = 40.0;
    /// Radial distance of the first node off the wall.
    double wall_spacing = 0.005;

    int snaps_per_cycle = 40;
    int record_cycles = 4;
    int n_modes = 10;
    bool weighted_pod = true;

    /// Transient cycles (of 1/f_shed_ref) used to measure the shedding period.
    double period_window_cycles = 10.0;
    /// Measured periods at the end of the run that feed the lift spectrum and
    /// the force statistics.
    double spectrum_cycles = 20.0;
    double stats_cycles = 10.0;
    /// Time units between restart checkpoints.
    double checkpoint_interval = 20.0;

    /// Reserved; the physics is deterministic and does not read it.
    std::uint64_t seed = 0;
    std::string profile = "full";

    /// Throws Config naming the offending field.
    void validate() const;
    grid::GridSpec grid_spec() const;
};

/// Parses `key = value` lines (`#` starts a comment). Unknown or repeated
/// keys and malformed values throw Config. The case id defaults to the file
/// stem. The result is validated.
RunConfig parse_config_text(const std::string& text, const std::string& default_case_id,
                            const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// "full" leaves the config alone; "ci" selects the 97x129 grid with wall
/// spacing 0.01 and a doubled time step. Throws Config for other names.
void apply_profile(RunConfig& rc, const std::string& profile);

/// Parses "NxM" (radial x circumferential nodes) and applies it.
void apply_grid_override(RunConfig& rc, const std::string& spec);

/// Canonical `key = value` text of the effective configuration.
std::string canonical_text(const RunConfig& rc);

/// 64-bit FNV-1a of `data` as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& data);

/// fnv1a_hex(canonical_text(rc)).
std::string config_hash(const RunConfig& rc);

/// First-line comment of every CSV the case writes.
std::string provenance(const RunConfig& rc);

}  // namespace pmdflow::pipeline
