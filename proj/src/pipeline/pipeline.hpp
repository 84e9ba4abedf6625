#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "pipeline/run_config.hpp"
#include "pmd/pmd.hpp"
#include "snapshot/snapshot.hpp"

namespace pmdflow::pipeline {

enum class Stage { Simulate, Pod, Pmd };

const char* stage_name(Stage s) noexcept;
/// Throws Config for anything but simulate, pod, pmd.
Stage parse_stage(const std::string& name);

using LogFn = std::function<void(const std::string&)>;

struct RunOptions {
    std::filesystem::path out_root = "results";
    /// Skip stages whose manifest entry and artifacts are present for the
    /// same config hash; continue an interrupted simulation from its
    /// checkpoint.
    bool resume = false;
    LogFn log;
};

/// Record of one case directory (manifest.json).
struct RunManifest {
    std::string case_id;
    std::string version;
    std::string config_hash;
    std::string config_text;
    snapshot::SnapshotPlan plan;
    /// End of the discarded transient and whether the cadence follows the
    /// excitation (lock-in) rather than the measured shedding period.
    double transient_end = 0.0;
    bool cadence_from_excitation = false;
    std::int64_t steps = 0;
    std::map<std::string, bool> stages;
    /// Output kind -> file name relative to the case directory.
    std::map<std::string, std::string> artifacts;
};

std::filesystem::path case_directory(const RunOptions& opt, const RunConfig& rc);
RunManifest read_manifest(const std::filesystem::path& case_dir);

/// Runs one stage. Errors are rethrown with the stage named; files written
/// so far are kept.
RunManifest run_stage(const RunConfig& rc, Stage stage, const RunOptions& opt);

/// simulate, pod and pmd in order.
RunManifest run_case(const RunConfig& rc, const RunOptions& opt);

/// Shedding period from upward crossings of cl - mean(cl) on
/// [t_begin, t_end]. A crossing only counts once the signal has gone below
/// a quarter of the half-range, so small wiggles are ignored.
/// Throws Validation with fewer than two crossings.
double measure_period(std::span<const double> t, std::span<const double> cl, double t_begin, double t_end);

/// Statistics over whole lift cycles inside the last `cycles` periods.
struct ForceStats {
    double strouhal = 0.0;
    double cd_mean = 0.0, cd_p_mean = 0.0;
    double cl_amplitude = 0.0, cl_p_amplitude = 0.0;
    int n_cycles = 0;
};
ForceStats force_statistics(const csv::Table& forces, double period, double cycles);

struct CaseOutcome {
    std::string config_path;
    std::string case_id;
    bool ok = false;
    ErrorCode code = ErrorCode::Internal;
    std::string message;
};

struct SuiteResult {
    std::vector<CaseOutcome> cases;
    bool report_written = false;
    std::string report_error;
    int failures() const;
};

/// Runs every *.cfg in `dir` (sorted by name) with at most `jobs` cases at a
/// time, then the cross-case report into out_root. `adjust` is applied to
/// each parsed config (profile and grid overrides). Throws NoConfigs for an
/// empty directory; per-case failures are collected in the result.
SuiteResult run_suite(const std::filesystem::path& dir, int jobs, const RunOptions& opt,
                      const std::function<void(RunConfig&)>& adjust = {});

/// Collects case_metrics.json from every case directory under out_root and
/// writes regime_summary.csv. Throws MissingCase unless all four regimes are
/// present.
std::vector<pmd::RegimeRow> write_report(const std::filesystem::path& out_root);

}  // namespace pmdflow::pipeline
