#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "common/binary_io.hpp"
#include "grid/ogrid.hpp"
#include "ns/fractional_step.hpp"
#include "pod/pod.hpp"

namespace pmdflow::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kMetrics = "case_metrics.json";
constexpr const char* kCheckpoint = "checkpoint.bin";
constexpr const char* kForces = "forces.csv";
constexpr const char* kEnsemble = "ensemble.pmd";
constexpr const char* kBasis = "pod.bin";

const std::map<Stage, std::vector<std::pair<std::string, std::string>>>& stage_artifacts() {
    static const std::map<Stage, std::vector<std::pair<std::string, std::string>>> table{
        {Stage::Simulate,
         {{"forces", kForces}, {"ensemble", kEnsemble}, {"snapshot", "snapshot_0000.csv"}, {"checkpoint", kCheckpoint}}},
        {Stage::Pod,
         {{"pod_basis", kBasis},
          {"pod_spectrum", "pod_spectrum.csv"},
          {"pod_temporal", "pod_temporal.csv"},
          {"pod_mean", "pod_mean.csv"}}},
        {Stage::Pmd,
         {{"ldc_ddc", "ldc_ddc.csv"},
          {"surface_modes", "surface_modes.csv"},
          {"modal_forces", "modal_forces.csv"},
          {"lift_spectrum", "lift_spectrum.csv"},
          {"case_metrics", kMetrics}}},
    };
    return table;
}

void log(const RunOptions& opt, const std::string& msg) {
    if (opt.log) opt.log(msg);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
        out << text;
        out.flush();
        if (!out) fail(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

json manifest_json(const RunManifest& m) {
    json j;
    j["case_id"] = m.case_id;
    j["version"] = m.version;
    j["config_hash"] = m.config_hash;
    json cfg = json::object();
    std::istringstream in(m.config_text);
    for (std::string line; std::getline(in, line);) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 3);
    }
    j["config"] = cfg;
    j["plan"] = {{"snaps_per_cycle", m.plan.snaps_per_cycle},
                 {"n_cycles", m.plan.n_cycles},
                 {"shedding_period", m.plan.shedding_period}};
    j["transient_end"] = m.transient_end;
    j["cadence_from_excitation"] = m.cadence_from_excitation;
    j["steps"] = m.steps;
    j["stages"] = m.stages;
    j["artifacts"] = m.artifacts;
    return j;
}

void write_manifest(const fs::path& dir, const RunManifest& m) {
    write_text_atomic(dir / kManifest, manifest_json(m).dump(2) + "\n");
}

RunManifest fresh_manifest(const RunConfig& rc) {
    RunManifest m;
    m.case_id = rc.case_id;
    m.version = kToolkitVersion;
    m.config_hash = config_hash(rc);
    m.config_text = canonical_text(rc);
    m.plan.snaps_per_cycle = rc.snaps_per_cycle;
    m.plan.n_cycles = rc.record_cycles;
    return m;
}

// Manifest for `rc`; an existing one is reused only if its hash matches.
RunManifest current_manifest(const fs::path& dir, const RunConfig& rc) {
    if (fs::exists(dir / kManifest)) {
        RunManifest m = read_manifest(dir);
        if (m.config_hash == config_hash(rc)) return m;
    }
    return fresh_manifest(rc);
}

bool stage_complete(const fs::path& dir, const RunManifest& m, Stage s) {
    auto it = m.stages.find(stage_name(s));
    if (it == m.stages.end() || !it->second) return false;
    for (const auto& [kind, file] : stage_artifacts().at(s))
        if (!fs::exists(dir / file)) return false;
    return true;
}

void mark_complete(RunManifest& m, Stage s) {
    m.stages[stage_name(s)] = true;
    for (const auto& [kind, file] : stage_artifacts().at(s)) m.artifacts[kind] = file;
}

void invalidate_from(RunManifest& m, Stage s) {
    for (Stage t : {Stage::Simulate, Stage::Pod, Stage::Pmd}) {
        if (static_cast<int>(t) < static_cast<int>(s)) continue;
        m.stages[stage_name(t)] = false;
        for (const auto& [kind, file] : stage_artifacts().at(t)) m.artifacts.erase(kind);
    }
}

void require_stage(const fs::path& dir, const RunManifest& m, Stage s) {
    if (!stage_complete(dir, m, s))
        fail(ErrorCode::Io, std::string("stage '") + stage_name(s) + "' has not completed in " + dir.string() +
                                " for this configuration");
}

// Force history appender; rows are t, cl_p, cl_v, cl, cd_p, cd_v, cd, y, ydot, yddot.
class ForceLog {
public:
    ForceLog(const fs::path& path, const std::string& provenance, std::uintmax_t keep_bytes) {
        if (keep_bytes > 0 && fs::exists(path) && fs::file_size(path) >= keep_bytes) {
            fs::resize_file(path, keep_bytes);
            out_.open(path, std::ios::binary | std::ios::app);
        } else {
            out_.open(path, std::ios::binary | std::ios::trunc);
            out_ << "# " << provenance << '\n' << "t,cl_p,cl_v,cl,cd_p,cd_v,cd,y,ydot,yddot\n";
        }
        if (!out_) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    }

    void append(const ns::ForceRecord& f) {
        const double v[] = {f.t,          f.cl_pressure, f.cl_viscous, f.cl_total, f.cd_pressure,
                            f.cd_viscous, f.cd_total,    f.y_cyl,      f.ydot,     f.yddot};
        for (std::size_t k = 0; k < std::size(v); ++k) {
            if (k) out_ << ',';
            out_ << csv::format(v[k]);
        }
        out_ << '\n';
    }

    std::uintmax_t flush() {
        out_.flush();
        if (!out_) fail(ErrorCode::Io, "write failed for the force history");
        return static_cast<std::uintmax_t>(out_.tellp());
    }

private:
    std::ofstream out_;
};

enum class Phase : std::int32_t { Transient = 0, Recording = 1, Finished = 2 };

struct CheckpointHeader {
    Phase phase = Phase::Transient;
    double period = 0.0;
    bool cadence_from_excitation = false;
    std::uintmax_t forces_bytes = 0;
};

void write_checkpoint(const fs::path& path, const std::string& hash, const CheckpointHeader& h,
                      const ns::FractionalStepSolver& solver) {
    const fs::path tmp = path.string() + ".tmp";
    {
        io::BinaryWriter out(tmp);
        out.magic("PCK1");
        out.i64(static_cast<std::int64_t>(std::stoull(hash, nullptr, 16)));
        out.i32(static_cast<std::int32_t>(h.phase));
        out.f64(h.period);
        out.i32(h.cadence_from_excitation ? 1 : 0);
        out.i64(static_cast<std::int64_t>(h.forces_bytes));
        solver.write_checkpoint(out);
        out.close();
    }
    fs::rename(tmp, path);
}

// Restores `solver` from `path` if it belongs to `hash`; returns false otherwise.
bool read_checkpoint(const fs::path& path, const std::string& hash, CheckpointHeader& h,
                     ns::FractionalStepSolver& solver) {
    if (!fs::exists(path)) return false;
    io::BinaryReader in(path);
    in.expect_magic("PCK1");
    if (static_cast<std::uint64_t>(in.i64()) != std::stoull(hash, nullptr, 16)) return false;
    h.phase = static_cast<Phase>(in.i32());
    h.period = in.f64();
    h.cadence_from_excitation = in.i32() != 0;
    h.forces_bytes = static_cast<std::uintmax_t>(in.i64());
    solver.read_checkpoint(in);
    return true;
}

grid::OGrid case_grid(const RunConfig& rc) { return grid::build_grid(rc.grid_spec()); }

void simulate(const RunConfig& rc, const fs::path& dir, RunManifest& m, const RunOptions& opt) {
    const std::string prov = provenance(rc);
    const std::string hash = config_hash(rc);
    const grid::OGrid grid = case_grid(rc);
    ns::FractionalStepSolver solver(grid, rc.ns);
    const double dt = rc.ns.dt;
    const auto n_transient = static_cast<std::int64_t>(std::llround(rc.ns.transient_cycles / rc.ns.f_shed_ref / dt));
    const std::int64_t cap = rc.ns.n_steps;

    CheckpointHeader ck;
    bool resumed = opt.resume && read_checkpoint(dir / kCheckpoint, hash, ck, solver);
    if (resumed && ck.phase == Phase::Finished) {
        // Force history complete; recording restarts from the transient end.
        resumed = false;
    }
    if (!resumed) {
        ck = {};
        solver.initialize_impulsive_start();
    } else {
        log(opt, "resuming at t = " + csv::format(solver.state().t));
    }
    ForceLog forces(dir / kForces, prov, resumed ? ck.forces_bytes : 0);

    auto advance = [&] {
        if (cap > 0 && solver.step_count() >= cap) return false;
        solver.step();
        forces.append(solver.forces());
        return true;
    };
    const std::int64_t report_every = std::max<std::int64_t>(1, n_transient / 10);
    const auto ck_every = std::max<std::int64_t>(1, std::llround(rc.checkpoint_interval / dt));

    if (ck.phase == Phase::Transient) {
        while (solver.step_count() < n_transient) {
            if (!advance())
                fail(ErrorCode::StreamEnded, "step cap n_steps = " + std::to_string(cap) +
                                                 " reached before the transient ended");
            const std::int64_t s = solver.step_count();
            if (s % report_every == 0)
                log(opt, "transient " + std::to_string(100 * s / std::max<std::int64_t>(1, n_transient)) +
                             "% (t = " + csv::format(solver.state().t) + ", cfl " +
                             csv::format(solver.diagnostics().cfl) + ")");
            if (s % ck_every == 0 && s < n_transient) {
                ck.forces_bytes = forces.flush();
                write_checkpoint(dir / kCheckpoint, hash, ck, solver);
            }
        }
        ck.forces_bytes = forces.flush();
        const csv::Table history = csv::read(dir / kForces);
        const auto t = history.numeric_column("t");
        const auto cl = history.numeric_column("cl");
        const double t_end = solver.state().t;
        const double measured = measure_period(t, cl, t_end - rc.period_window_cycles / rc.ns.f_shed_ref, t_end);
        ck.period = measured;
        ck.cadence_from_excitation = false;
        if (!rc.ns.stationary()) {
            const double fe = rc.ns.excitation_frequency();
            if (std::abs(1.0 / measured - fe) <= 0.05 * fe) {
                ck.period = 1.0 / fe;
                ck.cadence_from_excitation = true;
            }
        }
        log(opt, "measured shedding period " + csv::format(measured) + ", snapshot cadence period " +
                     csv::format(ck.period));
        ck.phase = Phase::Recording;
        write_checkpoint(dir / kCheckpoint, hash, ck, solver);
    }

    snapshot::SnapshotPlan plan{rc.snaps_per_cycle, rc.record_cycles, ck.period};
    const double t_start = solver.state().t;
    bool first = true;
    const snapshot::PressureStream stream = [&](double& t, const Field2D*& p) {
        if (!first && !advance()) return false;
        first = false;
        t = solver.state().t;
        p = &solver.state().p;
        return true;
    };
    snapshot::SnapshotMatrix w = snapshot::record(stream, grid, plan, t_start, dt);
    forces.flush();

    snapshot::save(w, dir / (std::string(kEnsemble) + ".tmp"));
    fs::rename(dir / (std::string(kEnsemble) + ".tmp"), dir / kEnsemble);
    snapshot::write_snapshot_csv(w, 0, grid, dir / "snapshot_0000.csv", prov);
    CheckpointHeader done = ck;
    done.phase = Phase::Finished;
    done.forces_bytes = forces.flush();
    write_checkpoint(dir / kCheckpoint, hash, done, solver);

    m.plan = plan;
    m.transient_end = t_start;
    m.cadence_from_excitation = ck.cadence_from_excitation;
    m.steps = solver.step_count();
    log(opt, "recorded " + std::to_string(w.n_snaps()) + " snapshots, t = " + csv::format(solver.state().t));
}

void pod_stage(const RunConfig& rc, const fs::path& dir, const RunOptions& opt) {
    const std::string prov = provenance(rc);
    const snapshot::SnapshotMatrix w = snapshot::load(dir / kEnsemble);
    const pod::PodBasis b = pod::compute_pod(w, {rc.n_modes, rc.weighted_pod, 1e-12});
    pod::save(b, dir / (std::string(kBasis) + ".tmp"));
    fs::rename(dir / (std::string(kBasis) + ".tmp"), dir / kBasis);
    pod::write_spectrum_csv(b, dir / "pod_spectrum.csv", prov);
    pod::write_temporal_csv(b, dir / "pod_temporal.csv", prov);

    snapshot::SnapshotMatrix mean;
    mean.data = b.mean;
    mean.weights = w.weights;
    mean.times = {0.0};
    snapshot::write_snapshot_csv(mean, 0, case_grid(rc), dir / "pod_mean.csv", prov);
    log(opt, "POD: " + std::to_string(b.n_modes()) + " modes, first eigenvalue " + csv::format(b.lambdas(0)));
}

double max_abs_diff(std::span<const double> a, const Eigen::VectorXd& b) {
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b(static_cast<Eigen::Index>(k))));
    return e;
}

double surface_norm(const pmd::SurfaceModeSet& s, int i, std::span<const grid::ArcElement> arcs) {
    double acc = 0.0;
    for (int j = 0; j < s.n_surface(); ++j) acc += s.modes_surface(j, i) * s.modes_surface(j, i) * arcs[j].dtheta;
    return std::sqrt(acc);
}

void pmd_stage(const RunConfig& rc, const fs::path& dir, const RunManifest& m, const RunOptions& opt) {
    const std::string prov = provenance(rc);
    const grid::OGrid grid = case_grid(rc);
    const auto arcs = grid::surface_arc_elements(grid);
    const snapshot::SnapshotMatrix w = snapshot::load(dir / kEnsemble);
    const pod::PodBasis b = pod::load(dir / kBasis);

    const pmd::SurfaceModeSet s = pmd::extract_surface(b, w.surface_index, grid.theta());
    const pmd::DecompCoefficients c = pmd::decomposition_coefficients(s, arcs);
    const pmd::ModalForceHistory h = pmd::modal_forces(c, b, w, arcs);
    pmd::write_ldc_ddc(c, dir / "ldc_ddc.csv", prov);
    pmd::write_surface_modes(s, dir / "surface_modes.csv", prov);
    pmd::write_modal_forces(h, dir / "modal_forces.csv", prov);

    // Completeness with every mode above the cutoff.
    const pod::PodBasis bf = pod::compute_pod_full_rank(w, rc.weighted_pod);
    const int full = bf.n_modes();
    const pmd::SurfaceModeSet sf = pmd::extract_surface(bf, w.surface_index, grid.theta());
    const pmd::DecompCoefficients cf = pmd::decomposition_coefficients(sf, arcs);
    const pmd::ModalForceHistory hf = pmd::modal_forces(cf, bf, w, arcs);
    const double cl_err = max_abs_diff(hf.cl_reference, hf.cl_modal.col(full));
    const double cd_err = max_abs_diff(hf.cd_reference, hf.cd_modal.col(full));
    double recon_err = 0.0;
    for (int k = 0; k < w.n_snaps(); ++k)
        recon_err = std::max(recon_err, (pod::reconstruct(bf, k, full) - w.data.col(k)).cwiseAbs().maxCoeff());

    // Lift spectrum over the last spectrum_cycles periods of the run.
    const csv::Table forces = csv::read(dir / kForces);
    const auto t = forces.numeric_column("t");
    const auto cl = forces.numeric_column("cl");
    const double period = m.plan.shedding_period;
    const double dt = rc.ns.dt;
    const double t_end = t.back();
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::floor(period / (100.0 * dt))));
    std::vector<double> sig;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t_end - rc.spectrum_cycles * period - 0.5 * dt && (t.size() - 1 - k) % stride == 0)
            sig.push_back(cl[k]);
    const pmd::Spectrum spec = pmd::magnitude_spectrum(sig, stride * dt);
    const auto peaks = pmd::spectral_peaks(spec, 0.25);
    {
        csv::Writer out(dir / "lift_spectrum.csv", prov);
        out.header({"frequency", "magnitude"});
        for (std::size_t k = 0; k < spec.freq.size(); ++k) out.row({spec.freq[k], spec.magnitude[k]});
        out.close();
    }
    const ForceStats fstats = force_statistics(forces, period, rc.stats_cycles);

    pmd::CaseMetrics cm;
    cm.case_id = rc.case_id;
    cm.freq_ratio = rc.ns.stationary() ? 0.0 : rc.ns.freq_ratio;
    cm.excitation_frequency = rc.ns.stationary() ? 0.0 : rc.ns.excitation_frequency();
    cm.dominant_frequency = peaks.empty() ? 0.0 : peaks.front().freq;
    cm.n_peaks = static_cast<int>(peaks.size());
    cm.beat = pmd::beat_flag(peaks);
    cm.modulation_depth = pmd::modulation_depth(sig);
    cm.n99 = pmd::n99(b.lambdas);
    cm.lift_ranks = pmd::magnitude_ranks(c.L);
    cm.drag_ranks = pmd::magnitude_ranks(c.D);
    cm.L_o = c.L_o;
    cm.D_o = c.D_o;

    auto absmax = [](const std::vector<double>& v, std::size_t from, std::size_t to) {
        double r = 0.0;
        for (std::size_t i = from; i < std::min(to, v.size()); ++i) r = std::max(r, std::abs(v[i]));
        return r;
    };
    const std::size_t M = c.L.size();
    const double lmax = absmax(c.L, 0, M);
    bool spread = false;
    for (std::size_t i = 4; i < M; ++i) spread = spread || std::abs(c.L[i]) > 0.2 * lmax;

    auto var_col = [&](const Eigen::MatrixXd& mat, int col, const std::vector<double>& ref) {
        if (col >= mat.cols()) return 0.0;
        std::vector<double> v(static_cast<std::size_t>(mat.rows()));
        for (Eigen::Index k = 0; k < mat.rows(); ++k) v[static_cast<std::size_t>(k)] = mat(k, col);
        return pmd::variance_capture(v, ref);
    };

    json peaks_json = json::array();
    for (const auto& p : peaks) peaks_json.push_back({{"frequency", p.freq}, {"magnitude", p.magnitude}});
    std::vector<double> lam(static_cast<std::size_t>(b.lambdas.size()));
    for (Eigen::Index i = 0; i < b.lambdas.size(); ++i) lam[static_cast<std::size_t>(i)] = b.lambdas(i);

    json j;
    j["case_id"] = cm.case_id;
    j["config_hash"] = config_hash(rc);
    j["freq_ratio"] = cm.freq_ratio;
    j["amplitude_ratio"] = rc.ns.amplitude_ratio;
    j["excitation_frequency"] = cm.excitation_frequency;
    j["shedding_period"] = period;
    j["cadence_from_excitation"] = m.cadence_from_excitation;
    j["strouhal"] = fstats.strouhal;
    j["stats_cycles"] = fstats.n_cycles;
    j["cd_mean"] = fstats.cd_mean;
    j["cd_pressure_mean"] = fstats.cd_p_mean;
    j["cl_amplitude"] = fstats.cl_amplitude;
    j["cl_pressure_amplitude"] = fstats.cl_p_amplitude;
    j["dominant_frequency"] = cm.dominant_frequency;
    j["spectrum_bin_width"] = spec.bin_width;
    j["peaks"] = peaks_json;
    j["beat"] = cm.beat;
    j["modulation_depth"] = cm.modulation_depth;
    j["n99"] = cm.n99;
    j["lambdas"] = lam;
    j["L_o"] = c.L_o;
    j["D_o"] = c.D_o;
    j["L"] = c.L;
    j["D"] = c.D;
    j["lift_ranks"] = cm.lift_ranks;
    j["drag_ranks"] = cm.drag_ranks;
    j["lift_pair_dominant"] = M >= 3 && std::max(std::abs(c.L[0]), std::abs(c.L[1])) > absmax(c.L, 2, 10);
    j["drag_pair_dominant"] =
        M >= 4 && std::max(std::abs(c.D[2]), std::abs(c.D[3])) > std::max(std::abs(c.D[0]), std::abs(c.D[1]));
    j["lift_spread_beyond_mode4"] = spread;
    j["mode2_over_mode1_surface_norm"] = M >= 2 ? surface_norm(s, 1, arcs) / surface_norm(s, 0, arcs) : 0.0;
    j["lift_variance_capture_m2"] = var_col(h.cl_modal, 2, h.cl_reference);
    j["drag_variance_capture_m2"] = var_col(h.cd_modal, 2, h.cd_reference);
    j["drag_variance_capture_m4"] = var_col(h.cd_modal, 4, h.cd_reference);
    j["full_rank_modes"] = full;
    j["full_rank_lift_error"] = cl_err;
    j["full_rank_drag_error"] = cd_err;
    j["full_rank_reconstruction_error"] = recon_err;
    write_text_atomic(dir / kMetrics, j.dump(2) + "\n");
    log(opt, "PMD: St " + csv::format(fstats.strouhal) + ", Cd " + csv::format(fstats.cd_mean) + ", N99 " +
                 std::to_string(cm.n99) + ", beat " + (cm.beat ? "yes" : "no"));
}

}  // namespace

const char* stage_name(Stage s) noexcept {
    switch (s) {
        case Stage::Simulate: return "simulate";
        case Stage::Pod: return "pod";
        case Stage::Pmd: return "pmd";
    }
    return "?";
}

Stage parse_stage(const std::string& name) {
    for (Stage s : {Stage::Simulate, Stage::Pod, Stage::Pmd})
        if (name == stage_name(s)) return s;
    fail(ErrorCode::Config, "unknown stage '" + name + "'");
}

fs::path case_directory(const RunOptions& opt, const RunConfig& rc) { return opt.out_root / rc.case_id; }

RunManifest read_manifest(const fs::path& dir) {
    std::ifstream in(dir / kManifest);
    if (!in) fail(ErrorCode::Io, "cannot read " + (dir / kManifest).string());
    json j;
    try {
        in >> j;
        RunManifest m;
        m.case_id = j.at("case_id").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& [k, v] : j.at("config").items()) m.config_text += k + " = " + v.get<std::string>() + "\n";
        m.plan.snaps_per_cycle = j.at("plan").at("snaps_per_cycle").get<int>();
        m.plan.n_cycles = j.at("plan").at("n_cycles").get<int>();
        m.plan.shedding_period = j.at("plan").at("shedding_period").get<double>();
        m.transient_end = j.at("transient_end").get<double>();
        m.cadence_from_excitation = j.at("cadence_from_excitation").get<bool>();
        m.steps = j.at("steps").get<std::int64_t>();
        m.stages = j.at("stages").get<std::map<std::string, bool>>();
        m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        return m;
    } catch (const json::exception& e) {
        fail(ErrorCode::Io, "malformed manifest in " + dir.string() + ": " + e.what());
    }
}

RunManifest run_stage(const RunConfig& rc, Stage stage, const RunOptions& opt) {
    rc.validate();
    const fs::path dir = case_directory(opt, rc);
    try {
        fs::create_directories(dir);
        RunManifest m = current_manifest(dir, rc);
        if (opt.resume && stage_complete(dir, m, stage)) {
            log(opt, std::string("stage ") + stage_name(stage) + " already complete, skipped");
            return m;
        }
        invalidate_from(m, stage);
        switch (stage) {
            case Stage::Simulate:
                simulate(rc, dir, m, opt);
                break;
            case Stage::Pod:
                require_stage(dir, m, Stage::Simulate);
                pod_stage(rc, dir, opt);
                break;
            case Stage::Pmd:
                require_stage(dir, m, Stage::Simulate);
                require_stage(dir, m, Stage::Pod);
                pmd_stage(rc, dir, m, opt);
                break;
        }
        mark_complete(m, stage);
        write_manifest(dir, m);
        return m;
    } catch (const Error& e) {
        throw Error(e.code(), "case '" + rc.case_id + "', stage '" + stage_name(stage) + "': " + e.what());
    } catch (const fs::filesystem_error& e) {
        throw Error(ErrorCode::Io, "case '" + rc.case_id + "', stage '" + stage_name(stage) + "': " + e.what());
    }
}

RunManifest run_case(const RunConfig& rc, const RunOptions& opt) {
    RunManifest m;
    for (Stage s : {Stage::Simulate, Stage::Pod, Stage::Pmd}) m = run_stage(rc, s, opt);
    return m;
}

namespace {

struct Crossing {
    std::size_t index;  // first sample at or above the mean
    double time;
};

// Upward mean crossings of x over [t_begin, t_end]. A crossing only counts
// after the signal has dropped a quarter of its half range below the mean,
// so small wiggles near the mean do not register as cycles.
std::vector<Crossing> upward_crossings(std::span<const double> t, std::span<const double> x, double t_begin,
                                       double t_end, double mean) {
    double hi = -INFINITY, lo = INFINITY;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t_begin && t[k] <= t_end) {
            hi = std::max(hi, x[k] - mean);
            lo = std::min(lo, x[k] - mean);
        }
    const double h = 0.25 * 0.5 * (hi - lo);
    std::vector<Crossing> out;
    bool armed = false;
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (t[k - 1] < t_begin || t[k] > t_end) continue;
        const double a = x[k - 1] - mean, b = x[k] - mean;
        if (a < -h) armed = true;
        if (armed && a < 0.0 && b >= 0.0) {
            out.push_back({k, t[k - 1] + (t[k] - t[k - 1]) * (-a) / (b - a)});
            armed = false;
        }
    }
    return out;
}

}  // namespace

double measure_period(std::span<const double> t, std::span<const double> cl, double t_begin, double t_end) {
    if (t.size() != cl.size()) fail(ErrorCode::Validation, "time and lift series differ in length");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t_begin && t[k] <= t_end) {
            sum += cl[k];
            ++n;
        }
    if (n < 3) fail(ErrorCode::Validation, "too few samples to measure the shedding period");
    const auto c = upward_crossings(t, cl, t_begin, t_end, sum / static_cast<double>(n));
    if (c.size() < 2)
        fail(ErrorCode::Validation, "no periodic lift found between t = " + csv::format(t_begin) + " and " +
                                        csv::format(t_end));
    return (c.back().time - c.front().time) / static_cast<double>(c.size() - 1);
}

ForceStats force_statistics(const csv::Table& forces, double period, double cycles) {
    const auto t = forces.numeric_column("t");
    const auto cl = forces.numeric_column("cl");
    const auto clp = forces.numeric_column("cl_p");
    const auto cd = forces.numeric_column("cd");
    const auto cdp = forces.numeric_column("cd_p");
    if (t.empty()) fail(ErrorCode::Validation, "empty force history");
    const double t_end = t.back();
    const double t_begin = t_end - cycles * period;

    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= t_begin) {
            mean += cl[k];
            ++n;
        }
    mean /= static_cast<double>(std::max<std::size_t>(n, 1));
    std::vector<std::size_t> up;
    std::vector<double> tc;
    for (const Crossing& c : upward_crossings(t, cl, t_begin, t_end, mean)) {
        up.push_back(c.index);
        tc.push_back(c.time);
    }
    if (up.size() < 2) fail(ErrorCode::Validation, "fewer than one full lift cycle in the statistics window");
    ForceStats s;
    s.n_cycles = static_cast<int>(up.size() - 1);
    s.strouhal = static_cast<double>(s.n_cycles) / (tc.back() - tc.front());
    double cl_hi = -INFINITY, cl_lo = INFINITY, p_hi = -INFINITY, p_lo = INFINITY;
    double sd = 0.0, sdp = 0.0;
    for (std::size_t k = up.front(); k < up.back(); ++k) {
        sd += cd[k];
        sdp += cdp[k];
        cl_hi = std::max(cl_hi, cl[k]);
        cl_lo = std::min(cl_lo, cl[k]);
        p_hi = std::max(p_hi, clp[k]);
        p_lo = std::min(p_lo, clp[k]);
    }
    const double m = static_cast<double>(up.back() - up.front());
    s.cd_mean = sd / m;
    s.cd_p_mean = sdp / m;
    s.cl_amplitude = 0.5 * (cl_hi - cl_lo);
    s.cl_p_amplitude = 0.5 * (p_hi - p_lo);
    return s;
}

int SuiteResult::failures() const {
    return static_cast<int>(std::count_if(cases.begin(), cases.end(), [](const CaseOutcome& c) { return !c.ok; }));
}

SuiteResult run_suite(const fs::path& dir, int jobs, const RunOptions& opt,
                      const std::function<void(RunConfig&)>& adjust) {
    if (jobs < 1) fail(ErrorCode::Config, "parallelism must be >= 1 (got " + std::to_string(jobs) + ")");
    std::vector<fs::path> configs;
    if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".cfg") configs.push_back(e.path());
    if (configs.empty()) fail(ErrorCode::NoConfigs, "no configs found in " + dir.string());
    std::sort(configs.begin(), configs.end());

    SuiteResult result;
    result.cases.resize(configs.size());
    std::vector<RunConfig> parsed(configs.size());
    std::set<std::string> ids;
    for (std::size_t k = 0; k < configs.size(); ++k) {
        CaseOutcome& o = result.cases[k];
        o.config_path = configs[k].string();
        try {
            parsed[k] = load_config(configs[k]);
            if (adjust) adjust(parsed[k]);
            o.case_id = parsed[k].case_id;
            if (!ids.insert(o.case_id).second)
                fail(ErrorCode::Config, "case_id '" + o.case_id + "' is used by more than one config");
            o.ok = true;
        } catch (const Error& e) {
            o.ok = false;
            o.code = e.code();
            o.message = e.what();
        }
    }

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) {
            CaseOutcome& o = result.cases[k];
            if (!o.ok) continue;
            RunOptions local = opt;
            local.log = [&, id = o.case_id](const std::string& msg) {
                if (!opt.log) return;
                std::lock_guard<std::mutex> lock(log_mutex);
                opt.log("[" + id + "] " + msg);
            };
            try {
                run_case(parsed[k], local);
            } catch (const Error& e) {
                o.ok = false;
                o.code = e.code();
                o.message = e.what();
            } catch (const std::exception& e) {
                o.ok = false;
                o.code = ErrorCode::Internal;
                o.message = e.what();
            }
        }
    };
    const int n_threads = std::min<int>(jobs, static_cast<int>(configs.size()));
    std::vector<std::thread> pool;
    for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    if (result.failures() == 0) {
        try {
            write_report(opt.out_root);
            result.report_written = true;
        } catch (const Error& e) {
            result.report_error = e.what();
        }
    }
    return result;
}

std::vector<pmd::RegimeRow> write_report(const fs::path& out_root) {
    std::vector<fs::path> dirs;
    if (fs::is_directory(out_root))
        for (const auto& e : fs::directory_iterator(out_root))
            if (e.is_directory() && fs::exists(e.path() / kMetrics)) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());

    std::vector<pmd::CaseMetrics> cases;
    std::string hashes;
    for (const fs::path& d : dirs) {
        std::ifstream in(d / kMetrics);
        json j;
        try {
            in >> j;
            pmd::CaseMetrics c;
            c.case_id = j.at("case_id").get<std::string>();
            c.freq_ratio = j.at("freq_ratio").get<double>();
            c.excitation_frequency = j.at("excitation_frequency").get<double>();
            c.dominant_frequency = j.at("dominant_frequency").get<double>();
            c.n_peaks = static_cast<int>(j.at("peaks").size());
            c.beat = j.at("beat").get<bool>();
            c.modulation_depth = j.at("modulation_depth").get<double>();
            c.n99 = j.at("n99").get<int>();
            c.lift_ranks = j.at("lift_ranks").get<std::vector<int>>();
            c.drag_ranks = j.at("drag_ranks").get<std::vector<int>>();
            c.L_o = j.at("L_o").get<double>();
            c.D_o = j.at("D_o").get<double>();
            hashes += j.at("config_hash").get<std::string>() + "\n";
            cases.push_back(std::move(c));
        } catch (const json::exception& e) {
            fail(ErrorCode::Io, "malformed " + (d / kMetrics).string() + ": " + e.what());
        }
    }
    auto rows = pmd::regime_report(cases);
    pmd::write_regime_summary(rows, out_root / "regime_summary.csv",
                              std::string("pmdflow ") + kToolkitVersion + " suite config_hash=" + fnv1a_hex(hashes));
    return rows;
}

}  // namespace pmdflow::pipeline
