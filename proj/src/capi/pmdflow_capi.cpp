#include "pmdflow/pmdflow.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "common/error.hpp"
#include "pipeline/pipeline.hpp"
#include "pipeline/run_config.hpp"
#include "pod/pod.hpp"

struct pmdflow_config {
    pmdflow::pipeline::RunConfig rc;
};

struct pmdflow_pod {
    pmdflow::pod::PodBasis basis;
};

namespace {

thread_local std::string g_last_error;

pmdflow_status to_status(pmdflow::ErrorCode c) { return static_cast<pmdflow_status>(static_cast<int>(c)); }

pmdflow_status argument_error(const char* what) {
    g_last_error = what;
    return PMDFLOW_E_ARGUMENT;
}

// Runs f, translating exceptions into status codes and the thread's message.
template <class F>
pmdflow_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return PMDFLOW_OK;
    } catch (const pmdflow::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return PMDFLOW_E_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PMDFLOW_E_INTERNAL;
    } catch (...) {
        g_last_error = "unknown exception";
        return PMDFLOW_E_INTERNAL;
    }
}

pmdflow_status copy_out(const std::string& s, char* buf, size_t len, size_t* needed) {
    if (needed) *needed = s.size() + 1;
    if (!buf) return len == 0 ? PMDFLOW_OK : argument_error("buffer is NULL");
    if (len < s.size() + 1) return argument_error("buffer too small");
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return PMDFLOW_OK;
}

pmdflow_status copy_doubles(const double* src, size_t n, double* out, size_t len) {
    if (!out) return argument_error("output array is NULL");
    if (len < n) return argument_error("output array too small");
    std::memcpy(out, src, n * sizeof(double));
    return PMDFLOW_OK;
}

pmdflow::pipeline::LogFn make_log(pmdflow_log_fn log, void* user) {
    if (!log) return {};
    return [log, user](const std::string& m) { log(m.c_str(), user); };
}

}  // namespace

extern "C" {

const char* pmdflow_version(void) { return pmdflow::pipeline::kToolkitVersion; }

const char* pmdflow_last_error(void) { return g_last_error.c_str(); }

const char* pmdflow_status_name(pmdflow_status status) {
    if (status == PMDFLOW_OK) return "ok";
    if (status == PMDFLOW_E_ARGUMENT) return "argument";
    if (status >= PMDFLOW_E_VALIDATION && status <= PMDFLOW_E_INTERNAL)
        return pmdflow::to_string(static_cast<pmdflow::ErrorCode>(static_cast<int>(status)));
    return "unknown";
}

int pmdflow_exit_code(pmdflow_status status) {
    if (status == PMDFLOW_OK) return 0;
    if (status == PMDFLOW_E_CONFIG || status == PMDFLOW_E_ARGUMENT) return 2;
    return 1;
}

pmdflow_status pmdflow_config_load(const char* path, pmdflow_config** out) {
    if (!path || !out) return argument_error("path and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new pmdflow_config{pmdflow::pipeline::load_config(path)}; });
}

pmdflow_status pmdflow_config_parse(const char* text, const char* case_id, pmdflow_config** out) {
    if (!text || !case_id || !out) return argument_error("text, case_id and out must not be NULL");
    *out = nullptr;
    return guarded([&] { *out = new pmdflow_config{pmdflow::pipeline::parse_config_text(text, case_id)}; });
}

void pmdflow_config_free(pmdflow_config* cfg) { delete cfg; }

pmdflow_status pmdflow_config_set_profile(pmdflow_config* cfg, const char* profile) {
    if (!cfg || !profile) return argument_error("cfg and profile must not be NULL");
    return guarded([&] {
        auto rc = cfg->rc;
        pmdflow::pipeline::apply_profile(rc, profile);
        cfg->rc = rc;
    });
}

pmdflow_status pmdflow_config_set_grid(pmdflow_config* cfg, const char* spec) {
    if (!cfg || !spec) return argument_error("cfg and spec must not be NULL");
    return guarded([&] {
        auto rc = cfg->rc;
        pmdflow::pipeline::apply_grid_override(rc, spec);
        cfg->rc = rc;
    });
}

pmdflow_status pmdflow_config_set_seed(pmdflow_config* cfg, uint64_t seed) {
    if (!cfg) return argument_error("cfg must not be NULL");
    cfg->rc.seed = seed;
    return PMDFLOW_OK;
}

pmdflow_status pmdflow_config_case_id(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed) {
    if (!cfg) return argument_error("cfg must not be NULL");
    return copy_out(cfg->rc.case_id, buf, len, needed);
}

pmdflow_status pmdflow_config_hash(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed) {
    if (!cfg) return argument_error("cfg must not be NULL");
    return copy_out(pmdflow::pipeline::config_hash(cfg->rc), buf, len, needed);
}

pmdflow_status pmdflow_config_text(const pmdflow_config* cfg, char* buf, size_t len, size_t* needed) {
    if (!cfg) return argument_error("cfg must not be NULL");
    return copy_out(pmdflow::pipeline::canonical_text(cfg->rc), buf, len, needed);
}

pmdflow_status pmdflow_run_stage(const pmdflow_config* cfg, const char* stage, const char* out_root, int resume,
                                 pmdflow_log_fn log, void* user) {
    if (!cfg || !stage || !out_root) return argument_error("cfg, stage and out_root must not be NULL");
    return guarded([&] {
        pmdflow::pipeline::RunOptions opt;
        opt.out_root = out_root;
        opt.resume = resume != 0;
        opt.log = make_log(log, user);
        if (std::strcmp(stage, "all") == 0)
            pmdflow::pipeline::run_case(cfg->rc, opt);
        else
            pmdflow::pipeline::run_stage(cfg->rc, pmdflow::pipeline::parse_stage(stage), opt);
    });
}

pmdflow_status pmdflow_run_suite(const char* config_dir, const char* out_root, int jobs, int resume,
                                 const char* profile, const char* grid, pmdflow_log_fn log, void* user,
                                 int* n_failed) {
    if (!config_dir || !out_root) return argument_error("config_dir and out_root must not be NULL");
    if (n_failed) *n_failed = 0;
    return guarded([&] {
        pmdflow::pipeline::RunOptions opt;
        opt.out_root = out_root;
        opt.resume = resume != 0;
        opt.log = make_log(log, user);
        const std::string prof = profile ? profile : "";
        const std::string grd = grid ? grid : "";
        auto adjust = [&](pmdflow::pipeline::RunConfig& rc) {
            if (!prof.empty()) pmdflow::pipeline::apply_profile(rc, prof);
            if (!grd.empty()) pmdflow::pipeline::apply_grid_override(rc, grd);
        };
        const auto result = pmdflow::pipeline::run_suite(config_dir, jobs, opt, adjust);
        for (const auto& c : result.cases)
            if (!c.ok && opt.log) opt.log("FAILED " + c.config_path + ": " + c.message);
        if (n_failed) *n_failed = result.failures();
        if (result.failures() > 0) {
            // Config errors alone keep their own status; anything else is a run failure.
            bool only_config = true;
            for (const auto& c : result.cases)
                if (!c.ok && c.code != pmdflow::ErrorCode::Config) only_config = false;
            pmdflow::fail(only_config ? pmdflow::ErrorCode::Config : pmdflow::ErrorCode::Internal,
                          std::to_string(result.failures()) + " of " + std::to_string(result.cases.size()) +
                              " cases failed");
        }
        if (!result.report_written) pmdflow::fail(pmdflow::ErrorCode::MissingCase, result.report_error);
    });
}

pmdflow_status pmdflow_report(const char* out_root) {
    if (!out_root) return argument_error("out_root must not be NULL");
    return guarded([&] { pmdflow::pipeline::write_report(out_root); });
}

pmdflow_status pmdflow_pod_compute(const double* data, int n_points, int n_snaps, const double* weights,
                                   int n_modes, pmdflow_pod** out) {
    if (!data || !out) return argument_error("data and out must not be NULL");
    if (n_points < 1 || n_snaps < 1) return argument_error("ensemble dimensions must be >= 1");
    *out = nullptr;
    return guarded([&] {
        pmdflow::snapshot::SnapshotMatrix w;
        w.data = Eigen::Map<const Eigen::MatrixXd>(data, n_points, n_snaps);
        w.weights = weights ? std::vector<double>(weights, weights + n_points)
                            : std::vector<double>(static_cast<std::size_t>(n_points), 1.0);
        w.times.resize(static_cast<std::size_t>(n_snaps));
        for (int k = 0; k < n_snaps; ++k) w.times[k] = k;
        pmdflow::pod::PodOptions opt;
        opt.n_modes = n_modes;
        opt.weighted = weights != nullptr;
        *out = new pmdflow_pod{pmdflow::pod::compute_pod(w, opt)};
    });
}

void pmdflow_pod_free(pmdflow_pod* pod) { delete pod; }

int pmdflow_pod_n_modes(const pmdflow_pod* pod) { return pod ? pod->basis.n_modes() : 0; }
int pmdflow_pod_n_points(const pmdflow_pod* pod) { return pod ? static_cast<int>(pod->basis.mean.size()) : 0; }
int pmdflow_pod_n_snaps(const pmdflow_pod* pod) { return pod ? pod->basis.n_snaps() : 0; }

pmdflow_status pmdflow_pod_eigenvalues(const pmdflow_pod* pod, double* out, size_t len) {
    if (!pod) return argument_error("pod must not be NULL");
    return copy_doubles(pod->basis.lambdas.data(), static_cast<size_t>(pod->basis.lambdas.size()), out, len);
}

pmdflow_status pmdflow_pod_modes(const pmdflow_pod* pod, double* out, size_t len) {
    if (!pod) return argument_error("pod must not be NULL");
    return copy_doubles(pod->basis.modes.data(), static_cast<size_t>(pod->basis.modes.size()), out, len);
}

pmdflow_status pmdflow_pod_temporal(const pmdflow_pod* pod, double* out, size_t len) {
    if (!pod) return argument_error("pod must not be NULL");
    return copy_doubles(pod->basis.temporal.data(), static_cast<size_t>(pod->basis.temporal.size()), out, len);
}

pmdflow_status pmdflow_pod_mean(const pmdflow_pod* pod, double* out, size_t len) {
    if (!pod) return argument_error("pod must not be NULL");
    return copy_doubles(pod->basis.mean.data(), static_cast<size_t>(pod->basis.mean.size()), out, len);
}

}  // extern "C"
