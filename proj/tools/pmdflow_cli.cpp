// pmdflow command-line front end. Talks to the toolkit only through the C API.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "pmdflow/pmdflow.h"

namespace {

struct Options {
    std::string target;
    std::string out;
    std::string grid;
    std::string profile;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool resume = false;
    bool quiet = false;
    int jobs = 1;
};

void log_stderr(const char* msg, void*) { std::fprintf(stderr, "%s\n", msg); }

int report_failure(pmdflow_status s) {
    std::fprintf(stderr, "pmdflow: error [%s]: %s\n", pmdflow_status_name(s), pmdflow_last_error());
    return pmdflow_exit_code(s);
}

int run_single(const Options& o, const std::string& stage) {
    pmdflow_config* cfg = nullptr;
    pmdflow_status s = pmdflow_config_load(o.target.c_str(), &cfg);
    if (s == PMDFLOW_OK && !o.profile.empty()) s = pmdflow_config_set_profile(cfg, o.profile.c_str());
    if (s == PMDFLOW_OK && !o.grid.empty()) s = pmdflow_config_set_grid(cfg, o.grid.c_str());
    if (s == PMDFLOW_OK && o.seed_given) s = pmdflow_config_set_seed(cfg, o.seed);
    if (s == PMDFLOW_OK)
        s = pmdflow_run_stage(cfg, stage.c_str(), o.out.c_str(), o.resume, o.quiet ? nullptr : log_stderr, nullptr);
    pmdflow_config_free(cfg);
    return s == PMDFLOW_OK ? 0 : report_failure(s);
}

int run_suite(const Options& o) {
    int failed = 0;
    const pmdflow_status s =
        pmdflow_run_suite(o.target.c_str(), o.out.c_str(), o.jobs, o.resume, o.profile.empty() ? nullptr : o.profile.c_str(),
                          o.grid.empty() ? nullptr : o.grid.c_str(), o.quiet ? nullptr : log_stderr, nullptr, &failed);
    return s == PMDFLOW_OK ? 0 : report_failure(s);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pmdflow: cylinder wake simulation and pressure mode decomposition"};
    app.set_version_flag("--version", pmdflow_version());
    app.require_subcommand(1);

    Options o;
    const char* env_out = std::getenv("PMDFLOW_OUT");
    o.out = env_out && *env_out ? env_out : "results";

    auto common = [&](CLI::App* sub, bool needs_target, const char* target_help) {
        if (needs_target) sub->add_option("target", o.target, target_help)->required();
        sub->add_option("--out", o.out, "output root (default $PMDFLOW_OUT or ./results)");
        sub->add_flag("--resume", o.resume, "skip completed stages, continue from checkpoints");
        sub->add_option("--grid", o.grid, "grid override NxM (radial x circumferential nodes)");
        sub->add_option("--profile", o.profile, "resolution profile: full or ci")
            ->check(CLI::IsMember({"full", "ci"}));
        sub->add_option("--seed", o.seed, "reserved; recorded in the config hash only")
            ->each([&](const std::string&) { o.seed_given = true; });
        sub->add_flag("-q,--quiet", o.quiet, "no progress output");
    };
    const char* cfg_help = "case config file";
    auto* sim = app.add_subcommand("simulate", "run the flow solver and record the pressure ensemble");
    common(sim, true, cfg_help);
    auto* pod = app.add_subcommand("pod", "compute the POD basis of a recorded ensemble");
    common(pod, true, cfg_help);
    auto* pmd = app.add_subcommand("pmd", "surface modes, force decomposition and case metrics");
    common(pmd, true, cfg_help);
    auto* all = app.add_subcommand("all", "all stages for a config, or a suite for a directory of configs");
    common(all, true, "case config file or directory of *.cfg");
    all->add_option("-j,--jobs", o.jobs, "concurrent cases when running a directory")->check(CLI::PositiveNumber);
    auto* report = app.add_subcommand("report", "cross-case regime summary from completed case directories");
    report->add_option("--out", o.out, "output root (default $PMDFLOW_OUT or ./results)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (report->parsed()) {
        const pmdflow_status s = pmdflow_report(o.out.c_str());
        if (s != PMDFLOW_OK) return report_failure(s);
        std::printf("%s\n", (std::filesystem::path(o.out) / "regime_summary.csv").c_str());
        return 0;
    }
    if (all->parsed()) return std::filesystem::is_directory(o.target) ? run_suite(o) : run_single(o, "all");
    for (auto* sub : {sim, pod, pmd})
        if (sub->parsed()) return run_single(o, sub->get_name());
    return 2;
}
