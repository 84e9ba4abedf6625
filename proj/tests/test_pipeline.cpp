#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "pipeline/pipeline.hpp"

using namespace pmdflow;
using namespace pmdflow::pipeline;
namespace fs = std::filesystem;

namespace {

// Sheds within a few seconds of wall time; every knob scaled down.
const char* kTiny = R"(reynolds = 200
n_radial = 49
n_circ = 65
domain_diameter = 20
wall_spacing = 0.02
dt = 0.02
transient_cycles = 12
period_window_cycles = 4
spectrum_cycles = 6
stats_cycles = 3
snaps_per_cycle = 8
record_cycles = 2
n_modes = 4
checkpoint_interval = 10
)";

std::string tiny(const std::string& extra = "") { return std::string(kTiny) + extra; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pmdflow_test_pipeline_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return static_cast<ErrorCode>(0);
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

const std::vector<std::string> kOutputs = {
    "forces.csv",      "ensemble.pmd",     "snapshot_0000.csv", "pod.bin",           "pod_spectrum.csv",
    "pod_temporal.csv", "pod_mean.csv",    "ldc_ddc.csv",       "surface_modes.csv", "modal_forces.csv",
    "lift_spectrum.csv", "case_metrics.json", "manifest.json"};

struct Interrupt {};

}  // namespace

TEST_CASE("config parsing") {
    const auto rc = parse_config_text("# comment\nreynolds = 150  # trailing\n\ndt=0.01\n", "mycase");
    CHECK(rc.case_id == "mycase");
    CHECK(rc.ns.reynolds == 150.0);
    CHECK(rc.ns.dt == 0.01);
    CHECK(rc.n_radial == 193);

    CHECK(code_of([] { parse_config_text("reynolds = -200\n", "x"); }) == ErrorCode::Config);
    CHECK(message_of([] { parse_config_text("reynolds = -200\n", "x"); }).find("reynolds") != std::string::npos);
    CHECK(message_of([] { parse_config_text("bogus = 1\n", "x", "a.cfg"); }).find("a.cfg:1") != std::string::npos);
    CHECK(message_of([] { parse_config_text("dt = 0.1\ndt = 0.2\n", "x"); }).find("dt") != std::string::npos);
    CHECK(code_of([] { parse_config_text("dt 0.1\n", "x"); }) == ErrorCode::Config);
    CHECK(message_of([] { parse_config_text("n_radial = many\n", "x"); }).find("n_radial") != std::string::npos);
    CHECK(message_of([] { parse_config_text("n_modes = 500\n", "x"); }).find("n_modes") != std::string::npos);
    CHECK(code_of([] { parse_config_text("weighted_pod = maybe\n", "x"); }) == ErrorCode::Config);
    CHECK(code_of([] { parse_config_text("case_id = has space\n", "x"); }) == ErrorCode::Config);
    CHECK(code_of([] { load_config("/nonexistent/dir/case.cfg"); }) != static_cast<ErrorCode>(0));
}

TEST_CASE("profiles and grid overrides") {
    auto rc = parse_config_text("dt = 0.005\n", "x");
    const double ptol = rc.ns.poisson_tol, dtol = rc.ns.divergence_tol;
    apply_profile(rc, "full");
    CHECK(rc.n_radial == 193);
    apply_profile(rc, "ci");
    CHECK(rc.n_radial == 97);
    CHECK(rc.n_circ == 129);
    CHECK(rc.wall_spacing == 0.01);
    CHECK(rc.ns.dt == 0.01);
    CHECK(rc.profile == "ci");
    // Tolerances are not part of the profile.
    CHECK(rc.ns.poisson_tol == ptol);
    CHECK(rc.ns.divergence_tol == dtol);
    CHECK(code_of([&] { apply_profile(rc, "fast"); }) == ErrorCode::Config);

    apply_grid_override(rc, "65x97");
    CHECK(rc.n_radial == 65);
    CHECK(rc.n_circ == 97);
    for (const char* bad : {"97by129", "x", "65x", "2x97", "-5x9"})
        CHECK(code_of([&] { apply_grid_override(rc, bad); }) == ErrorCode::Config);
}

TEST_CASE("config hash and provenance") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");

    const auto a = parse_config_text("reynolds = 200\ndt = 0.01\n", "c");
    const auto b = parse_config_text("# same case\ndt=0.01\n  reynolds   =   200.0\n", "c");
    const auto c = parse_config_text("reynolds = 200\ndt = 0.02\n", "c");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
    // Canonical text parses back to the same configuration.
    CHECK(config_hash(parse_config_text(canonical_text(a), "c")) == config_hash(a));
    CHECK(provenance(a) == "pmdflow " + std::string(kToolkitVersion) + " case=c config_hash=" + config_hash(a));
}

TEST_CASE("period measurement") {
    std::vector<double> t, cl;
    for (int k = 0; k < 20000; ++k) {
        t.push_back(0.01 * k);
        // Wiggles near the mean must not count as extra cycles.
        cl.push_back(0.3 + std::sin(2 * std::numbers::pi * t.back() / 5.1) + 0.05 * std::sin(2 * std::numbers::pi * t.back() / 0.37));
    }
    CHECK(measure_period(t, cl, 50.0, 199.0) == doctest::Approx(5.1).epsilon(1e-3));
    CHECK(code_of([&] { measure_period(t, cl, 50.0, 52.0); }) == ErrorCode::Validation);
    std::vector<double> flat(t.size(), 1.0);
    CHECK(code_of([&] { measure_period(t, flat, 0.0, 199.0); }) == ErrorCode::Validation);
}

TEST_CASE("force statistics over whole cycles") {
    const fs::path dir = scratch("stats");
    const double f = 0.2;
    {
        csv::Writer out(dir / "forces.csv", "test");
        out.header({"t", "cl_p", "cl_v", "cl", "cd_p", "cd_v", "cd", "y", "ydot", "yddot"});
        for (int k = 0; k <= 20000; ++k) {
            const double t = 0.005 * k, s = std::sin(2 * std::numbers::pi * f * t);
            out.row({t, 0.9 * s, 0.1 * s, s, 1.0 + 0.05 * std::sin(4 * std::numbers::pi * f * t), 0.3, 1.3, 0, 0, 0});
        }
        out.close();
    }
    const auto s = force_statistics(csv::read(dir / "forces.csv"), 5.0, 10.0);
    // The window opens at an upward crossing, which is not armed yet.
    CHECK(s.n_cycles >= 8);
    CHECK(s.strouhal == doctest::Approx(f).epsilon(1e-6));
    CHECK(s.cd_mean == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(s.cd_p_mean == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(s.cl_amplitude == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(s.cl_p_amplitude == doctest::Approx(0.9).epsilon(1e-4));
}

TEST_CASE("empty config directory") {
    const fs::path dir = scratch("empty");
    RunOptions opt;
    opt.out_root = dir / "out";
    CHECK(code_of([&] { run_suite(dir, 1, opt); }) == ErrorCode::NoConfigs);
    CHECK(code_of([&] { write_report(dir); }) == ErrorCode::MissingCase);
    CHECK(code_of([&] { parse_stage("mesh"); }) == ErrorCode::Config);
}

TEST_CASE("stage order is enforced") {
    const fs::path root = scratch("order");
    const auto rc = parse_config_text(tiny(), "order");
    RunOptions opt;
    opt.out_root = root;
    const std::string msg = message_of([&] { run_stage(rc, Stage::Pod, opt); });
    CHECK(msg.find("stage 'pod'") != std::string::npos);
    CHECK(msg.find("order") != std::string::npos);
}

TEST_CASE("end-to-end case is deterministic and resumable") {
    const fs::path root = scratch("e2e");
    const auto rc = parse_config_text(tiny("amplitude_ratio = 0.1\nfreq_ratio = 1.2\n"), "tiny");

    RunOptions a;
    a.out_root = root / "a";
    const RunManifest m = run_case(rc, a);
    const fs::path da = case_directory(a, rc);
    CHECK(m.stages.at("simulate"));
    CHECK(m.stages.at("pod"));
    CHECK(m.stages.at("pmd"));
    CHECK(m.plan.n_snaps() == 16);
    for (const auto& f : kOutputs) REQUIRE(fs::exists(da / f));
    const std::string line = "# " + provenance(rc);
    for (const auto& f : kOutputs)
        if (fs::path(f).extension() == ".csv") CHECK(slurp(da / f).rfind(line + "\n", 0) == 0);
    const auto mread = read_manifest(da);
    CHECK(mread.config_hash == config_hash(rc));
    CHECK(mread.steps == m.steps);

    SUBCASE("a second run is byte-identical") {
        RunOptions b;
        b.out_root = root / "b";
        run_case(rc, b);
        for (const auto& f : kOutputs) CHECK_MESSAGE(slurp(da / f) == slurp(case_directory(b, rc) / f), f);
    }
    SUBCASE("an interrupted run resumes to the same output") {
        RunOptions c;
        c.out_root = root / "c";
        c.log = [](const std::string& msg) {
            if (msg.find("transient 59%") != std::string::npos) throw Interrupt{};
        };
        CHECK_THROWS_AS(run_case(rc, c), Interrupt);
        REQUIRE(fs::exists(case_directory(c, rc) / "checkpoint.bin"));
        std::vector<std::string> log;
        c.log = [&](const std::string& msg) { log.push_back(msg); };
        c.resume = true;
        run_case(rc, c);
        bool resumed = false;
        for (const auto& l : log) resumed = resumed || l.rfind("resuming at", 0) == 0;
        CHECK(resumed);
        for (const auto& f : kOutputs) CHECK_MESSAGE(slurp(da / f) == slurp(case_directory(c, rc) / f), f);
    }
    SUBCASE("resuming a finished case skips every stage") {
        const auto before = fs::last_write_time(da / "forces.csv");
        std::vector<std::string> log;
        a.resume = true;
        a.log = [&](const std::string& msg) { log.push_back(msg); };
        run_case(rc, a);
        REQUIRE(log.size() == 3);
        for (const auto& l : log) CHECK(l.find("already complete") != std::string::npos);
        CHECK(fs::last_write_time(da / "forces.csv") == before);
    }
    SUBCASE("a changed config is not resumed from stale output") {
        const auto rc2 = parse_config_text(tiny("amplitude_ratio = 0.1\nfreq_ratio = 1.2\nperturbation_amplitude = 0.04\n"), "tiny");
        std::vector<std::string> log;
        a.resume = true;
        a.log = [&](const std::string& msg) { log.push_back(msg); };
        run_case(rc2, a);
        for (const auto& l : log) CHECK(l.find("already complete") == std::string::npos);
        CHECK(read_manifest(da).config_hash == config_hash(rc2));
    }
}

TEST_CASE("suite of four regimes with two workers") {
    const fs::path root = scratch("suite");
    const fs::path cfg = root / "configs";
    fs::create_directories(cfg);
    const std::pair<const char*, const char*> cases[] = {
        {"stationary", ""},
        {"presync", "amplitude_ratio = 0.1\nfreq_ratio = 0.8\n"},
        {"sync", "amplitude_ratio = 0.1\nfreq_ratio = 0.97\n"},
        {"postsync", "amplitude_ratio = 0.1\nfreq_ratio = 1.2\n"}};
    for (const auto& [name, extra] : cases) std::ofstream(cfg / (std::string(name) + ".cfg")) << tiny(extra);
    std::ofstream(cfg / "notes.txt") << "not a config\n";

    RunOptions opt;
    opt.out_root = root / "out";
    const SuiteResult r = run_suite(cfg, 2, opt);
    CHECK(r.failures() == 0);
    REQUIRE(r.report_written);
    REQUIRE(r.cases.size() == 4);
    const csv::Table t = csv::read(opt.out_root / "regime_summary.csv");
    CHECK(t.cells.size() == 4);
    std::vector<std::string> regimes;
    for (const auto& row : t.cells) regimes.push_back(row[static_cast<std::size_t>(t.column("regime"))]);
    for (const char* want : {"stationary", "pre-synchronous", "synchronous", "post-synchronous"})
        CHECK(std::find(regimes.begin(), regimes.end(), want) != regimes.end());

    SUBCASE("a bad config fails only its own case") {
        std::ofstream(cfg / "broken.cfg") << "reynolds = -1\n";
        const SuiteResult r2 = run_suite(cfg, 2, opt);
        CHECK(r2.failures() == 1);
        for (const auto& c : r2.cases)
            if (!c.ok) CHECK(c.code == ErrorCode::Config);
    }
    SUBCASE("duplicate case ids are rejected") {
        std::ofstream(cfg / "zcopy.cfg") << "case_id = sync\n" << tiny();
        const SuiteResult r2 = run_suite(cfg, 1, opt);
        CHECK(r2.failures() >= 1);
    }
}
