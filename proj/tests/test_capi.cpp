// Exercises the shared library through its C header only.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pmdflow/pmdflow.h"

namespace fs = std::filesystem;

namespace {

struct ConfigGuard {
    pmdflow_config* p = nullptr;
    ~ConfigGuard() { pmdflow_config_free(p); }
};

struct PodGuard {
    pmdflow_pod* p = nullptr;
    ~PodGuard() { pmdflow_pod_free(p); }
};

}  // namespace

TEST_CASE("status names and exit codes") {
    CHECK(std::string(pmdflow_version()) == "1.0.0");
    CHECK(std::string(pmdflow_status_name(PMDFLOW_OK)) == "ok");
    CHECK(pmdflow_exit_code(PMDFLOW_OK) == 0);
    CHECK(pmdflow_exit_code(PMDFLOW_E_CONFIG) == 2);
    CHECK(pmdflow_exit_code(PMDFLOW_E_ARGUMENT) == 2);
    for (int s = PMDFLOW_E_VALIDATION; s <= PMDFLOW_E_INTERNAL; ++s)
        if (s != PMDFLOW_E_CONFIG) CHECK(pmdflow_exit_code(static_cast<pmdflow_status>(s)) == 1);
    for (int s = PMDFLOW_OK; s <= PMDFLOW_E_ARGUMENT; ++s)
        CHECK(std::strlen(pmdflow_status_name(static_cast<pmdflow_status>(s))) > 0);
}

TEST_CASE("config errors carry the field name") {
    ConfigGuard c;
    CHECK(pmdflow_config_parse("reynolds = -200\n", "bad", &c.p) == PMDFLOW_E_CONFIG);
    CHECK(c.p == nullptr);
    CHECK(std::string(pmdflow_last_error()).find("reynolds") != std::string::npos);
    CHECK(pmdflow_config_load("/nonexistent/x.cfg", &c.p) != PMDFLOW_OK);
    CHECK(pmdflow_config_parse(nullptr, "x", &c.p) == PMDFLOW_E_ARGUMENT);
    CHECK(pmdflow_config_parse("dt = 0.01\n", "x", nullptr) == PMDFLOW_E_ARGUMENT);
}

TEST_CASE("config accessors") {
    ConfigGuard c;
    REQUIRE(pmdflow_config_parse("dt = 0.005\n", "acase", &c.p) == PMDFLOW_OK);
    size_t needed = 0;
    CHECK(pmdflow_config_case_id(c.p, nullptr, 0, &needed) == PMDFLOW_OK);
    CHECK(pmdflow_config_case_id(c.p, nullptr, 8, &needed) == PMDFLOW_E_ARGUMENT);
    CHECK(needed == 6);
    char small[3];
    CHECK(pmdflow_config_case_id(c.p, small, sizeof small, &needed) == PMDFLOW_E_ARGUMENT);
    char buf[64];
    REQUIRE(pmdflow_config_case_id(c.p, buf, sizeof buf, nullptr) == PMDFLOW_OK);
    CHECK(std::string(buf) == "acase");

    char h1[17], h2[17];
    REQUIRE(pmdflow_config_hash(c.p, h1, sizeof h1, nullptr) == PMDFLOW_OK);
    CHECK(std::strlen(h1) == 16);
    REQUIRE(pmdflow_config_set_profile(c.p, "ci") == PMDFLOW_OK);
    REQUIRE(pmdflow_config_hash(c.p, h2, sizeof h2, nullptr) == PMDFLOW_OK);
    CHECK(std::string(h1) != std::string(h2));

    CHECK(pmdflow_config_set_profile(c.p, "turbo") == PMDFLOW_E_CONFIG);
    CHECK(pmdflow_config_set_grid(c.p, "97by129") == PMDFLOW_E_CONFIG);
    CHECK(pmdflow_config_set_grid(c.p, "65x97") == PMDFLOW_OK);
    CHECK(pmdflow_config_set_seed(c.p, 42) == PMDFLOW_OK);

    REQUIRE(pmdflow_config_text(c.p, nullptr, 0, &needed) == PMDFLOW_OK);
    std::string text(needed, '\0');
    REQUIRE(pmdflow_config_text(c.p, text.data(), text.size(), nullptr) == PMDFLOW_OK);
    CHECK(text.find("n_radial = 65") != std::string::npos);
    CHECK(text.find("dt = 0.01") != std::string::npos);
    CHECK(text.find("seed = 42") != std::string::npos);

    CHECK(pmdflow_config_set_profile(nullptr, "ci") == PMDFLOW_E_ARGUMENT);
    CHECK(pmdflow_run_stage(c.p, "mesh", "/tmp", 0, nullptr, nullptr) == PMDFLOW_E_CONFIG);
}

TEST_CASE("suite and report errors") {
    const fs::path dir = fs::temp_directory_path() / "pmdflow_test_capi_empty";
    fs::remove_all(dir);
    fs::create_directories(dir);
    int failed = -1;
    CHECK(pmdflow_run_suite(dir.c_str(), (dir / "out").c_str(), 1, 0, nullptr, nullptr, nullptr, nullptr, &failed) ==
          PMDFLOW_E_NO_CONFIGS);
    CHECK(std::string(pmdflow_last_error()).find("no configs found") != std::string::npos);
    CHECK(pmdflow_run_suite(dir.c_str(), (dir / "out").c_str(), 0, 0, nullptr, nullptr, nullptr, nullptr, &failed) ==
          PMDFLOW_E_CONFIG);
    CHECK(pmdflow_report(dir.c_str()) == PMDFLOW_E_MISSING_CASE);
    CHECK(pmdflow_report(nullptr) == PMDFLOW_E_ARGUMENT);
    fs::remove_all(dir);
}

TEST_CASE("POD through the C interface") {
    const int np = 40, ns = 12;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::vector<double> data(static_cast<std::size_t>(np * ns)), w(np);
    for (double& v : data) v = nd(rng);
    for (int i = 0; i < np; ++i) w[i] = 0.5 + 0.01 * i;

    PodGuard p;
    REQUIRE(pmdflow_pod_compute(data.data(), np, ns, w.data(), ns - 1, &p.p) == PMDFLOW_OK);
    CHECK(pmdflow_pod_n_modes(p.p) == ns - 1);
    CHECK(pmdflow_pod_n_points(p.p) == np);
    CHECK(pmdflow_pod_n_snaps(p.p) == ns);

    std::vector<double> lam(ns), modes(static_cast<std::size_t>(np * (ns - 1))), a(static_cast<std::size_t>(ns * (ns - 1))),
        mean(np);
    REQUIRE(pmdflow_pod_eigenvalues(p.p, lam.data(), lam.size()) == PMDFLOW_OK);
    REQUIRE(pmdflow_pod_modes(p.p, modes.data(), modes.size()) == PMDFLOW_OK);
    REQUIRE(pmdflow_pod_temporal(p.p, a.data(), a.size()) == PMDFLOW_OK);
    REQUIRE(pmdflow_pod_mean(p.p, mean.data(), mean.size()) == PMDFLOW_OK);
    CHECK(pmdflow_pod_mean(p.p, mean.data(), mean.size() - 1) == PMDFLOW_E_ARGUMENT);

    for (int i = 1; i < ns; ++i) CHECK(lam[i] <= lam[i - 1]);
    for (int i = 0; i < ns - 1; ++i)
        for (int j = 0; j < ns - 1; ++j) {
            double g = 0.0;
            for (int r = 0; r < np; ++r) g += modes[i * np + r] * w[r] * modes[j * np + r];
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-10);
        }
    // Every snapshot is rebuilt by the mean plus all modes.
    double err = 0.0;
    for (int k = 0; k < ns; ++k)
        for (int r = 0; r < np; ++r) {
            double v = mean[r];
            for (int i = 0; i < ns - 1; ++i) v += a[i * ns + k] * modes[i * np + r];
            err = std::max(err, std::abs(v - data[k * np + r]));
        }
    CHECK(err < 1e-10);

    PodGuard q;
    CHECK(pmdflow_pod_compute(data.data(), np, ns, nullptr, ns + 3, &q.p) != PMDFLOW_OK);
    CHECK(q.p == nullptr);
    CHECK(pmdflow_pod_compute(nullptr, np, ns, nullptr, 2, &q.p) == PMDFLOW_E_ARGUMENT);
    CHECK(pmdflow_pod_compute(data.data(), 0, ns, nullptr, 2, &q.p) == PMDFLOW_E_ARGUMENT);
    CHECK(pmdflow_pod_n_modes(nullptr) == 0);
    pmdflow_pod_free(nullptr);
    pmdflow_config_free(nullptr);
}
