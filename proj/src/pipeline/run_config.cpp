#include "pipeline/run_config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmdflow::pipeline {

namespace {

// Calls f(name, member) for every configurable field, in canonical order.
template <class RC, class F>
void visit_fields(RC& rc, F&& f) {
    f("case_id", rc.case_id);
    f("reynolds", rc.ns.reynolds);
    f("amplitude_ratio", rc.ns.amplitude_ratio);
    f("freq_ratio", rc.ns.freq_ratio);
    f("f_shed_ref", rc.ns.f_shed_ref);
    f("dt", rc.ns.dt);
    f("n_steps", rc.ns.n_steps);
    f("transient_cycles", rc.ns.transient_cycles);
    f("perturbation_amplitude", rc.ns.perturbation_amplitude);
    f("perturbation_duration", rc.ns.perturbation_duration);
    f("poisson_tol", rc.ns.poisson_tol);
    f("divergence_tol", rc.ns.divergence_tol);
    f("n_radial", rc.n_radial);
    f("n_circ", rc.n_circ);
    f("domain_diameter", rc.domain_diameter);
    f("wall_spacing", rc.wall_spacing);
    f("snaps_per_cycle", rc.snaps_per_cycle);
    f("record_cycles", rc.record_cycles);
    f("n_modes", rc.n_modes);
    f("weighted_pod", rc.weighted_pod);
    f("period_window_cycles", rc.period_window_cycles);
    f("spectrum_cycles", rc.spectrum_cycles);
    f("stats_cycles", rc.stats_cycles);
    f("checkpoint_interval", rc.checkpoint_interval);
    f("seed", rc.seed);
    f("profile", rc.profile);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& where, const std::string& key, const std::string& value,
                            const char* what) {
    fail(ErrorCode::Config, where + ": field '" + key + "' expects " + what + " (got '" + value + "')");
}

struct Assign {
    const std::string& key;
    const std::string& value;
    const std::string& where;

    void operator()(double& dst) const {
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(value.c_str(), &end);
        if (value.empty() || *end != '\0' || errno == ERANGE) bad_value(where, key, value, "a number");
        dst = v;
    }
    void operator()(int& dst) const {
        std::int64_t v = 0;
        (*this)(v);
        if (v < INT32_MIN || v > INT32_MAX) bad_value(where, key, value, "a 32-bit integer");
        dst = static_cast<int>(v);
    }
    void operator()(std::int64_t& dst) const {
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(value.c_str(), &end, 10);
        if (value.empty() || *end != '\0' || errno == ERANGE) bad_value(where, key, value, "an integer");
        dst = v;
    }
    void operator()(std::uint64_t& dst) const {
        char* end = nullptr;
        errno = 0;
        if (!value.empty() && value[0] == '-') bad_value(where, key, value, "a non-negative integer");
        const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
        if (value.empty() || *end != '\0' || errno == ERANGE) bad_value(where, key, value, "a non-negative integer");
        dst = v;
    }
    void operator()(bool& dst) const {
        if (value == "true" || value == "1") dst = true;
        else if (value == "false" || value == "0") dst = false;
        else bad_value(where, key, value, "true or false");
    }
    void operator()(std::string& dst) const { dst = value; }
};

std::string show(double v) { return csv::format(v); }
std::string show(int v) { return std::to_string(v); }
std::string show(std::int64_t v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }

void require(bool ok, const char* field, const std::string& rule) {
    if (!ok) fail(ErrorCode::Config, std::string("field '") + field + "' " + rule);
}

}  // namespace

void RunConfig::validate() const {
    require(!case_id.empty(), "case_id", "must not be empty");
    for (char c : case_id)
        require(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.', "case_id",
                "may only contain letters, digits, '.', '_' and '-' (got '" + case_id + "')");
    try {
        ns.validate();
        grid_spec().validate();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Validation) throw;
        fail(ErrorCode::Config, e.what());
    }
    require(wall_spacing > 0.0 && wall_spacing < 0.5 * (domain_diameter - 1.0), "wall_spacing",
            "must be > 0 and smaller than the radial extent");
    require(snaps_per_cycle >= 2, "snaps_per_cycle", "must be >= 2");
    require(record_cycles >= 1, "record_cycles", "must be >= 1");
    require(n_modes >= 1, "n_modes", "must be >= 1");
    require(n_modes < snaps_per_cycle * record_cycles, "n_modes", "must be smaller than the snapshot count");
    require(period_window_cycles >= 2.0, "period_window_cycles", "must be >= 2");
    require(period_window_cycles <= ns.transient_cycles, "period_window_cycles", "must not exceed transient_cycles");
    require(spectrum_cycles >= 2.0, "spectrum_cycles", "must be >= 2");
    require(stats_cycles >= 1.0, "stats_cycles", "must be >= 1");
    require(checkpoint_interval > 0.0, "checkpoint_interval", "must be > 0");
    require(profile == "full" || profile == "ci", "profile", "must be 'full' or 'ci' (got '" + profile + "')");
}

grid::GridSpec RunConfig::grid_spec() const {
    grid::GridSpec g;
    g.n_radial = n_radial;
    g.n_circ = n_circ;
    g.domain_diameter = domain_diameter;
    g.cylinder_diameter = 1.0;
    if (n_radial >= 2 && domain_diameter > 1.0 && wall_spacing > 0.0)
        g.stretch_ratio = grid::GridSpec::stretch_for_wall_spacing(n_radial, domain_diameter, 1.0, wall_spacing);
    return g;
}

RunConfig parse_config_text(const std::string& text, const std::string& default_case_id, const std::string& origin) {
    RunConfig rc;
    rc.case_id = default_case_id;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorCode::Config, where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (auto it = seen.find(key); it != seen.end())
            fail(ErrorCode::Config, where + ": field '" + key + "' repeats line " + std::to_string(it->second));
        bool known = false;
        visit_fields(rc, [&](const char* name, auto& member) {
            if (key != name) return;
            known = true;
            Assign{key, value, where}(member);
        });
        if (!known) fail(ErrorCode::Config, where + ": unknown field '" + key + "'");
        seen[key] = lineno;
    }
    try {
        rc.validate();
    } catch (const Error& e) {
        fail(ErrorCode::Config, origin + ": " + e.what());
    }
    return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Config, "cannot read config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.stem().string(), path.string());
}

void apply_profile(RunConfig& rc, const std::string& profile) {
    if (profile == "full") {
        rc.profile = "full";
    } else if (profile == "ci") {
        rc.profile = "ci";
        rc.n_radial = 97;
        rc.n_circ = 129;
        rc.wall_spacing = 0.01;
        rc.ns.dt *= 2.0;
    } else {
        fail(ErrorCode::Config, "unknown profile '" + profile + "' (expected 'full' or 'ci')");
    }
    rc.validate();
}

void apply_grid_override(RunConfig& rc, const std::string& spec) {
    const auto x = spec.find_first_of("xX");
    int nr = 0, nc = 0;
    try {
        if (x == std::string::npos) throw std::invalid_argument("no separator");
        std::size_t a = 0, b = 0;
        nr = std::stoi(spec.substr(0, x), &a);
        nc = std::stoi(spec.substr(x + 1), &b);
        if (a != x || b != spec.size() - x - 1) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
        fail(ErrorCode::Config, "--grid expects NxM, e.g. 97x129 (got '" + spec + "')");
    }
    rc.n_radial = nr;
    rc.n_circ = nc;
    rc.validate();
}

std::string canonical_text(const RunConfig& rc) {
    std::string out;
    visit_fields(rc, [&](const char* name, const auto& member) {
        out += name;
        out += " = ";
        out += show(member);
        out += '\n';
    });
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const RunConfig& rc) { return fnv1a_hex(canonical_text(rc)); }

std::string provenance(const RunConfig& rc) {
    return std::string("pmdflow ") + kToolkitVersion + " case=" + rc.case_id + " config_hash=" + config_hash(rc);
}

}  // namespace pmdflow::pipeline
