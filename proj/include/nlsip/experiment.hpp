#ifndef NLSIP_EXPERIMENT_HPP
#define NLSIP_EXPERIMENT_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blowup.hpp"
#include "error.hpp"
#include "evolution.hpp"
#include "field_io.hpp"
#include "ground_state.hpp"
#include "hardy_probe.hpp"
#include "parallel.hpp"
#include "profile_decomposition.hpp"
#include "translated_bump.hpp"

namespace nlsip {

inline constexpr int config_schema_version = 1;

inline const std::vector<std::string>& experiment_tags() {
    static const std::vector<std::string> tags = {"ground-state",        "gn-sweep",     "evolve",
                                                  "minimal-mass-blowup", "profile-demo", "virial-check"};
    return tags;
}

// ------------------------------------------------------------------ config --

struct GridConfig {
    double r_max = 30.0;
    std::size_t n = 4000;
    GridScheme scheme = GridScheme::graded;
    std::optional<double> r_min;

    GridPtr build(const ProblemParams& p) const { return RadialGrid::build(p, r_max, n, scheme, r_min); }
};

struct HardyProbeConfig {
    std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    double log_width = 8.0;
    std::size_t n = 4000;
    double r_min = 1e-12;
    double tolerance = 0.1; ///< final |ratio - λ| / λ
};

struct TranslatedBumpConfig {
    std::vector<double> shifts{0.0, 4.0, 8.0, 12.0};
    TranslatedBumpOptions options{};
    double max_gap = 0.05;
};

struct EvolveConfig {
    double dt = 1e-3;
    double t_end = 1.0;
    std::size_t snapshot_stride = 100;
    bool check_dt = true;
    double mass_tolerance = 1e-8;
    double energy_tolerance = 1e-6;
};

struct BlowupConfig {
    double T = 1.0;
    double lambda = 1.0;
    double theta = 0.0;
    double dt = 2.5e-4;
    std::optional<double> t_end;                 ///< defaults to T
    std::size_t snapshot_stride = 100;
    bool check_dt = true;
    double threshold_factor = 8.0;               ///< grad_norm stop at this multiple of the initial value
    std::vector<double> compare_times{0.5, 0.8}; ///< in units of T
    std::vector<double> compare_tolerances{0.01, 0.05};
    double rate_tolerance = 0.02;
    double scan_time = 0.95;                     ///< in units of T
    double scan_fraction = 0.99;
    std::vector<double> banica_radii{0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<double> banica_chirps{0.0, 0.1, 0.5, -0.3};
    std::size_t banica_stride = 3;               ///< every k-th retained snapshot enters the matrix
    double banica_slack = 1e-6;
};

struct VirialConfig {
    double T = 1.0;
    double lambda = 1.0;
    double theta = 0.0;
    double dt = 2.5e-4;
    double t_end = 0.5;
    std::size_t snapshot_stride = 100;
    bool check_dt = true;
    double tolerance = 0.01;
};

struct HardyCrossConfig {
    std::vector<double> case1_shifts{4.0, 8.0, 16.0};
    std::vector<double> case2_frequencies{4.0, 8.0, 16.0};
};

struct ProfileDemoConfig {
    ProfileSuite suite = default_profile_suite();
    HardyCrossConfig hardy_cross{};
    double recovery_tolerance = 0.02;
    double expansion_tolerance = 0.01;
    double remainder_tolerance = 0.1;
};

struct SweepConfig {
    std::string axis;
    std::vector<double> values;
};

struct ExperimentConfig {
    int schema_version = config_schema_version;
    std::string experiment;
    ProblemParams params{3, 0.0};
    GridConfig grid{};
    GroundStateMethod method = GroundStateMethod::shooting;
    GroundStateOptions ground_state{};
    double residual_tolerance = 1e-6;
    double pohozaev_tolerance = 1e-4;
    double gn_tolerance = 1e-4;
    std::optional<HardyProbeConfig> hardy_probe;
    std::optional<TranslatedBumpConfig> translated_bump;
    EvolveConfig evolve{};
    BlowupConfig blowup{};
    VirialConfig virial{};
    ProfileDemoConfig profile{};
    SweepConfig sweep{};
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

namespace detail {

/// Typed access to a JSON object with error messages naming the field path.
class ConfigReader {
public:
    ConfigReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(errc::config, where() + "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    ConfigReader section(const std::string& key) const {
        if (!has(key)) fail(errc::config, join(key) + ": required section is missing");
        return ConfigReader(j_.at(key), join(key));
    }

    template <typename T>
    T get(const std::string& key, T fallback) const {
        return has(key) ? need<T>(key) : fallback;
    }

    template <typename T>
    T need(const std::string& key) const {
        if (!has(key)) fail(errc::config, join(key) + ": required field is missing");
        const auto& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::invalid_argument("expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
                if constexpr (std::is_unsigned_v<T>)
                    if (v.get<long long>() < 0) throw std::invalid_argument("expected a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!v.is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::invalid_argument("expected a string");
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                if (!v.is_array()) throw std::invalid_argument("expected an array of numbers");
                for (const auto& x : v)
                    if (!x.is_number()) throw std::invalid_argument("expected an array of numbers");
            }
            return v.get<T>();
        } catch (const std::invalid_argument& e) {
            fail(errc::config, join(key) + ": " + e.what());
        } catch (const json::exception& e) {
            fail(errc::config, join(key) + ": " + e.what());
        }
    }

    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "" : path_ + ": "; }
    const json& j_;
    std::string path_;
};

inline void positive(double v, const std::string& path) {
    if (!(std::isfinite(v) && v > 0.0)) fail(errc::config, path + ": must be positive");
}

template <typename F>
auto with_context(const std::string& context, F&& f) {
    try {
        return f();
    } catch (const error& e) {
        throw error(e.code(), context + ": " + e.detail());
    }
}

} // namespace detail

/// Parses and validates a config document; every failure is a config error
/// naming the offending field.
inline ExperimentConfig parse_config(const json& doc) {
    using detail::positive;
    const detail::ConfigReader r(doc, "");
    ExperimentConfig c;
    c.schema_version = r.need<int>("schema_version");
    if (c.schema_version != config_schema_version)
        fail(errc::config, "schema_version: unsupported version " + std::to_string(c.schema_version));
    c.experiment = r.need<std::string>("experiment");
    if (std::find(experiment_tags().begin(), experiment_tags().end(), c.experiment) == experiment_tags().end())
        fail(errc::config, "experiment: unknown tag '" + c.experiment + "'");

    const auto p = r.section("params");
    c.params = {p.need<int>("d"), p.need<double>("c")};
    try {
        validate(c.params);
    } catch (const error& e) {
        fail(errc::config, "params: " + e.detail());
    }

    if (r.has("grid")) {
        const auto g = r.section("grid");
        c.grid.r_max = g.get("r_max", c.grid.r_max);
        c.grid.n = g.get("n", c.grid.n);
        try {
            c.grid.scheme = parse_scheme(g.get<std::string>("scheme", std::string(to_string(c.grid.scheme))));
        } catch (const error& e) {
            fail(errc::config, "grid.scheme: " + e.detail());
        }
        if (g.has("r_min")) c.grid.r_min = g.need<double>("r_min");
        positive(c.grid.r_max, "grid.r_max");
        if (c.grid.r_min) positive(*c.grid.r_min, "grid.r_min");
    }
    if (r.has("ground_state")) {
        const auto g = r.section("ground_state");
        try {
            c.method = parse_method(g.get<std::string>("method", std::string(to_string(c.method))));
        } catch (const error& e) {
            fail(errc::config, "ground_state.method: " + e.detail());
        }
        c.ground_state.tol = g.get("tol", c.ground_state.tol);
        c.ground_state.max_newton = g.get("max_newton", c.ground_state.max_newton);
        positive(c.ground_state.tol, "ground_state.tol");
    }
    if (r.has("tolerances")) {
        const auto t = r.section("tolerances");
        c.residual_tolerance = t.get("residual", c.residual_tolerance);
        c.pohozaev_tolerance = t.get("pohozaev", c.pohozaev_tolerance);
        c.gn_tolerance = t.get("gn_constant", c.gn_tolerance);
        positive(c.residual_tolerance, "tolerances.residual");
        positive(c.pohozaev_tolerance, "tolerances.pohozaev");
        positive(c.gn_tolerance, "tolerances.gn_constant");
    }
    if (r.has("hardy_probe")) {
        const auto h = r.section("hardy_probe");
        HardyProbeConfig hp;
        hp.eps = h.get("eps", hp.eps);
        hp.log_width = h.get("log_width", hp.log_width);
        hp.n = h.get("n", hp.n);
        hp.r_min = h.get("r_min", hp.r_min);
        hp.tolerance = h.get("tolerance", hp.tolerance);
        if (hp.eps.empty()) fail(errc::config, "hardy_probe.eps: needs at least one value");
        positive(hp.log_width, "hardy_probe.log_width");
        positive(hp.r_min, "hardy_probe.r_min");
        positive(hp.tolerance, "hardy_probe.tolerance");
        c.hardy_probe = hp;
    }
    if (r.has("translated_bump")) {
        const auto t = r.section("translated_bump");
        TranslatedBumpConfig tb;
        tb.shifts = t.get("shifts", tb.shifts);
        tb.options.half_width = t.get("half_width", tb.options.half_width);
        tb.options.cells = t.get("cells", tb.options.cells);
        tb.options.edge_tolerance = t.get("edge_tolerance", tb.options.edge_tolerance);
        tb.max_gap = t.get("max_gap", tb.max_gap);
        if (tb.shifts.size() < 2) fail(errc::config, "translated_bump.shifts: needs at least two shifts");
        positive(tb.options.half_width, "translated_bump.half_width");
        positive(tb.options.edge_tolerance, "translated_bump.edge_tolerance");
        positive(tb.max_gap, "translated_bump.max_gap");
        c.translated_bump = tb;
    }

    if (c.experiment == "evolve") {
        const auto e = r.section("evolve");
        c.evolve.dt = e.need<double>("dt");
        c.evolve.t_end = e.need<double>("t_end");
        c.evolve.snapshot_stride = e.get("snapshot_stride", c.evolve.snapshot_stride);
        c.evolve.check_dt = e.get("check_dt", c.evolve.check_dt);
        c.evolve.mass_tolerance = e.get("mass_tolerance", c.evolve.mass_tolerance);
        c.evolve.energy_tolerance = e.get("energy_tolerance", c.evolve.energy_tolerance);
        positive(c.evolve.dt, "evolve.dt");
        positive(c.evolve.t_end, "evolve.t_end");
        positive(c.evolve.mass_tolerance, "evolve.mass_tolerance");
        positive(c.evolve.energy_tolerance, "evolve.energy_tolerance");
        if (c.evolve.snapshot_stride == 0) fail(errc::config, "evolve.snapshot_stride: must be at least 1");
    }
    if (c.experiment == "minimal-mass-blowup") {
        const auto b = r.section("blowup");
        auto& B = c.blowup;
        B.T = b.get("T", B.T);
        B.lambda = b.get("lambda", B.lambda);
        B.theta = b.get("theta", B.theta);
        B.dt = b.need<double>("dt");
        if (b.has("t_end")) B.t_end = b.need<double>("t_end");
        B.snapshot_stride = b.get("snapshot_stride", B.snapshot_stride);
        B.check_dt = b.get("check_dt", B.check_dt);
        B.threshold_factor = b.get("threshold_factor", B.threshold_factor);
        B.compare_times = b.get("compare_times", B.compare_times);
        B.compare_tolerances = b.get("compare_tolerances", B.compare_tolerances);
        B.rate_tolerance = b.get("rate_tolerance", B.rate_tolerance);
        B.scan_time = b.get("scan_time", B.scan_time);
        B.scan_fraction = b.get("scan_fraction", B.scan_fraction);
        B.banica_radii = b.get("banica_radii", B.banica_radii);
        B.banica_chirps = b.get("banica_chirps", B.banica_chirps);
        B.banica_stride = b.get("banica_stride", B.banica_stride);
        B.banica_slack = b.get("banica_slack", B.banica_slack);
        positive(B.T, "blowup.T");
        positive(B.lambda, "blowup.lambda");
        positive(B.dt, "blowup.dt");
        if (B.t_end) positive(*B.t_end, "blowup.t_end");
        if (!(B.threshold_factor > 1.0)) fail(errc::config, "blowup.threshold_factor: must exceed 1");
        if (B.compare_times.size() != B.compare_tolerances.size())
            fail(errc::config, "blowup.compare_tolerances: needs one tolerance per compare time");
        for (double t : B.compare_times)
            if (!(t > 0.0 && t < 1.0)) fail(errc::config, "blowup.compare_times: must lie in (0, 1)");
        for (double t : B.compare_tolerances) positive(t, "blowup.compare_tolerances");
        positive(B.rate_tolerance, "blowup.rate_tolerance");
        if (!(B.scan_time > 0.0 && B.scan_time < 1.0)) fail(errc::config, "blowup.scan_time: must lie in (0, 1)");
        positive(B.scan_fraction, "blowup.scan_fraction");
        for (double R : B.banica_radii) positive(R, "blowup.banica_radii");
        positive(B.banica_slack, "blowup.banica_slack");
        if (B.snapshot_stride == 0 || B.banica_stride == 0)
            fail(errc::config, "blowup: strides must be at least 1");
    }
    if (c.experiment == "virial-check") {
        const auto v = r.section("virial");
        auto& V = c.virial;
        V.T = v.get("T", V.T);
        V.lambda = v.get("lambda", V.lambda);
        V.theta = v.get("theta", V.theta);
        V.dt = v.need<double>("dt");
        V.t_end = v.need<double>("t_end");
        V.snapshot_stride = v.get("snapshot_stride", V.snapshot_stride);
        V.check_dt = v.get("check_dt", V.check_dt);
        V.tolerance = v.get("tolerance", V.tolerance);
        positive(V.T, "virial.T");
        positive(V.lambda, "virial.lambda");
        positive(V.dt, "virial.dt");
        positive(V.t_end, "virial.t_end");
        positive(V.tolerance, "virial.tolerance");
        if (!(V.t_end < V.T)) fail(errc::config, "virial.t_end: must precede the blow-up time T");
        if (V.snapshot_stride == 0) fail(errc::config, "virial.snapshot_stride: must be at least 1");
    }
    if (c.experiment == "profile-demo") {
        const auto s = r.section("profile");
        try {
            json suite = doc.at("profile");
            suite["d"] = c.params.d;
            suite["c"] = c.params.c;
            c.profile.suite = suite_from_json(suite);
        } catch (const error& e) {
            fail(errc::config, "profile: " + e.detail());
        }
        if (c.profile.suite.profiles.empty()) fail(errc::config, "profile.profiles: needs at least one profile");
        if (s.has("hardy_cross")) {
            const auto h = s.section("hardy_cross");
            c.profile.hardy_cross.case1_shifts = h.get("case1_shifts", c.profile.hardy_cross.case1_shifts);
            c.profile.hardy_cross.case2_frequencies =
                h.get("case2_frequencies", c.profile.hardy_cross.case2_frequencies);
        }
        c.profile.recovery_tolerance = s.get("recovery_tolerance", c.profile.recovery_tolerance);
        c.profile.expansion_tolerance = s.get("expansion_tolerance", c.profile.expansion_tolerance);
        c.profile.remainder_tolerance = s.get("remainder_tolerance", c.profile.remainder_tolerance);
        positive(c.profile.suite.eps, "profile.eps");
        positive(c.profile.recovery_tolerance, "profile.recovery_tolerance");
        positive(c.profile.expansion_tolerance, "profile.expansion_tolerance");
        positive(c.profile.remainder_tolerance, "profile.remainder_tolerance");
    }
    if (c.experiment == "gn-sweep") {
        const auto s = r.section("sweep");
        c.sweep.axis = s.need<std::string>("axis");
        c.sweep.values = s.need<std::vector<double>>("values");
    }

    c.seed = r.get<std::uint64_t>("seed", c.seed);
    c.threads = r.get<unsigned>("threads", c.threads);
    c.out_dir = r.get<std::string>("out", c.out_dir);
    c.profile.suite.seed = c.seed;
    c.profile.suite.options.threads = c.threads;
    return c;
}

/// Full config document with defaults filled in (the report echo).
inline json config_to_json(const ExperimentConfig& c) {
    json grid = {{"r_max", c.grid.r_max}, {"n", c.grid.n}, {"scheme", std::string(to_string(c.grid.scheme))}};
    if (c.grid.r_min) grid["r_min"] = *c.grid.r_min;
    json j = {{"schema_version", c.schema_version},
              {"experiment", c.experiment},
              {"params", {{"d", c.params.d}, {"c", c.params.c}}},
              {"grid", grid},
              {"ground_state",
               {{"method", std::string(to_string(c.method))},
                {"tol", c.ground_state.tol},
                {"max_newton", c.ground_state.max_newton}}},
              {"tolerances",
               {{"residual", c.residual_tolerance}, {"pohozaev", c.pohozaev_tolerance}, {"gn_constant", c.gn_tolerance}}},
              {"seed", c.seed},
              {"threads", c.threads},
              {"out", c.out_dir}};
    if (c.hardy_probe) {
        const auto& h = *c.hardy_probe;
        j["hardy_probe"] = {{"eps", h.eps}, {"log_width", h.log_width}, {"n", h.n}, {"r_min", h.r_min},
                            {"tolerance", h.tolerance}};
    }
    if (c.translated_bump) {
        const auto& t = *c.translated_bump;
        j["translated_bump"] = {{"shifts", t.shifts},
                                {"half_width", t.options.half_width},
                                {"cells", t.options.cells},
                                {"edge_tolerance", t.options.edge_tolerance},
                                {"max_gap", t.max_gap}};
    }
    if (c.experiment == "evolve") {
        const auto& e = c.evolve;
        j["evolve"] = {{"dt", e.dt},
                       {"t_end", e.t_end},
                       {"snapshot_stride", e.snapshot_stride},
                       {"check_dt", e.check_dt},
                       {"mass_tolerance", e.mass_tolerance},
                       {"energy_tolerance", e.energy_tolerance}};
    }
    if (c.experiment == "minimal-mass-blowup") {
        const auto& b = c.blowup;
        j["blowup"] = {{"T", b.T},
                       {"lambda", b.lambda},
                       {"theta", b.theta},
                       {"dt", b.dt},
                       {"t_end", b.t_end.value_or(b.T)},
                       {"snapshot_stride", b.snapshot_stride},
                       {"check_dt", b.check_dt},
                       {"threshold_factor", b.threshold_factor},
                       {"compare_times", b.compare_times},
                       {"compare_tolerances", b.compare_tolerances},
                       {"rate_tolerance", b.rate_tolerance},
                       {"scan_time", b.scan_time},
                       {"scan_fraction", b.scan_fraction},
                       {"banica_radii", b.banica_radii},
                       {"banica_chirps", b.banica_chirps},
                       {"banica_stride", b.banica_stride},
                       {"banica_slack", b.banica_slack}};
    }
    if (c.experiment == "virial-check") {
        const auto& v = c.virial;
        j["virial"] = {{"T", v.T},
                       {"lambda", v.lambda},
                       {"theta", v.theta},
                       {"dt", v.dt},
                       {"t_end", v.t_end},
                       {"snapshot_stride", v.snapshot_stride},
                       {"check_dt", v.check_dt},
                       {"tolerance", v.tolerance}};
    }
    if (c.experiment == "profile-demo") {
        auto s = to_json(c.profile.suite);
        s.erase("d");
        s.erase("c");
        s.erase("seed");
        s["hardy_cross"] = {{"case1_shifts", c.profile.hardy_cross.case1_shifts},
                            {"case2_frequencies", c.profile.hardy_cross.case2_frequencies}};
        s["recovery_tolerance"] = c.profile.recovery_tolerance;
        s["expansion_tolerance"] = c.profile.expansion_tolerance;
        s["remainder_tolerance"] = c.profile.remainder_tolerance;
        j["profile"] = s;
    }
    if (c.experiment == "gn-sweep") j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}};
    return j;
}

// ------------------------------------------------------------------ report --

/// One acceptance check; `criterion` is the acceptance-criterion number.
struct Check {
    std::string name;
    int criterion = 0;
    bool pass = false;
    json measured = json::object();
    json tolerance = json::object();
};

struct RunReport {
    std::string experiment;
    json config = json::object();
    std::vector<Check> checks;
    json measurements = json::object();
    std::vector<std::string> artifacts;
    std::string error;
    double wall_seconds = 0.0;

    bool passed() const {
        if (!error.empty() || checks.empty()) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

inline json to_json(const Check& c) {
    return {{"name", c.name}, {"criterion", c.criterion}, {"pass", c.pass}, {"measured", c.measured},
            {"tolerance", c.tolerance}};
}

inline json to_json(const RunReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    json j = {{"schema_version", config_schema_version},
              {"experiment", r.experiment},
              {"status", r.passed() ? "pass" : "fail"},
              {"config", r.config},
              {"checks", checks},
              {"measurements", r.measurements},
              {"artifacts", r.artifacts},
              {"wall_seconds", r.wall_seconds}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

namespace detail {

inline bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] > v[k - 1])) return false;
    return true;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k)
        if (!(v[k] < v[k - 1])) return false;
    return true;
}

class ArtifactWriter {
public:
    ArtifactWriter(const std::string& dir, RunReport& report) : dir_(dir), report_(report) {
        if (!dir_.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(dir_, ec);
            if (ec) fail(errc::config, "out: cannot create " + dir_ + ": " + ec.message());
        }
    }
    bool enabled() const { return !dir_.empty(); }

    template <typename F>
    void write(const std::string& name, F&& f) {
        if (!enabled()) return;
        const auto path = (std::filesystem::path(dir_) / name).string();
        f(path);
        report_.artifacts.push_back(path);
    }

private:
    std::string dir_;
    RunReport& report_;
};

inline GroundState solve_configured_ground_state(const ExperimentConfig& c, const ProblemParams& p) {
    return with_context("ground-state", [&] { return solve_ground_state(p, c.grid.build(p), c.method, c.ground_state); });
}

inline Check certification_check(const ExperimentConfig& c, const GroundState& q) {
    const auto gn = gn_constant_report(q);
    Check k{"ground-state-certification", 2};
    k.measured = {{"residual", q.residual},
                  {"pohozaev_1", q.pohozaev[0]},
                  {"pohozaev_2", q.pohozaev[1]},
                  {"gn_constant_gap", gn.relative_gap()}};
    k.tolerance = {{"residual", c.residual_tolerance},
                   {"pohozaev", c.pohozaev_tolerance},
                   {"gn_constant_gap", c.gn_tolerance}};
    k.pass = q.residual <= c.residual_tolerance && q.pohozaev[0] <= c.pohozaev_tolerance &&
             q.pohozaev[1] <= c.pohozaev_tolerance && gn.relative_gap() <= c.gn_tolerance;
    return k;
}

inline void run_ground_state(const ExperimentConfig& c, RunReport& report, ArtifactWriter& out) {
    const auto q = solve_configured_ground_state(c, c.params);
    auto diag = diagnostics_json(q);
    diag["l2_norm"] = q.l2_norm();
    diag["raw_mass"] = q.raw_mass;
    diag["raw_residual"] = q.raw_residual;
    diag["newton_iterations"] = q.newton_iterations;
    diag["gn_constant_weinstein"] = gn_constant_report(q).from_weinstein;
    report.measurements["ground_state"] = diag;
    report.checks.push_back(certification_check(c, q));
    out.write("ground_state.csv", [&](const std::string& p) { save_csv(p, q.field); });
    out.write("ground_state.json", [&](const std::string& p) { save_json(p, to_json(q.field)); });
    out.write("diagnostics.json", [&](const std::string& p) { save_json(p, diag); });

    if (c.params.c < 0.0) {
        const auto p0 = make_params(c.params.d, 0.0);
        const auto q0 = solve_configured_ground_state(c, p0);
        report.measurements["reference_q0"] = {{"mass", q0.mass}, {"l2_norm", q0.l2_norm()},
                                               {"gn_constant", q0.gn_constant}};
        Check order{"radial-mass-ordering", 3};
        order.measured = {{"l2_norm_c", q.l2_norm()}, {"l2_norm_0", q0.l2_norm()}};
        order.tolerance = {{"relation", "l2_norm_c > l2_norm_0"}};
        order.pass = q.l2_norm() > q0.l2_norm();
        report.checks.push_back(order);

        if (c.translated_bump) {
            const auto& tb = *c.translated_bump;
            const auto values = with_context("translated-bump", [&] {
                return translated_bump_supremum(c.params, q0, tb.shifts, tb.options);
            });
            std::vector<double> jc;
            json rows = json::array();
            for (const auto& v : values) {
                jc.push_back(v.j_c);
                rows.push_back({{"shift", v.shift}, {"j_c", v.j_c}, {"j_0", v.j_0}, {"edge_ratio", v.edge_ratio}});
            }
            const double cgn0 = q0.gn_constant;
            const double gap = (cgn0 - jc.back()) / cgn0;
            bool below = true;
            for (double v : jc) below = below && v < cgn0;
            Check w{"non-attainment-witness", 4};
            w.measured = {{"values", rows}, {"c_gn_0", cgn0}, {"final_gap", gap},
                          {"increasing", strictly_increasing(jc)}, {"all_below", below}};
            w.tolerance = {{"final_gap", tb.max_gap}};
            w.pass = strictly_increasing(jc) && below && gap <= tb.max_gap;
            report.checks.push_back(w);
        }
    }

    if (c.hardy_probe) {
        const auto& h = *c.hardy_probe;
        const LogCutoff chi{h.log_width};
        const auto grid = with_context("hardy-probe", [&] {
            return RadialGrid::build(c.params, chi.outer_radius(), h.n, GridScheme::graded, h.r_min);
        });
        std::vector<double> ratios;
        for (double e : h.eps)
            ratios.push_back(with_context("hardy-probe", [&] { return hardy_sharpness_probe(c.params, e, grid, chi); }));
        const double lambda = c.params.lambda();
        const double final_error = std::abs(ratios.back() - lambda) / lambda;
        Check k{"hardy-sharpness", 1};
        k.measured = {{"eps", h.eps}, {"ratios", ratios}, {"lambda", lambda}, {"final_relative_error", final_error},
                      {"decreasing", strictly_decreasing(ratios)}};
        k.tolerance = {{"final_relative_error", h.tolerance}};
        k.pass = strictly_decreasing(ratios) && final_error <= h.tolerance;
        report.checks.push_back(k);
    }
}

inline void run_evolve(const ExperimentConfig& c, RunReport& report, ArtifactWriter& out) {
    const auto& e = c.evolve;
    const auto q = solve_configured_ground_state(c, c.params);
    EvolveOptions opts;
    opts.snapshot_stride = e.snapshot_stride;
    opts.step.check_dt = e.check_dt;
    const auto traj = with_context("evolution", [&] {
        return evolve(q.field, c.params, e.dt, e.t_end, std::numeric_limits<double>::infinity(), opts);
    });
    double profile_dev = 0.0;
    for (const auto& s : traj.snapshots) {
        std::vector<cplx> mod(s.field.size());
        for (std::size_t j = 0; j < mod.size(); ++j) mod[j] = std::abs(s.field[j]);
        profile_dev = std::max(profile_dev, relative_l2_distance(s.field.with_values(std::move(mod)), q.field));
    }
    auto manifest = manifest_json(traj);
    manifest["profile_deviation"] = profile_dev;
    report.measurements["trajectory"] = manifest;
    Check k{"conservation", 5};
    k.measured = {{"mass_drift", traj.mass_drift()}, {"energy_drift", traj.energy_drift()},
                  {"stop_reason", std::string(to_string(traj.stop_reason))}};
    k.tolerance = {{"mass_drift", e.mass_tolerance}, {"energy_drift", e.energy_tolerance}};
    k.pass = traj.stop_reason == StopReason::completed && traj.mass_drift() <= e.mass_tolerance &&
             traj.energy_drift() <= e.energy_tolerance;
    report.checks.push_back(k);
    out.write("timeseries.csv", [&](const std::string& p) { save_timeseries_csv(p, traj); });
    out.write("manifest.json", [&](const std::string& p) { save_json(p, manifest); });
    out.write("final_field.csv", [&](const std::string& p) { save_csv(p, traj.back().field); });
}

inline const Snapshot* snapshot_at(const Trajectory& traj, double t) {
    for (const auto& s : traj.snapshots)
        if (std::abs(s.t - t) <= 0.5 * traj.dt) return &s;
    return nullptr;
}

inline void run_minimal_mass(const ExperimentConfig& c, RunReport& report, ArtifactWriter& out) {
    const auto& b = c.blowup;
    const auto q = solve_configured_ground_state(c, c.params);
    const auto grid = q.field.grid_ptr();
    const PseudoConformalParams pc{q, b.T, b.theta, b.lambda};
    const auto u0 = with_context("blow-up", [&] { return minimal_mass_initial(pc, grid); });
    EvolveOptions opts;
    opts.snapshot_stride = b.snapshot_stride;
    opts.step.check_dt = b.check_dt;
    const double threshold = b.threshold_factor * std::sqrt(gradient_sq(u0));
    const auto traj = with_context("evolution", [&] {
        return evolve(u0, c.params, b.dt, b.t_end.value_or(b.T), threshold, opts);
    });
    report.measurements["trajectory"] = manifest_json(traj);

    // exact solution and blow-up rate
    {
        Check k{"exact-blowup-cross-validation", 6};
        bool pass = true;
        json errs = json::array();
        for (std::size_t i = 0; i < b.compare_times.size(); ++i) {
            const double t = b.compare_times[i] * b.T;
            const auto* s = snapshot_at(traj, t);
            if (!s) {
                errs.push_back({{"t", t}, {"error", "no retained snapshot at this time"}});
                pass = false;
                continue;
            }
            const double err = relative_l2_distance(s->field, pseudo_conformal_field(pc, t, grid));
            errs.push_back({{"t", t}, {"l2_relative_error", err}, {"tolerance", b.compare_tolerances[i]}});
            pass = pass && err <= b.compare_tolerances[i];
        }
        json rate = json::object();
        if (traj.stop_reason == StopReason::blowup_detected) {
            const auto fit = with_context("blow-up rate", [&] { return blowup_rate_fit(traj, b.T); });
            rate = to_json(fit);
            try {
                const double T_est = extrapolate_blowup_time(rate_samples(traj));
                rate["extrapolated"] = to_json(blowup_rate_fit(traj, T_est));
            } catch (const error& e) {
                rate["extrapolated"] = {{"error", e.what()}};
            }
            pass = pass && fit.rate_spread <= b.rate_tolerance;
        } else {
            rate = {{"error", "trajectory stopped without blow-up detection: " + traj.diagnostic}};
            pass = false;
        }
        k.measured = {{"comparisons", errs}, {"rate_fit", rate},
                      {"stop_reason", std::string(to_string(traj.stop_reason))}, {"diagnostic", traj.diagnostic},
                      {"wall_seconds_limit", 600}};
        k.tolerance = {{"compare_times", b.compare_times}, {"compare_tolerances", b.compare_tolerances},
                       {"rate_spread", b.rate_tolerance}};
        k.pass = pass;
        report.checks.push_back(k);
    }

    // mass concentration of the exact solution
    {
        std::vector<double> times;
        for (double f : {0.5, 0.8, 0.9}) if (f < b.scan_time) times.push_back(f * b.T);
        times.push_back(b.scan_time * b.T);
        const auto scan = with_context("concentration", [&] { return concentration_scan(pc, times, WindowFunction{}, grid); });
        Check k{"mass-concentration", 8};
        k.measured = {{"t", scan.t}, {"a", scan.a}, {"captured", scan.captured},
                      {"reference_mass", scan.reference_mass}, {"tail_fraction", scan.tail_fraction()},
                      {"warnings", scan.warnings}};
        k.tolerance = {{"tail_fraction_min", b.scan_fraction}};
        k.pass = scan.tail_fraction() >= b.scan_fraction;
        report.checks.push_back(k);
        out.write("concentration_exact.csv", [&](const std::string& p) { save_scan_csv(p, scan); });
        const auto traj_scan = concentration_scan(traj, b.T, WindowFunction{}, q.mass);
        out.write("concentration_trajectory.csv", [&](const std::string& p) { save_scan_csv(p, traj_scan); });
    }

    // limiting profile
    {
        Check k{"limiting-profile", 9};
        const std::size_t n = traj.snapshots.size();
        if (n >= 3) {
            std::vector<double> dist, energy, times;
            for (std::size_t i = n - 3; i < n; ++i) {
                const auto r = with_context("renormalization", [&] { return renormalize_snapshot(traj, i, q); });
                dist.push_back(r.h1_distance);
                energy.push_back(r.energy);
                times.push_back(traj.snapshots[i].t);
            }
            std::vector<double> abs_energy;
            for (double e : energy) abs_energy.push_back(std::abs(e));
            k.measured = {{"t", times}, {"h1_distance", dist}, {"energy", energy}};
            k.pass = strictly_decreasing(dist) && strictly_decreasing(energy) && strictly_decreasing(abs_energy);
        } else {
            k.measured = {{"error", "fewer than three retained snapshots"}};
        }
        k.tolerance = {{"relation", "h1_distance and E(v_n) strictly decreasing, |E(v_n)| decreasing"}};
        report.checks.push_back(k);
    }

    // Banica matrix
    {
        Check k{"banica-inequality", 11};
        std::size_t cases = 0, violations = 0;
        double worst = 0.0;
        json rows = json::array();
        auto test = [&](const std::string& label, const RadialField& u) {
            for (double R : b.banica_radii) {
                const auto res = with_context("banica", [&] { return banica_check(u, BanicaWeight{R}, q.mass); });
                ++cases;
                if (!res.holds(b.banica_slack)) ++violations;
                const double excess = res.rhs > 0.0 ? res.lhs / res.rhs - 1.0 : (res.lhs > 0.0 ? 1.0 : -1.0);
                worst = std::max(worst, excess);
                rows.push_back({{"u", label}, {"R", R}, {"lhs", res.lhs}, {"rhs", res.rhs}});
            }
        };
        for (double beta : b.banica_chirps) test("chirp(Q, " + std::to_string(beta) + ")", chirp(q.field, beta));
        for (std::size_t i = 0; i < traj.snapshots.size(); i += b.banica_stride)
            test("u(t = " + std::to_string(traj.snapshots[i].t) + ")", traj.snapshots[i].field);
        k.measured = {{"cases", cases}, {"violations", violations}, {"max_lhs_over_rhs_minus_1", worst},
                      {"matrix", rows}};
        k.tolerance = {{"slack", b.banica_slack}};
        k.pass = violations == 0 && cases > 0;
        report.checks.push_back(k);
    }

    try {
        report.measurements["virial"] = to_json(virial_series_check(traj));
    } catch (const error& e) {
        report.measurements["virial"] = {{"error", e.what()}};
    }
    out.write("timeseries.csv", [&](const std::string& p) { save_timeseries_csv(p, traj); });
    out.write("manifest.json", [&](const std::string& p) { save_json(p, report.measurements["trajectory"]); });
}

inline void run_virial(const ExperimentConfig& c, RunReport& report, ArtifactWriter& out) {
    const auto& v = c.virial;
    const auto q = solve_configured_ground_state(c, c.params);
    const PseudoConformalParams pc{q, v.T, v.theta, v.lambda};
    const auto u0 = with_context("blow-up", [&] { return minimal_mass_initial(pc, q.field.grid_ptr()); });
    EvolveOptions opts;
    opts.snapshot_stride = v.snapshot_stride;
    opts.step.check_dt = v.check_dt;
    const auto traj = with_context("evolution", [&] {
        return evolve(u0, c.params, v.dt, v.t_end, std::numeric_limits<double>::infinity(), opts);
    });
    const auto vc = with_context("virial", [&] { return virial_series_check(traj); });
    report.measurements["trajectory"] = manifest_json(traj);
    Check k{"virial-identities", 7};
    k.measured = to_json(vc);
    k.tolerance = {{"fit_error", v.tolerance}, {"second_difference_error", v.tolerance}};
    k.pass = traj.stop_reason == StopReason::completed && vc.fit_error[0] <= v.tolerance &&
             vc.fit_error[1] <= v.tolerance && vc.fit_error[2] <= v.tolerance &&
             vc.second_difference_error <= v.tolerance;
    report.checks.push_back(k);
    out.write("timeseries.csv", [&](const std::string& p) { save_timeseries_csv(p, traj); });
    out.write("virial.json", [&](const std::string& p) { save_json(p, to_json(vc)); });
}

inline void run_profile_demo(const ExperimentConfig& c, RunReport& report, ArtifactWriter& out) {
    const auto& pc = c.profile;
    const auto run = with_context("profile-decomposition", [&] { return run_profile_suite(pc.suite); });
    const auto case1 = with_context("hardy-cross", [&] { return hardy_cross_case1(c.params, pc.hardy_cross.case1_shifts); });
    const auto case2 =
        with_context("hardy-cross", [&] { return hardy_cross_case2(c.params, pc.hardy_cross.case2_frequencies); });
    auto abs_values = [](std::vector<double> v) {
        for (auto& x : v) x = std::abs(x);
        return v;
    };
    bool recovered = run.scores.size() >= run.sequence.profiles.size();
    double worst_score = 0.0;
    for (const auto& s : run.scores) {
        worst_score = std::max(worst_score, s.l2_error);
        recovered = recovered && s.l2_error <= pc.recovery_tolerance;
    }
    const auto& e = run.expansion;
    Check k{"profile-decomposition", 10};
    k.measured = {{"extracted", run.result.profiles.size()},
                  {"true_profiles", run.sequence.profiles.size()},
                  {"worst_recovery_error", worst_score},
                  {"l2_residual", e.l2_residual},
                  {"h1c_residual", e.h1c_residual},
                  {"remainder_lq_ratio", e.lq_ratio},
                  {"hardy_cross_case1", case1},
                  {"hardy_cross_case2", case2},
                  {"stagnated", run.result.stagnated}};
    k.tolerance = {{"recovery", pc.recovery_tolerance},
                   {"expansion", pc.expansion_tolerance},
                   {"remainder_lq_ratio", pc.remainder_tolerance}};
    k.pass = recovered && !run.result.stagnated && e.l2_residual <= pc.expansion_tolerance &&
             e.h1c_residual <= pc.expansion_tolerance && e.lq_ratio <= pc.remainder_tolerance &&
             strictly_decreasing(abs_values(case1)) && strictly_decreasing(abs_values(case2));
    report.checks.push_back(k);
    auto result = to_json(run);
    report.measurements["decomposition"] = {{"eta_history", run.result.eta_history},
                                            {"expansion", result["expansion"]},
                                            {"diagnostic", run.result.diagnostic}};
    out.write("decomposition.json", [&](const std::string& p) { save_json(p, result); });
    out.write("suite.json", [&](const std::string& p) { save_json(p, to_json(pc.suite)); });
}

} // namespace detail

inline std::vector<RunReport> sweep(const ExperimentConfig& base, const std::string& axis,
                                    const std::vector<double>& values);

inline void write_sweep_csv(std::ostream& os, const std::string& axis, const std::vector<double>& values,
                            const std::vector<RunReport>& reports) {
    os << axis << ",mass,l2_norm,gn_constant,residual,pohozaev_1,pohozaev_2,gn_constant_gap,status\n";
    os.precision(17);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& m = reports[i].measurements;
        os << values[i] << ',';
        if (m.contains("ground_state")) {
            const auto& g = m["ground_state"];
            const double gap = std::abs(g["gn_constant"].get<double>() - g["gn_constant_weinstein"].get<double>()) /
                               g["gn_constant"].get<double>();
            os << g["mass"].get<double>() << ',' << g["l2_norm"].get<double>() << ',' << g["gn_constant"].get<double>()
               << ',' << g["residual"].get<double>() << ',' << g["pohozaev"][0].get<double>() << ','
               << g["pohozaev"][1].get<double>() << ',' << gap;
        } else {
            os << ",,,,,,";
        }
        os << ',' << (reports[i].passed() ? "pass" : "fail") << '\n';
    }
}

/// Dispatches to the owning module. Config errors propagate; errors raised by
/// the numerical modules are recorded in the report with their module context.
inline RunReport run(const ExperimentConfig& c) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.experiment = c.experiment;
    report.config = config_to_json(c);
    detail::ArtifactWriter out(c.out_dir, report);
    try {
        if (c.experiment == "ground-state")
            detail::run_ground_state(c, report, out);
        else if (c.experiment == "evolve")
            detail::run_evolve(c, report, out);
        else if (c.experiment == "minimal-mass-blowup")
            detail::run_minimal_mass(c, report, out);
        else if (c.experiment == "virial-check")
            detail::run_virial(c, report, out);
        else if (c.experiment == "profile-demo")
            detail::run_profile_demo(c, report, out);
        else if (c.experiment == "gn-sweep") {
            const auto runs = sweep(c, c.sweep.axis, c.sweep.values);
            json list = json::array();
            for (std::size_t i = 0; i < runs.size(); ++i) {
                for (auto check : runs[i].checks) {
                    std::ostringstream os;
                    os << c.sweep.axis << '=' << c.sweep.values[i] << ": " << check.name;
                    check.name = os.str();
                    report.checks.push_back(std::move(check));
                }
                if (!runs[i].error.empty()) {
                    Check failed{c.sweep.axis + "=" + std::to_string(c.sweep.values[i]) + ": run", 0};
                    failed.measured = {{"error", runs[i].error}};
                    report.checks.push_back(failed);
                }
                auto j = to_json(runs[i]);
                j.erase("config");
                j.erase("wall_seconds");
                list.push_back(j);
            }
            report.measurements["runs"] = list;
            out.write("gn_sweep.csv", [&](const std::string& p) {
                std::ofstream os(p);
                require(static_cast<bool>(os), errc::config, "cannot write " + p);
                write_sweep_csv(os, c.sweep.axis, c.sweep.values, runs);
            });
        } else {
            fail(errc::config, "experiment: unknown tag '" + c.experiment + "'");
        }
    } catch (const error& e) {
        if (e.code() == errc::config) throw;
        report.error = e.what();
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.enabled()) {
        const auto path = (std::filesystem::path(c.out_dir) / "report.json").string();
        report.artifacts.push_back(path);
        save_json(path, to_json(report));
    }
    return report;
}

namespace detail {

inline json* locate(json& doc, const std::string& path) {
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) return nullptr;
        node = &(*node)[key];
        if (dot == std::string::npos) return node;
        start = dot + 1;
    }
}

inline std::string canonical_axis(const std::string& axis) {
    if (axis == "c" || axis == "d") return "params." + axis;
    if (axis == "r_max" || axis == "n" || axis == "r_min") return "grid." + axis;
    return axis;
}

} // namespace detail

/// Independent runs with `axis` set to each value, concurrently on
/// base.threads workers. A gn-sweep base runs ground-state members. Errors,
/// config ones included, stay inside the member's report.
inline std::vector<RunReport> sweep(const ExperimentConfig& base, const std::string& axis,
                                    const std::vector<double>& values) {
    const auto path = detail::canonical_axis(axis);
    json doc = config_to_json(base);
    if (base.experiment == "gn-sweep") {
        doc["experiment"] = "ground-state";
        doc.erase("sweep");
    }
    const json* field = detail::locate(doc, path);
    if (!field || !field->is_number()) fail(errc::config, "sweep.axis: '" + axis + "' does not name a numeric field");
    std::vector<RunReport> reports(values.size());
    parallel_for(values.size(), base.threads, [&](std::size_t i) {
        json member = doc;
        auto* slot = detail::locate(member, path);
        if (field->is_number_integer())
            *slot = static_cast<long long>(std::llround(values[i]));
        else
            *slot = values[i];
        member["threads"] = 1;
        if (!base.out_dir.empty())
            member["out"] = (std::filesystem::path(base.out_dir) / ("run_" + std::to_string(i))).string();
        try {
            reports[i] = run(parse_config(member));
        } catch (const error& e) {
            reports[i].experiment = member["experiment"].get<std::string>();
            reports[i].config = member;
            reports[i].error = e.what();
        }
    });
    return reports;
}

} // namespace nlsip

#endif
