#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include <nlsip/experiment.hpp>

using namespace nlsip;

namespace {

json shipped(const std::string& name) { return load_json(std::string(NLSIP_CONFIG_DIR) + "/" + name + ".json"); }

json small_ground_state(double c) {
    return {{"schema_version", 1},
            {"experiment", "ground-state"},
            {"params", {{"d", 3}, {"c", c}}},
            {"grid", {{"r_max", 30.0}, {"n", 4000}, {"scheme", "graded"}}}};
}

std::string config_error(const json& doc) {
    try {
        parse_config(doc);
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::config) << e.what();
        return e.what();
    }
    ADD_FAILURE() << "expected a config error for " << doc.dump();
    return {};
}

const Check* find_check(const RunReport& r, int criterion) {
    for (const auto& c : r.checks)
        if (c.criterion == criterion) return &c;
    return nullptr;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("nlsip_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

} // namespace

TEST(Config, ShippedConfigsParseAndRoundTrip) {
    for (const char* name : {"ground_state", "ground_state_d4", "gn_sweep", "evolve", "minimal_mass_blowup",
                             "virial_check", "profile_demo"}) {
        const auto c = parse_config(shipped(name));
        const auto echoed = config_to_json(c);
        EXPECT_EQ(config_to_json(parse_config(echoed)), echoed) << name;
    }
}

TEST(Config, ErrorsNameTheField) {
    auto doc = small_ground_state(0.125);
    doc.erase("schema_version");
    EXPECT_NE(config_error(doc).find("schema_version"), std::string::npos);

    doc = small_ground_state(0.125);
    doc["schema_version"] = 2;
    EXPECT_NE(config_error(doc).find("schema_version"), std::string::npos);

    doc = small_ground_state(0.125);
    doc["experiment"] = "heat-equation";
    EXPECT_NE(config_error(doc).find("unknown tag"), std::string::npos);

    doc = small_ground_state(0.25);
    const auto msg = config_error(doc);
    EXPECT_NE(msg.find("params"), std::string::npos);
    EXPECT_NE(msg.find("lambda(d) = 0.25"), std::string::npos);

    doc = small_ground_state(0.125);
    doc["grid"]["n"] = -3;
    EXPECT_NE(config_error(doc).find("grid.n"), std::string::npos);

    doc = small_ground_state(0.125);
    doc["grid"]["r_max"] = "far";
    EXPECT_NE(config_error(doc).find("grid.r_max"), std::string::npos);

    doc = small_ground_state(0.125);
    doc["experiment"] = "evolve";
    EXPECT_NE(config_error(doc).find("evolve"), std::string::npos);

    doc = shipped("evolve");
    doc["evolve"]["dt"] = 0.0;
    EXPECT_NE(config_error(doc).find("evolve.dt"), std::string::npos);

    doc = shipped("minimal_mass_blowup");
    doc["blowup"]["compare_times"] = {0.5, 1.2};
    EXPECT_NE(config_error(doc).find("blowup.compare_times"), std::string::npos);

    doc = shipped("profile_demo");
    doc["profile"]["profiles"][0]["kind"] = "sinc";
    EXPECT_NE(config_error(doc).find("profile"), std::string::npos);
}

TEST(Run, GroundStateConfigPasses) {
    auto doc = shipped("ground_state");
    doc.erase("hardy_probe");
    const auto report = run(parse_config(doc));
    EXPECT_TRUE(report.passed()) << to_json(report).dump(2);
    const auto* k = find_check(report, 2);
    ASSERT_NE(k, nullptr);
    EXPECT_LE(k->measured["pohozaev_1"].get<double>(), 1e-4);
    EXPECT_LE(k->measured["gn_constant_gap"].get<double>(), 1e-4);
    const auto j = to_json(report);
    for (const char* key : {"schema_version", "experiment", "status", "config", "checks", "measurements", "artifacts",
                            "wall_seconds"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["status"], "pass");
}

TEST(Run, ReportIsDeterministic) {
    const auto c = parse_config(small_ground_state(-1.0));
    auto a = to_json(run(c));
    auto b = to_json(run(c));
    a.erase("wall_seconds");
    b.erase("wall_seconds");
    EXPECT_EQ(a.dump(), b.dump());
    const auto r = run(c);
    EXPECT_NE(find_check(r, 3), nullptr);
    EXPECT_TRUE(find_check(r, 3)->pass);
}

TEST(Run, ArtifactsAreWritten) {
    auto doc = shipped("evolve");
    doc["evolve"]["t_end"] = 0.01;
    doc["evolve"]["snapshot_stride"] = 5;
    const auto dir = scratch_dir("evolve");
    doc["out"] = dir.string();
    const auto report = run(parse_config(doc));
    EXPECT_TRUE(report.passed());
    for (const char* f : {"timeseries.csv", "manifest.json", "final_field.csv", "report.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const auto saved = load_json((dir / "report.json").string());
    EXPECT_EQ(saved["experiment"], "evolve");
    EXPECT_EQ(saved["checks"][0]["criterion"], 5);
    std::ifstream csv(dir / "timeseries.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "t,mass,energy,grad_norm,hardy,virial");
    std::filesystem::remove_all(dir);
}

TEST(Run, MinimalMassReportCarriesMeasurements) {
    const auto report = run(parse_config(shipped("minimal_mass_blowup")));
    ASSERT_TRUE(report.error.empty()) << report.error;
    for (int criterion : {6, 8, 9, 11}) {
        const auto* k = find_check(report, criterion);
        ASSERT_NE(k, nullptr) << criterion;
        EXPECT_TRUE(k->pass) << k->name << ' ' << k->measured.dump();
    }
    EXPECT_GE(find_check(report, 8)->measured["tail_fraction"].get<double>(), 0.99);
    EXPECT_TRUE(find_check(report, 6)->measured["rate_fit"].contains("rate_constant"));
    EXPECT_TRUE(report.measurements["virial"].contains("fit"));
    EXPECT_EQ(report.measurements["trajectory"]["stop_reason"], "blowup-detected");
}

TEST(Sweep, EmptyValuesGiveEmptyList) {
    EXPECT_TRUE(sweep(parse_config(small_ground_state(0.125)), "c", {}).empty());
}

TEST(Sweep, NegativeCoefficientsRaiseMass) {
    const auto q0 = run(parse_config(small_ground_state(0.0)));
    const double m0 = q0.measurements["ground_state"]["mass"].get<double>();
    auto base = parse_config(small_ground_state(0.0));
    base.threads = 2;
    const auto runs = sweep(base, "c", {-2.0, -1.0, -0.5});
    ASSERT_EQ(runs.size(), 3u);
    for (const auto& r : runs) {
        ASSERT_TRUE(r.error.empty()) << r.error;
        EXPECT_GT(r.measurements["ground_state"]["mass"].get<double>(), m0);
    }
}

TEST(Sweep, PositiveCoefficientsSatisfyPohozaev) {
    const auto runs = sweep(parse_config(small_ground_state(0.125)), "params.c", {0.05, 0.1, 0.2});
    for (const auto& r : runs) {
        ASSERT_TRUE(r.error.empty()) << r.error;
        const auto& p = r.measurements["ground_state"]["pohozaev"];
        EXPECT_LE(p[0].get<double>(), 1e-4);
        EXPECT_LE(p[1].get<double>(), 1e-4);
        EXPECT_TRUE(r.passed());
    }
}

TEST(Sweep, MemberErrorsStayIsolated) {
    const auto runs = sweep(parse_config(small_ground_state(0.125)), "c", {0.125, 0.3});
    ASSERT_EQ(runs.size(), 2u);
    EXPECT_TRUE(runs[0].passed());
    EXPECT_FALSE(runs[1].passed());
    EXPECT_NE(runs[1].error.find("params"), std::string::npos) << runs[1].error;
    EXPECT_THROW(sweep(parse_config(small_ground_state(0.125)), "grid.scheme", {1.0}), error);
}

TEST(Sweep, GnSweepReportAndCsv) {
    auto doc = shipped("gn_sweep");
    doc.erase("translated_bump");
    doc["sweep"]["values"] = {0.125, 0.3};
    const auto dir = scratch_dir("sweep");
    doc["out"] = dir.string();
    const auto report = run(parse_config(doc));
    EXPECT_FALSE(report.passed());
    bool saw_failure = false;
    for (const auto& k : report.checks)
        if (k.name == "c=" + std::to_string(0.3) + ": run") saw_failure = !k.pass && k.criterion == 0;
    EXPECT_TRUE(saw_failure);
    std::ifstream csv(dir / "gn_sweep.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "c,mass,l2_norm,gn_constant,residual,pohozaev_1,pohozaev_2,gn_constant_gap,status");
    std::getline(csv, line);
    EXPECT_EQ(line.substr(line.size() - 4), "pass");
    std::getline(csv, line);
    EXPECT_DOUBLE_EQ(std::stod(line.substr(0, line.find(','))), 0.3);
    EXPECT_EQ(line.substr(line.size() - 4), "fail");
    EXPECT_EQ(report.measurements["runs"].size(), 2u);
    std::filesystem::remove_all(dir);
}
