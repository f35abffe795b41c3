#include "domlab/artifacts.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>

namespace fs = std::filesystem;
using namespace domlab;

TEST_SUITE_BEGIN("artifacts");

TEST_CASE("shortest representation round-trips the exact double") {
    const double samples[] = {0.0,          1.0,     -0.35,       0.1,
                              1e-300,       -1e300,  1.0 / 3.0,   59.591384052388,
                              0.1 + 0.2,    -1e-9,   12345.6789,  2.2250738585072014e-308};
    for (double v : samples) {
        const std::string text = format_double(v);
        CHECK(std::strtod(text.c_str(), nullptr) == v);
    }
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("class-K tabulation writes and reads back") {
    TabulatedK alpha0;
    alpha0.x = {0.0, 0.25, 1.0};
    alpha0.value = {0.0, 0.1, 0.6};
    alpha0.feasible = true;

    const fs::path path = fs::temp_directory_path() / "domlab_alpha0_test.csv";
    write_alpha0_csv(path, alpha0);
    const std::string content = domlab::testing::read_file(path);
    CHECK(content == "x,alpha0\n0,0\n0.25,0.1\n1,0.6\n");
    fs::remove(path);
}

TEST_CASE("error json is a single machine-readable line") {
    const std::string line = error_json("unknown scenario 'windmill'", 2);
    CHECK(line.find("\"error\"") != std::string::npos);
    CHECK(line.find("\"code\":2") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("report json carries the metadata header and the four verdict keys") {
    ConditionReport report;
    report.delta_field = Table(1, 1);
    report.delta_spread = 0.5;
    report.agreement = {1};
    report.agreement_frac = 1.0;
    report.sandwich_holds = true;
    report.value_gap = 1e-9;

    ArtifactMeta meta;
    meta.command = "audit";
    meta.scenario = "battery1";
    meta.seed = 7;
    meta.config["tol"] = "1e-10";

    const fs::path path = fs::temp_directory_path() / "domlab_report_test.json";
    write_report_json(path, report, meta);
    const std::string content = domlab::testing::read_file(path);
    for (const char* key : {"\"command\": \"audit\"", "\"scenario\": \"battery1\"",
                            "\"seed\": 7", "\"delta_spread\": 0.5",
                            "\"agreement_fraction\": 1.0", "\"sandwich_holds\": true",
                            "\"value_gap\""})
        CHECK(content.find(key) != std::string::npos);
    fs::remove(path);
}

TEST_SUITE_END();
