#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using domlab::testing::read_file;

namespace {

const fs::path kWork = fs::temp_directory_path() / "domlab_cli_test";

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(DOMLAB_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string output;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

bool dirs_byte_identical(const fs::path& a, const fs::path& b) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(a)) names.push_back(entry.path().filename());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
        if (!fs::exists(b / name)) return false;
        if (read_file(a / name) != read_file(b / name)) return false;
    }
    return names.size() == static_cast<std::size_t>(std::distance(
                               fs::directory_iterator(b), fs::directory_iterator{}));
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("solve emits deterministic artifacts") {
    fs::remove_all(kWork / "solve");
    const auto a = run_cli("solve random:7 --out " + (kWork / "solve" / "a").string());
    const auto b = run_cli("solve random:7 --out " + (kWork / "solve" / "b").string());
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(dirs_byte_identical(kWork / "solve" / "a", kWork / "solve" / "b"));

    const std::string solution = read_file(kWork / "solve" / "a" / "solution.csv");
    CHECK(solution.rfind("s,v_star\n", 0) == 0);
    CHECK(std::count(solution.begin(), solution.end(), '\n') == 9);  // header + 8 states
    const std::string q = read_file(kWork / "solve" / "a" / "solution_q.csv");
    CHECK(q.rfind("s,a,q_star,advantage,policy_flag\n", 0) == 0);
}

TEST_CASE("unknown scenarios exit with code 2 and an error json") {
    const auto result = run_cli("solve windmill --out " + (kWork / "bad").string());
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("\"error\"") != std::string::npos);
    CHECK(result.output.find("\"code\":2") != std::string::npos);
}

TEST_CASE("unwritable output path exits with code 3") {
    const auto result = run_cli("solve random:7 --out /proc/version/nested");
    CHECK(result.exit_code == 3);
}

TEST_CASE("synthesize requires a delta") {
    const auto result =
        run_cli("synthesize battery1 --states 41 --actions 9 --noise-nodes 9 --out " +
                (kWork / "nodelta").string());
    CHECK(result.exit_code == 2);
}

TEST_CASE("non-positive overrides are rejected") {
    const auto result = run_cli("solve battery1 --states 0 --out " + (kWork / "zero").string());
    CHECK(result.exit_code == 2);
}

TEST_CASE("config file fills gaps and flags win") {
    fs::remove_all(kWork / "cfg");
    fs::create_directories(kWork / "cfg");
    {
        std::ofstream cfg(kWork / "cfg" / "run.cfg");
        cfg << "# small grid\nstates = 31\nactions = 7\nnoise_nodes = 9\n";
    }
    const auto from_config = run_cli("solve battery1 --config " +
                                     (kWork / "cfg" / "run.cfg").string() + " --out " +
                                     (kWork / "cfg" / "a").string());
    CHECK(from_config.exit_code == 0);
    const std::string sol_a = read_file(kWork / "cfg" / "a" / "solution.csv");
    CHECK(std::count(sol_a.begin(), sol_a.end(), '\n') == 32);  // config states honored

    const auto flag_wins = run_cli("solve battery1 --config " +
                                   (kWork / "cfg" / "run.cfg").string() +
                                   " --states 21 --out " + (kWork / "cfg" / "b").string());
    CHECK(flag_wins.exit_code == 0);
    const std::string sol_b = read_file(kWork / "cfg" / "b" / "solution.csv");
    CHECK(std::count(sol_b.begin(), sol_b.end(), '\n') == 22);
}

TEST_CASE("fit with a seed writes the dataset in the documented format") {
    fs::remove_all(kWork / "fit");
    const auto result = run_cli(
        "fit battery1 --states 21 --actions 5 --noise-nodes 9 --seed 11 --per-pair 3 --out " +
        (kWork / "fit").string());
    CHECK(result.exit_code == 0);
    const std::string dataset = read_file(kWork / "fit" / "dataset.csv");
    CHECK(dataset.rfind("s_idx,a_idx,snext_idx\n", 0) == 0);
    CHECK(std::count(dataset.begin(), dataset.end(), '\n') == 1 + 21 * 5 * 3);
    CHECK(fs::exists(kWork / "fit" / "model.csv"));
    CHECK(fs::exists(kWork / "fit" / "model_mode.csv"));
    const std::string run = read_file(kWork / "fit" / "run.json");
    CHECK(run.find("\"seed\": 11") != std::string::npos);
}

TEST_CASE("audit and reproduce emit the report bundle") {
    fs::remove_all(kWork / "audit");
    const std::string small = " --states 41 --actions 9 --noise-nodes 9 ";
    const auto audit = run_cli("audit battery1" + small + "--out " +
                               (kWork / "audit" / "a").string());
    CHECK(audit.exit_code == 0);
    for (const char* name : {"report.json", "delta_field.csv", "alpha0.csv"})
        CHECK(fs::exists(kWork / "audit" / "a" / name));
    const std::string report = read_file(kWork / "audit" / "a" / "report.json");
    for (const char* key : {"delta_spread", "agreement_fraction", "sandwich_holds", "value_gap"})
        CHECK(report.find(key) != std::string::npos);

    const auto reproduce = run_cli("reproduce battery1" + small + "--out " +
                                   (kWork / "audit" / "r").string());
    CHECK(reproduce.exit_code == 0);
    for (const char* name : {"true_solution.csv", "true_solution_q.csv", "model_solution.csv",
                             "model_solution_q.csv", "model.csv", "report.json"})
        CHECK(fs::exists(kWork / "audit" / "r" / name));
}

TEST_CASE("sweep emits the documented columns") {
    fs::remove_all(kWork / "sweep");
    const auto result = run_cli(
        "sweep battery2 --states 43 --actions 7 --noise-nodes 9 --deltas=-0.05,0.0,-0.45 "
        "--out " + (kWork / "sweep").string());
    CHECK(result.exit_code == 0);
    const std::string sweep = read_file(kWork / "sweep" / "sweep.csv");
    CHECK(sweep.rfind("delta,undefined_count,max_jump,continuous,agreement_fraction\n", 0) == 0);
    CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 4);
}

TEST_CASE("finetune writes a monotone trace") {
    fs::remove_all(kWork / "tune");
    const auto result = run_cli(
        "finetune battery2 --states 43 --actions 7 --noise-nodes 9 --budget 3 "
        "--family affine --out " + (kWork / "tune").string());
    CHECK(result.exit_code == 0);
    const std::string trace = read_file(kWork / "tune" / "finetune_trace.csv");
    CHECK(trace.rfind("sweep,objective,theta0,theta1,theta2\n", 0) == 0);
    std::istringstream lines(trace);
    std::string line;
    std::getline(lines, line);
    double last = -1e300;
    while (std::getline(lines, line)) {
        const auto first_comma = line.find(',');
        const auto second_comma = line.find(',', first_comma + 1);
        const double objective =
            std::stod(line.substr(first_comma + 1, second_comma - first_comma - 1));
        CHECK(objective >= last);
        last = objective;
    }
    CHECK(fs::exists(kWork / "tune" / "model.csv"));
}

TEST_SUITE_END();
