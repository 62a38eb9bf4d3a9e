#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

using nlohmann::json;
using Catch::Approx;

struct CliResult {
    int exit_code;
    std::string output;

    json as_json() const { return json::parse(output); }
};

std::string fixture(const std::string& name) {
    return std::string(L2HODGE_FIXTURE_DIR) + "/" + name;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    auto out = std::filesystem::temp_directory_path() /
               ("l2hodge_cli_test_" + std::to_string(++counter) + ".out");
    std::string cmd =
        std::string(L2HODGE_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::ostringstream text;
    text << in.rdbuf();
    r.output = text.str();
    std::filesystem::remove(out);
    return r;
}

}  // namespace

TEST_CASE("cli betti", "[cli]") {
    auto r = run_cli("betti " + fixture("z2_circle.json"));
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["betti"][0].get<double>() == Approx(0.5).margin(1e-12));
    CHECK(j["betti"][1].get<double>() == Approx(0.5).margin(1e-12));
    CHECK(j["euler_characteristic"].get<double>() == Approx(0.0));
    CHECK_FALSE(j.contains("jobs"));
}

TEST_CASE("cli dim", "[cli]") {
    auto r = run_cli("dim " + fixture("weighted_module.json"));
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["kind"] == "module");
    CHECK(j["dim_tau"].get<double>() == Approx(1.75));
    CHECK(j["min_generators"] == 2);

    auto rc = run_cli("dim " + fixture("torus_z2.json"));
    REQUIRE(rc.exit_code == 0);
    json jc = rc.as_json();
    CHECK(jc["kind"] == "complex");
    CHECK(jc["dim_tau"].size() == 3);
    CHECK(jc["dim_tau"][1].get<double>() == Approx(2.0));
}

TEST_CASE("cli farber", "[cli]") {
    auto r = run_cli("farber --K 3");
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["dim_tau"].get<double>() == Approx(1.375).margin(1e-12));
    CHECK(j["sup_ratio"].get<double>() == 3.0);
    CHECK(j["min_generators"] == 3);
}

TEST_CASE("cli validate", "[cli]") {
    auto r = run_cli("validate " + fixture("explicit_bundle_circle.json"));
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["ok"] == true);
    CHECK(j["schema_version"] == 1);

    auto rm = run_cli("validate " + fixture("morse_circle_z2.json"));
    REQUIRE(rm.exit_code == 0);
}

TEST_CASE("cli error reporting", "[cli]") {
    auto r = run_cli("betti /nonexistent/file.json");
    CHECK(r.exit_code == 2);
    json j = r.as_json();
    CHECK(j["error"]["code"] == "ParseError");
    CHECK(j["error"]["kind"] == "validation");

    // numerical conditions exit with 3: an eigenvalue sits on the cutoff
    auto rn = run_cli("truncate " + fixture("scalar_complex.json") + " --lambda 4");
    CHECK(rn.exit_code == 3);
    CHECK(rn.as_json()["error"]["code"] == "BoundaryTie");

    auto rh = run_cli("--help");
    CHECK(rh.exit_code == 0);

    auto ru = run_cli("betti");
    CHECK(ru.exit_code == 2);
}

TEST_CASE("cli truncate", "[cli]") {
    auto r = run_cli("truncate " + fixture("scalar_complex.json") + " --lambda 1");
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["dims_match_density"] == true);
    CHECK(j["d_norms_ok"] == true);
    CHECK(j["certificate"]["valid"] == true);
    CHECK(j["certificate"]["residual"].get<double>() < 1e-9);
    CHECK(j["dims_small"][0].get<double>() == 0.0);
    CHECK(j["max_betti_diff"].get<double>() < 1e-12);
}

TEST_CASE("cli density", "[cli]") {
    auto r = run_cli("density " + fixture("z2_circle.json") +
                     " --degree 0 --lambda-grid 1:5:3:lin");
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["F0"].get<double>() == 0.5);
    REQUIRE(j["samples"].size() == 3);
    CHECK(j["samples"][0]["F"].get<double>() == 0.5);
    CHECK(j["samples"][2]["F"].get<double>() == 1.0);

    auto rc = run_cli("density " + fixture("z2_circle.json") +
                      " --degree 0 --lambda-grid 1:5:3:lin --format csv");
    REQUIRE(rc.exit_code == 0);
    CHECK(rc.output.substr(0, 13) == "lambda,F,tie\n");
}

TEST_CASE("cli witten", "[cli]") {
    auto r = run_cli("witten " + fixture("morse_circle_z2.json") + " --t-grid 1:3:3");
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["morse_dims"] == json::array({1.0, 1.0}));
    REQUIRE(j["entries"].size() == 3);
    for (const auto& e : j["entries"]) {
        CHECK(e["small_count"] == json::array({1.0, 1.0}));
        CHECK(e["ratio"].get<double>() > 1.0);
    }
    CHECK(j["critical_cells"][0] == json::array({"a"}));
    CHECK(j["critical_cells"][1] == json::array({"y"}));
    CHECK(j["decay"]["slope"].get<double>() < -0.4);
}

TEST_CASE("cli compare", "[cli]") {
    auto r = run_cli("compare " + fixture("wedge_z2.json"));
    REQUIRE(r.exit_code == 0);
    json j = r.as_json();
    CHECK(j["max_betti_diff"].get<double>() < 1e-8);
    CHECK(j["chain_map_defect"].get<double>() < 1e-10);
    CHECK(j["betti_coarse"][1].get<double>() == Approx(1.5).margin(1e-12));
    CHECK(j["cells_fine"][0] == 3);  // v plus two midpoints
    CHECK(j["cells_fine"][1] == 4);
}

TEST_CASE("cli reports are independent of the job count", "[cli]") {
    auto r1 = run_cli("betti " + fixture("torus_z2.json") + " --jobs 1");
    auto r8 = run_cli("betti " + fixture("torus_z2.json") + " --jobs 8");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r8.exit_code == 0);
    CHECK(r1.output == r8.output);
}

TEST_CASE("cli writes to a file with --out", "[cli]") {
    auto out = std::filesystem::temp_directory_path() / "l2hodge_cli_out.json";
    auto r = run_cli("betti " + fixture("z2_circle.json") + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.empty());
    std::ifstream in(out);
    json j = json::parse(in);
    CHECK(j["betti"][0].get<double>() == Approx(0.5).margin(1e-12));
    std::filesystem::remove(out);
}
