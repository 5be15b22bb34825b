#include <doctest.h>

#include "geodesy/cli.hpp"
#include "geodesy/error.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace geodesy;
using cli::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
    json doc() const { return json::parse(out); }
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "geodesy");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content)
{
    const auto p = std::filesystem::temp_directory_path() / ("geodesy_test_" + name);
    std::ofstream(p) << content;
    return p;
}

std::string scenario_dir()
{
    const char* d = std::getenv("GEODESY_SCENARIO_DIR");
    return d ? d : "scenarios";
}

// Removes every "wall_ms" member, recursively.
void strip_wall_time(json& j)
{
    if (j.is_object()) {
        j.erase("wall_ms");
        for (auto& [k, v] : j.items()) {
            strip_wall_time(v);
        }
    } else if (j.is_array()) {
        for (auto& v : j) {
            strip_wall_time(v);
        }
    }
}

} // namespace

TEST_CASE("scenario pool parsing")
{
    const auto pool = cli::parse_pool("# comment\nseed = 7\n\n[a]\ncommand = curvature\nh = x^2+2\n[b]\n"
                                      "command = solve\nseed = 9\n");
    REQUIRE(pool.size() == 2);
    CHECK(pool[0].name == "a");
    CHECK(pool[0].get("seed") == "7");
    CHECK(pool[0].get("h") == "x^2+2");
    CHECK(pool[1].get("seed") == "9");
    CHECK_FALSE(pool[1].has("h"));
    CHECK(pool[1].get_or("h", "1") == "1");

    for (const char* bad : {"[a]\nno equals sign\n", "[a]\ncolour = red\n", "[a\ncommand = solve\n",
                            "[a]\ncommand = solve\ncommand = solve\n"}) {
        INFO(bad);
        try {
            (void)cli::parse_pool(bad);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidArgument);
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
}

TEST_CASE("check records")
{
    CHECK(cli::make_check("k", 3, 1e-7, 1e-6).pass);
    CHECK_FALSE(cli::make_check("k", 3, 2e-6, 1e-6).pass);
    CHECK_FALSE(cli::make_check("k", 3, std::nan(""), 1e-6).pass);
    CHECK(cli::make_min_check("r", 10, 0.5, 1e-2).pass);
    CHECK_FALSE(cli::make_min_check("r", 10, 1e-3, 1e-2).pass);
}

TEST_CASE("exit codes")
{
    const Result ok = run_cli({"curvature", "--family", "hyperbolic", "--h", "sin(x)+3"});
    CHECK(ok.code == cli::kExitPass);
    CHECK(ok.doc()["pass"] == true);

    const Result syntax = run_cli({"curvature", "--family", "hyperbolic", "--h", "2*"});
    CHECK(syntax.code == cli::kExitInputError);
    const json e = syntax.doc()["error"];
    CHECK(e["type"] == "SyntaxError");
    CHECK(e["position"] == 2);
    CHECK_FALSE(e["expected"].empty());

    CHECK(run_cli({"curvature", "--family", "sphere", "--h", "1"}).code == cli::kExitInputError);
    CHECK(run_cli({"frobnicate"}).code == cli::kExitInputError);
    CHECK(run_cli({"curvature", "--bogus"}).code == cli::kExitInputError);
    CHECK(run_cli({"verify-all"}).code == cli::kExitInputError);
    CHECK(run_cli({"verify-all", "--scenario", temp_file("empty.pool", "# nothing\n").string()}).code ==
          cli::kExitInputError);

    // A valid scenario whose check fails: an impossibly tight tolerance.
    const Result tight = run_cli({"curvature", "--family", "hyperbolic", "--h", "sin(x)+3", "--tol", "1e-30"});
    CHECK(tight.code == cli::kExitCheckFailure);
    CHECK(tight.doc()["pass"] == false);
}

TEST_CASE("single commands")
{
    const Result kn = run_cli({"curvature", "--family", "kn", "--h", "z^2+1"});
    CHECK(kn.code == cli::kExitPass);

    const auto osc = temp_file("osc.pool", "[osc]\ncommand = solve\nfamily = ads+\nh = 1\nvalue0 = 1\n"
                                           "support = 0,6.283185307179586\ntol = 1e-8\n");
    const auto csv = std::filesystem::temp_directory_path() / "geodesy_test_osc.csv";
    std::filesystem::remove(csv);
    const Result solve = run_cli({"solve", "--scenario", osc.string(), "--csv", csv.string()});
    CHECK(solve.code == cli::kExitPass);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("ode_residual") != std::string::npos);
    int rows = 0;
    for (std::string line; std::getline(in, line);) {
        rows += line.empty() ? 0 : 1;
    }
    CHECK(rows > 10);

    // The scenario's command must agree with the requested one.
    CHECK(run_cli({"riccati", "--scenario", osc.string()}).code == cli::kExitInputError);

    const Result complex = run_cli({"solve", "--family", "complex", "--h", "z"});
    CHECK(complex.code == cli::kExitPass);
    CHECK(run_cli({"riccati", "--h", "x^2"}).code == cli::kExitPass);
    CHECK(run_cli({"kn-verify", "--h", "z"}).code == cli::kExitPass);
    CHECK(run_cli({"geodesic", "--family", "ads+", "--h", "x^2+1"}).code == cli::kExitPass);
}

TEST_CASE("reports are deterministic")
{
    const auto pool = scenario_dir() + "/default.pool";
    Result a = run_cli({"verify-all", "--scenario", pool});
    Result b = run_cli({"verify-all", "--scenario", pool});
    REQUIRE(a.code == cli::kExitPass);
    REQUIRE(b.code == cli::kExitPass);
    json ja = a.doc();
    json jb = b.doc();
    strip_wall_time(ja);
    strip_wall_time(jb);
    CHECK(ja.dump() == jb.dump());

    // The negative control is reported as a failure that was expected.
    bool seen = false;
    for (const auto& r : ja["scenarios"]) {
        if (r["scenario"]["name"] == "negative-control-constant-phi") {
            seen = true;
            CHECK(r["pass"] == false);
            CHECK(r["as_expected"] == true);
        }
    }
    CHECK(seen);

    const Result s1 = run_cli({"curvature", "--family", "complex", "--h", "exp(z)", "--seed", "3"});
    const Result s2 = run_cli({"curvature", "--family", "complex", "--h", "exp(z)", "--seed", "3"});
    json j1 = s1.doc();
    json j2 = s2.doc();
    strip_wall_time(j1);
    strip_wall_time(j2);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("default tolerance from the environment")
{
    CHECK(cli::default_tolerance() == 1e-6);
    setenv("GEODESY_DEFAULT_TOL", "1e-30", 1);
    CHECK(cli::default_tolerance() == 1e-30);
    CHECK(run_cli({"curvature", "--family", "hyperbolic", "--h", "x^2+2"}).code == cli::kExitCheckFailure);
    setenv("GEODESY_DEFAULT_TOL", "-1", 1);
    CHECK(run_cli({"curvature", "--family", "hyperbolic", "--h", "x^2+2"}).code == cli::kExitInputError);
    unsetenv("GEODESY_DEFAULT_TOL");
}
