#include "geodesy/cli.hpp"

#include "geodesy/error.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <future>
#include <ostream>

namespace geodesy::cli {

namespace {

VerificationReport failed_report(const Scenario& s, const std::exception& e)
{
    VerificationReport rep;
    rep.scenario = s;
    rep.command = s.get_or("command", "");
    rep.expect_fail = s.get_or("expect", "pass") == "fail";
    rep.error = error_payload(e);
    rep.pass = false;
    return rep;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// Errors caused by the scenario itself, as opposed to a numerical failure
// while running a valid one.
bool is_input_error(ErrorKind k)
{
    switch (k) {
    case ErrorKind::Syntax:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::NonHolomorphicPrimitive:
    case ErrorKind::InvalidArgument:
    case ErrorKind::OutOfDomain:
    case ErrorKind::StartOnSingularSet:
    case ErrorKind::TurningPointAtStart: return true;
    default: return false;
    }
}

int emit_error(std::ostream& out, const Error& e)
{
    json j = json::object();
    j["error"] = error_payload(e);
    emit(out, j);
    return is_input_error(e.kind()) ? kExitInputError : kExitCheckFailure;
}

std::string shortest(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

PoolReport run_pool(const std::vector<Scenario>& pool, double default_tol)
{
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::future<VerificationReport>> jobs;
    jobs.reserve(pool.size());
    for (const auto& s : pool) {
        jobs.push_back(std::async(std::launch::async, [&s, default_tol] {
            try {
                return run_scenario(s, default_tol);
            } catch (const std::exception& e) {
                return failed_report(s, e);
            }
        }));
    }
    PoolReport out;
    out.pass = !pool.empty();
    for (auto& j : jobs) {
        out.reports.push_back(j.get());
        out.pass = out.pass && out.reports.back().as_expected();
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Geodesics and linear second-order ODEs: curvature checks, geodesic integration and "
                 "solution reconstruction.",
                 "geodesy"};
    // "--h" names the coefficient, so help is only reachable as --help.
    app.set_help_flag("--help", "Print this help message and exit");
    std::string command;
    std::string scenario_path;
    std::string h;
    std::string family;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    bool pretty = false;
    std::string csv;
    app.add_option("command", command, "curvature | geodesic | solve | riccati | kn-verify | verify-all")
        ->required()
        ->check(CLI::IsMember({"curvature", "geodesic", "solve", "riccati", "kn-verify", "verify-all"}));
    app.add_option("--scenario", scenario_path, "Scenario file (key = value lines, [name] sections)");
    app.add_option("--h", h, "Coefficient h as an expression in x (real families) or z (complex, kn)");
    app.add_option("--family", family, "hyperbolic | ads+ | ads- | complex | kn");
    app.add_option("--tol", tol, "Tolerance of the checks (default: GEODESY_DEFAULT_TOL or 1e-6)");
    app.add_option("--seed", seed, "Seed of the random point sampler");
    app.add_flag("--pretty", pretty, "Print a summary table to stderr");
    app.add_option("--csv", csv, "Write the sample table of the scenario to this CSV file");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << app.help();
        return kExitInputError;
    }

    try {
        const double default_tol = default_tolerance();
        std::vector<Scenario> pool;
        if (!scenario_path.empty()) {
            pool = load_pool(scenario_path);
        } else if (command == "verify-all") {
            throw Error(ErrorKind::InvalidArgument, "verify-all needs --scenario with a pool file");
        } else {
            Scenario s;
            s.name = command;
            pool.push_back(std::move(s));
        }
        for (auto& s : pool) {
            if (command != "verify-all") {
                const auto c = s.get("command");
                if (c && *c != command) {
                    throw Error(ErrorKind::InvalidArgument,
                                "scenario '" + s.name + "' is a " + *c + " scenario, not " + command);
                }
                s.set("command", command);
            }
            if (!h.empty()) {
                s.set("h", h);
            }
            if (!family.empty()) {
                s.set("family", family);
            }
            if (tol) {
                s.set("tol", shortest(*tol));
            }
            if (seed) {
                s.set("seed", std::to_string(*seed));
            }
        }
        if (pool.empty()) {
            throw Error(ErrorKind::InvalidArgument, "the scenario pool is empty");
        }

        if (command == "verify-all") {
            const PoolReport report = run_pool(pool, default_tol);
            emit(out, report.to_json());
            if (pretty) {
                print_table(report.reports, err);
            }
            return report.pass ? kExitPass : kExitCheckFailure;
        }
        if (pool.size() != 1) {
            throw Error(ErrorKind::InvalidArgument, "single commands take a scenario file with one section");
        }
        const VerificationReport report = run_scenario(pool.front(), default_tol);
        emit(out, report.to_json());
        if (pretty) {
            print_table({report}, err);
        }
        if (!csv.empty()) {
            write_csv(report.table, csv);
        }
        return report.as_expected() ? kExitPass : kExitCheckFailure;
    } catch (const Error& e) {
        return emit_error(out, e);
    }
}

} // namespace geodesy::cli
