#pragma once

/// @file cli.hpp
/// Scenario files, verification reports and the command dispatcher behind
/// the `geodesy` executable.

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace geodesy::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitInputError = 2;

/// One `[name]` section of a key=value scenario file.
class Scenario {
public:
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(std::string_view key) const;
    std::string get_or(std::string_view key, std::string_view fallback) const;
    /// Replaces the value of `key`, or appends it.
    void set(std::string_view key, std::string value);
    bool has(std::string_view key) const { return get(key).has_value(); }
    json echo() const;
};

/// Keys before the first section apply to every section. Throws
/// geodesy::Error(InvalidArgument) naming the offending line.
std::vector<Scenario> parse_pool(std::string_view text);
std::vector<Scenario> load_pool(const std::string& path);

struct CheckRecord {
    std::string name;
    long points = 0;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    /// "max": pass when max_deviation <= tolerance; "min": pass when >=.
    std::string bound = "max";
    bool pass = false;
    std::string note;
};

CheckRecord make_check(std::string name, long points, double deviation, double tolerance, std::string note = {});
CheckRecord make_min_check(std::string name, long points, double value, double minimum, std::string note = {});

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    bool empty() const { return rows.empty(); }
};

struct VerificationReport {
    Scenario scenario;
    std::string command;
    std::vector<CheckRecord> checks;
    bool expect_fail = false;
    /// Conjunction of the check results.
    bool pass = false;
    /// Error raised while running the scenario, if any.
    std::optional<json> error;
    json details = json::object();
    Table table;
    double wall_ms = 0.0;

    /// pass, or fail when failure was expected.
    bool as_expected() const { return expect_fail ? !pass : pass; }
    json to_json(bool with_wall_time = true) const;
};

/// Payload describing a geodesy::Error (type, message, and for syntax errors
/// the position and expected tokens).
json error_payload(const std::exception& e);

/// Tolerance used when a scenario does not set one: GEODESY_DEFAULT_TOL or 1e-6.
double default_tolerance();

/// Runs one scenario. Input errors propagate as geodesy::Error; failures of
/// the numerical checks end up in the report.
VerificationReport run_scenario(const Scenario& scenario, double default_tol);

struct PoolReport {
    std::vector<VerificationReport> reports;
    bool pass = false;
    double wall_ms = 0.0;
    json to_json(bool with_wall_time = true) const;
};

/// Runs the scenarios concurrently; reports keep the pool order. Scenario
/// errors are recorded as failed reports.
PoolReport run_pool(const std::vector<Scenario>& pool, double default_tol);

void write_csv(const Table& table, const std::string& path);
void print_table(const std::vector<VerificationReport>& reports, std::ostream& err);

/// Entry point of the executable; returns the exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace geodesy::cli
