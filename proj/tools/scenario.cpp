#include "geodesy/cli.hpp"

#include "geodesy/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace geodesy::cli {

namespace {

constexpr std::array kKnownKeys = {
    "name",    "command", "family", "h",       "tol",      "seed",   "samples", "expect",  "x_range", "y_range",
    "v_range", "w_range", "grid",   "initial", "velocity", "s_end",  "base",    "value0",  "slope0",  "support",
    "path",    "path_b",  "A",      "B",       "source",   "theta0", "sign_mode", "curve", "table_rows",
};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_line(std::size_t line, const std::string& what)
{
    throw Error(ErrorKind::InvalidArgument, "scenario line " + std::to_string(line) + ": " + what);
}

} // namespace

std::optional<std::string> Scenario::get(std::string_view key) const
{
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->first == key) {
            return it->second;
        }
    }
    return std::nullopt;
}

std::string Scenario::get_or(std::string_view key, std::string_view fallback) const
{
    auto v = get(key);
    return v ? *v : std::string(fallback);
}

void Scenario::set(std::string_view key, std::string value)
{
    for (auto& e : entries) {
        if (e.first == key) {
            e.second = std::move(value);
            return;
        }
    }
    entries.emplace_back(std::string(key), std::move(value));
}

json Scenario::echo() const
{
    json j = json::object();
    j["name"] = name;
    for (const auto& [k, v] : entries) {
        if (k != "name") {
            j[k] = v;
        }
    }
    return j;
}

std::vector<Scenario> parse_pool(std::string_view text)
{
    std::vector<std::pair<std::string, std::string>> globals;
    std::vector<Scenario> out;
    std::vector<std::string> global_keys;
    std::vector<std::string> section_keys;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#') {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3) {
                bad_line(line, "malformed section header");
            }
            Scenario sc;
            sc.name = trim(std::string_view(s).substr(1, s.size() - 2));
            sc.entries = globals;
            out.push_back(std::move(sc));
            section_keys.clear();
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            bad_line(line, "expected key = value");
        }
        const std::string key = trim(std::string_view(s).substr(0, eq));
        const std::string value = trim(std::string_view(s).substr(eq + 1));
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
            bad_line(line, "unknown key '" + key + "'");
        }
        auto& seen = out.empty() ? global_keys : section_keys;
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            bad_line(line, "duplicate key '" + key + "'");
        }
        seen.push_back(key);
        if (out.empty()) {
            globals.emplace_back(key, value);
        } else if (key == "name") {
            out.back().name = value;
        } else {
            out.back().set(key, value);
        }
    }
    if (out.empty() && !globals.empty()) {
        Scenario sc;
        sc.entries = globals;
        sc.name = sc.get_or("name", "scenario");
        out.push_back(std::move(sc));
    }
    return out;
}

std::vector<Scenario> load_pool(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::InvalidArgument, "cannot read scenario file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_pool(buf.str());
}

CheckRecord make_check(std::string name, long points, double deviation, double tolerance, std::string note)
{
    CheckRecord r;
    r.name = std::move(name);
    r.points = points;
    r.max_deviation = deviation;
    r.tolerance = tolerance;
    r.pass = deviation <= tolerance;
    r.note = std::move(note);
    return r;
}

CheckRecord make_min_check(std::string name, long points, double value, double minimum, std::string note)
{
    CheckRecord r = make_check(std::move(name), points, value, minimum, std::move(note));
    r.bound = "min";
    r.pass = value >= minimum;
    return r;
}

namespace {

json number(double v)
{
    if (!std::isfinite(v)) {
        return nullptr;
    }
    return v;
}

} // namespace

json VerificationReport::to_json(bool with_wall_time) const
{
    json j = json::object();
    j["scenario"] = scenario.echo();
    j["command"] = command;
    j["pass"] = pass;
    j["expect"] = expect_fail ? "fail" : "pass";
    j["as_expected"] = as_expected();
    json checks_json = json::array();
    for (const auto& c : checks) {
        json cj = json::object();
        cj["name"] = c.name;
        cj["points"] = c.points;
        cj["max_deviation"] = number(c.max_deviation);
        cj["tolerance"] = c.tolerance;
        cj["bound"] = c.bound;
        cj["pass"] = c.pass;
        if (!c.note.empty()) {
            cj["note"] = c.note;
        }
        checks_json.push_back(std::move(cj));
    }
    j["checks"] = std::move(checks_json);
    if (!details.empty()) {
        j["details"] = details;
    }
    if (error) {
        j["error"] = *error;
    }
    if (!table.empty()) {
        json rows = json::array();
        for (const auto& r : table.rows) {
            json row = json::array();
            for (double v : r) {
                row.push_back(number(v));
            }
            rows.push_back(std::move(row));
        }
        j["table"] = {{"columns", table.columns}, {"rows", std::move(rows)}};
    }
    if (with_wall_time) {
        j["wall_ms"] = wall_ms;
    }
    return j;
}

json PoolReport::to_json(bool with_wall_time) const
{
    json j = json::object();
    j["command"] = "verify-all";
    long passed = 0;
    long expected_failures = 0;
    json list = json::array();
    for (const auto& r : reports) {
        passed += r.pass ? 1 : 0;
        expected_failures += (r.expect_fail && !r.pass) ? 1 : 0;
        list.push_back(r.to_json(with_wall_time));
    }
    j["summary"] = {{"scenarios", static_cast<long>(reports.size())},
                    {"passed", passed},
                    {"failed", static_cast<long>(reports.size()) - passed},
                    {"expected_failures", expected_failures}};
    j["pass"] = pass;
    j["scenarios"] = std::move(list);
    if (with_wall_time) {
        j["wall_ms"] = wall_ms;
    }
    return j;
}

json error_payload(const std::exception& e)
{
    json j = json::object();
    if (const auto* se = dynamic_cast<const SyntaxError*>(&e)) {
        j["type"] = std::string(to_string(se->kind()));
        j["message"] = se->what();
        j["position"] = se->position();
        j["expected"] = se->expected();
    } else if (const auto* ge = dynamic_cast<const Error*>(&e)) {
        j["type"] = std::string(to_string(ge->kind()));
        j["message"] = ge->what();
    } else {
        j["type"] = "InternalError";
        j["message"] = e.what();
    }
    return j;
}

double default_tolerance()
{
    if (const char* env = std::getenv("GEODESY_DEFAULT_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end != env && *end == '\0' && v > 0.0 && std::isfinite(v)) {
            return v;
        }
        throw Error(ErrorKind::InvalidArgument, std::string("GEODESY_DEFAULT_TOL is not a positive number: ") + env);
    }
    return 1e-6;
}

void write_csv(const Table& table, const std::string& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::InvalidArgument, "cannot write CSV file " + path);
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i ? "," : "") << table.columns[i];
    }
    out << '\n' << std::setprecision(17);
    for (const auto& r : table.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            out << (i ? "," : "") << r[i];
        }
        out << '\n';
    }
}

void print_table(const std::vector<VerificationReport>& reports, std::ostream& err)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-28s %-36s %8s %12s %12s  %s\n", "scenario", "check", "points", "deviation",
                  "tolerance", "result");
    err << buf;
    for (const auto& r : reports) {
        const std::string name = r.scenario.name.empty() ? r.command : r.scenario.name;
        if (r.error && r.checks.empty()) {
            err << name << ": error " << (*r.error)["type"].get<std::string>() << ": "
                << (*r.error)["message"].get<std::string>() << '\n';
        }
        for (const auto& c : r.checks) {
            std::snprintf(buf, sizeof buf, "%-28.28s %-36.36s %8ld %12.3e %12.3e  %s%s\n", name.c_str(),
                          c.name.c_str(), c.points, c.max_deviation, c.tolerance, c.pass ? "PASS" : "FAIL",
                          c.bound == "min" ? " (min)" : "");
            err << buf;
        }
        err << name << ": " << (r.pass ? "PASS" : "FAIL") << (r.expect_fail ? " (expected to fail)" : "") << '\n';
    }
}

} // namespace geodesy::cli
