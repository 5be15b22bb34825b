#include <doctest.h>

#include "geodesy/error.hpp"
#include "geodesy/expr.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace geodesy;

namespace {

ErrorKind kind_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::InvalidArgument;
}

// Random polynomial tree in x together with a plain evaluator of the same tree.
struct RandomPoly {
    std::string text;
    std::function<double(double)> f;
    int degree = 0;
};

RandomPoly random_poly(std::mt19937_64& rng, int max_degree, int depth)
{
    std::uniform_int_distribution<int> pick(0, 4);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const int choice = depth == 0 ? pick(rng) % 2 : pick(rng);
    if (choice == 0 || max_degree == 0) {
        const double c = std::round(coef(rng) * 100.0) / 100.0;
        const std::string t = "(" + std::to_string(c) + ")";
        return {t, [c](double) { return c; }, 0};
    }
    if (choice == 1) {
        std::uniform_int_distribution<int> k(1, std::min(3, max_degree));
        const int e = k(rng);
        return {"x^" + std::to_string(e), [e](double x) { return std::pow(x, e); }, e};
    }
    if (choice == 4) {
        RandomPoly a = random_poly(rng, max_degree / 2, depth - 1);
        RandomPoly b = random_poly(rng, max_degree - a.degree, depth - 1);
        return {"(" + a.text + ")*(" + b.text + ")", [fa = a.f, fb = b.f](double x) { return fa(x) * fb(x); },
                a.degree + b.degree};
    }
    RandomPoly a = random_poly(rng, max_degree, depth - 1);
    RandomPoly b = random_poly(rng, max_degree, depth - 1);
    const bool plus = choice == 2;
    return {a.text + (plus ? " + " : " - ") + "(" + b.text + ")",
            [fa = a.f, fb = b.f, plus](double x) { return plus ? fa(x) + fb(x) : fa(x) - fb(x); },
            std::max(a.degree, b.degree)};
}

} // namespace

TEST_CASE("grammar and precedence")
{
    const Expression e = parse("x^2 + 1", Mode::Real);
    CHECK(e.render() == "x^2 + 1");
    CHECK(e.value(3.0) == doctest::Approx(10.0));

    CHECK(parse("-x^2", Mode::Real).value(3.0) == doctest::Approx(-9.0));
    CHECK(parse("2^-1", Mode::Real).value(0.0) == doctest::Approx(0.5));
    CHECK(parse("2^3^2", Mode::Real).value(0.0) == doctest::Approx(512.0));
    CHECK(parse("8/2/2", Mode::Real).value(0.0) == doctest::Approx(2.0));
    CHECK(parse("1-2-3", Mode::Real).value(0.0) == doctest::Approx(-4.0));
    CHECK(parse("2*pi", Mode::Real).value(0.0) == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(parse("1.5e-1*x", Mode::Real).value(2.0) == doctest::Approx(0.3));
}

TEST_CASE("render round trip is structural")
{
    for (const char* src : {"x^2 + 1", "sin(x)+3", "-(x-1)^2", "exp(-x)/(1+x^2)", "2^-x", "(x^2)^3", "-x^2",
                            "x-(1-x)", "cosh(x)*sinh(x) - sqrt(x^2+1)"}) {
        const Expression e = parse(src, Mode::Real);
        const Expression again = parse(e.render(), Mode::Real);
        INFO(src, " -> ", e.render());
        CHECK(e.structurally_equal(again));
        CHECK(again.render() == e.render());
    }
}

TEST_CASE("syntax errors carry position and expected tokens")
{
    try {
        (void)parse("2*", Mode::Real);
        FAIL("no error");
    } catch (const SyntaxError& e) {
        CHECK(e.kind() == ErrorKind::Syntax);
        CHECK(e.position() == 2);
        CHECK_FALSE(e.expected().empty());
    }
    CHECK(kind_of([] { (void)parse("(x+1", Mode::Real); }) == ErrorKind::Syntax);
    CHECK(kind_of([] { (void)parse("x 1", Mode::Real); }) == ErrorKind::Syntax);
    CHECK(kind_of([] { (void)parse("", Mode::Real); }) == ErrorKind::Syntax);
}

TEST_CASE("identifiers are checked against the mode")
{
    CHECK(kind_of([] { (void)parse("y+1", Mode::Real); }) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of([] { (void)parse("z+1", Mode::Real); }) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of([] { (void)parse("x+1", Mode::Complex); }) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of([] { (void)parse("tan(x)", Mode::Real); }) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of([] { (void)parse("i*x", Mode::Real); }) == ErrorKind::UnknownIdentifier);
    CHECK(kind_of([] { (void)parse("abs(z)", Mode::Complex); }) == ErrorKind::NonHolomorphicPrimitive);
    CHECK_NOTHROW((void)parse("sin(z)*exp(z)", Mode::Complex));
    CHECK_NOTHROW((void)parse("abs(x)", Mode::Real));
}

TEST_CASE("jets of simple functions")
{
    const auto j = eval_jet2(parse("x^2", Mode::Real), 2.0);
    CHECK(j.value == doctest::Approx(4.0));
    CHECK(j.d1 == doctest::Approx(4.0));
    CHECK(j.d2 == doctest::Approx(2.0));

    const auto s = eval_jet2(parse("sin(x)", Mode::Real), 0.0);
    CHECK(s.value == doctest::Approx(0.0));
    CHECK(s.d1 == doctest::Approx(1.0));
    CHECK(s.d2 == doctest::Approx(0.0));

    const auto e = eval_jet2(parse("exp(z)", Mode::Complex), cd(0.0, std::numbers::pi));
    for (cd v : {e.value, e.d1, e.d2}) {
        CHECK(std::abs(v - cd(-1.0)) < 1e-14);
    }

    // 1/(1+x^2) at 1: (1/2, -1/2, 1/2).
    const auto r = eval_jet2(parse("1/(1+x^2)", Mode::Real), 1.0);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK(r.d1 == doctest::Approx(-0.5));
    CHECK(r.d2 == doctest::Approx(0.5));

    // x^x = exp(x log x): d1 = x^x (log x + 1), d2 = x^x ((log x + 1)^2 + 1/x).
    const double x = 1.7;
    const auto p = eval_jet2(parse("x^x", Mode::Real), x);
    const double v = std::pow(x, x);
    CHECK(p.value == doctest::Approx(v).epsilon(1e-13));
    CHECK(p.d1 == doctest::Approx(v * (std::log(x) + 1.0)).epsilon(1e-13));
    CHECK(p.d2 == doctest::Approx(v * (std::pow(std::log(x) + 1.0, 2) + 1.0 / x)).epsilon(1e-13));
}

TEST_CASE("domain errors at poles and branch cuts")
{
    CHECK(kind_of([] { (void)parse("log(x)", Mode::Real).value(-1.0); }) == ErrorKind::Domain);
    CHECK(kind_of([] { (void)parse("sqrt(x)", Mode::Real).jet(0.0); }) == ErrorKind::Domain);
    CHECK(kind_of([] { (void)parse("x^-1", Mode::Real).value(0.0); }) == ErrorKind::Domain);
    CHECK(kind_of([] { (void)parse("log(z)", Mode::Complex).value(cd(-2.0, 0.0)); }) == ErrorKind::Domain);
    CHECK(kind_of([] { (void)parse("abs(x)", Mode::Real).jet(0.0); }) == ErrorKind::Domain);
    CHECK_NOTHROW((void)parse("log(z)", Mode::Complex).value(cd(-2.0, 1e-3)));
}

TEST_CASE("mode conversion")
{
    const Expression c = parse("z^2+1", Mode::Complex);
    const Expression r = c.to_real_mode();
    CHECK(r.mode() == Mode::Real);
    CHECK(r.value(2.0) == doctest::Approx(5.0));
    CHECK(kind_of([] { (void)parse("z+i", Mode::Complex).to_real_mode(); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { (void)parse("abs(x)", Mode::Real).to_complex_mode(); }) ==
          ErrorKind::NonHolomorphicPrimitive);
    CHECK(parse("3", Mode::Real).is_constant());
    CHECK_FALSE(parse("x-x", Mode::Real).is_constant());
}

TEST_CASE("property: jets of random polynomial trees match finite differences")
{
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> ux(-1.5, 1.5);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        const RandomPoly p = random_poly(rng, 6, 4);
        const Expression e = parse(p.text, Mode::Real);
        INFO(p.text);
        for (int k = 0; k < 100; ++k) {
            const double x = ux(rng);
            const auto j = e.jet(x);
            const double scale = 1.0 + std::abs(j.value) + std::abs(j.d1) + std::abs(j.d2);
            CHECK(std::abs(j.value - p.f(x)) <= 1e-12 * scale);
            const double h = 1e-5;
            const double fd1 = (p.f(x + h) - p.f(x - h)) / (2.0 * h);
            const double fd2 = (e.jet(x + h).d1 - e.jet(x - h).d1) / (2.0 * h);
            CHECK(std::abs(j.d1 - fd1) <= 1e-6 * scale);
            CHECK(std::abs(j.d2 - fd2) <= 1e-6 * scale);
            ++checked;
        }
    }
    CHECK(checked == 4000);
}

TEST_CASE("property: complex jets are direction independent")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const char* src : {"z^2+1", "exp(z)", "sin(z)*exp(z)", "cosh(z)/(z^2+4)", "z^3-2*i*z"}) {
        const Expression e = parse(src, Mode::Complex);
        for (int k = 0; k < 100; ++k) {
            const cd z(u(rng), u(rng));
            const cd d = e.jet(z).d1;
            const double t = 1e-6;
            const cd along_re = (e.value(z + t) - e.value(z - t)) / (2.0 * t);
            const cd along_im = (e.value(z + cd(0, t)) - e.value(z - cd(0, t))) / cd(0, 2.0 * t);
            CHECK(std::abs(along_re - d) <= 1e-6 * (1.0 + std::abs(d)));
            CHECK(std::abs(along_im - d) <= 1e-6 * (1.0 + std::abs(d)));
            // A jet along direction w carries h'(z) w.
            const cd w(0.3, -0.8);
            CHECK(std::abs(e.jet(z, w).d1 - d * w) <= 1e-12 * (1.0 + std::abs(d)));
        }
    }
}
