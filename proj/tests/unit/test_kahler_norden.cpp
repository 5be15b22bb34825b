#include <doctest.h>

#include "geodesy/error.hpp"
#include "geodesy/kahler_norden.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

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

GeodesicState state4(KNPoint p, std::array<double, 4> v)
{
    GeodesicState s;
    s.coords = p.chart();
    s.velocity = {cd(v[0]), cd(v[1]), cd(v[2]), cd(v[3])};
    return s;
}

// Random point of the KN domain: |X| and |h - X^2| bounded away from zero.
KNPoint random_point(std::mt19937_64& rng, const Expression& h)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const KNPoint p{u(rng), 0.5 + 1.5 * std::abs(u(rng)), u(rng), u(rng)};
        if (std::abs(h.value(p.z()) - p.chi() * p.chi()) > 0.1) {
            return p;
        }
    }
}

} // namespace

TEST_CASE("Cauchy-Riemann residuals")
{
    const Expression sq = parse("z^2", Mode::Complex);
    for (auto [x, y] : {std::pair{0.3, -1.2}, std::pair{2.0, 0.5}, std::pair{0.0, 0.0}}) {
        const auto r = cauchy_riemann_residual(sq, x, y);
        CHECK(r.first == 0.0);
        CHECK(r.second == 0.0);
    }
    const auto e = cauchy_riemann_residual(parse("exp(z)", Mode::Complex), 0.0, std::numbers::pi);
    CHECK(e.first <= 1e-9);
    CHECK(e.second <= 1e-9);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    double worst = 0.0;
    for (const char* src : {"z^2+1", "exp(z)", "sin(z)*cosh(z)", "1/(z^2+4)", "z^3 - 2*i*z + 1"}) {
        const Expression h = parse(src, Mode::Complex);
        for (int k = 0; k < 100; ++k) {
            const auto r = cauchy_riemann_residual(h, u(rng), u(rng));
            worst = std::max({worst, r.first, r.second});
        }
    }
    CHECK(worst <= 1e-8);
    CHECK(kind_of([] { (void)cauchy_riemann_residual(parse("x", Mode::Real), 0.0, 0.0); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([] { (void)cauchy_riemann_residual(parse("log(z)", Mode::Complex), -1.0, 0.0); }) ==
          ErrorKind::Domain);
}

TEST_CASE("metric construction and reductions")
{
    const GeometrySpec kn = GeometrySpec::parse(Family::KahlerNorden, "z^2+1");
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        worst = std::max(worst, kn_metric_consistency(kn, random_point(rng, kn.h)));
    }
    CHECK(worst <= 1e-10);

    // On {y = 0, Psi = 0} the (x, Phi) block is the hyperbolic metric, on {y = 0, Phi = 0}
    // the (x, Psi) block is the anti-de Sitter metric.
    const GeometrySpec hyp = GeometrySpec::parse(Family::Hyperbolic, "x^2+1");
    const GeometrySpec ads = GeometrySpec::parse(Family::AntiDeSitterPlus, "x^2+1");
    const KNPoint re{0.4, 1.7, 0.0, 0.0};
    const Eigen::Matrix4d g = kn_metric(kn, re);
    const Eigen::MatrixXcd gh = metric_at(hyp, ChartPoint::hyperbolic(0.4, 1.7)).g;
    CHECK(std::abs(g(0, 0) - gh(0, 0).real()) < 1e-14);
    CHECK(std::abs(g(1, 1) - gh(1, 1).real()) < 1e-14);
    CHECK(g(0, 1) == 0.0);
    CHECK(kn_metric_consistency(kn, re) == 0.0);

    const KNPoint im{0.4, 0.0, 0.0, 0.8};
    const Eigen::Matrix4d gi = kn_metric(kn, im);
    const Eigen::MatrixXcd ga = metric_at(ads, ChartPoint::ads(0.4, 0.8)).g;
    CHECK(std::abs(gi(0, 0) - ga(0, 0).real()) < 1e-14);
    CHECK(std::abs(gi(3, 3) - ga(1, 1).real()) < 1e-14);
    CHECK(gi(0, 3) == 0.0);

    CHECK(kind_of([&] { (void)kn_metric_consistency(kn, KNPoint{0.0, 0.0, 0.0, 0.0}); }) == ErrorKind::OutOfDomain);
    // h(0) = 1 = X^2 at X = 1: the singular set.
    CHECK(kind_of([&] { (void)kn_metric_consistency(kn, KNPoint{0.0, 1.0, 0.0, 0.0}); }) == ErrorKind::OutOfDomain);
}

TEST_CASE("Christoffel correspondence and signature")
{
    for (const char* src : {"0", "z^2+1", "exp(z)", "z"}) {
        const GeometrySpec kn = GeometrySpec::parse(Family::KahlerNorden, src);
        std::mt19937_64 rng(17);
        for (int k = 0; k < 25; ++k) {
            INFO(src);
            const auto r = kn_christoffel_correspondence(kn, random_point(rng, kn.h));
            CHECK(r.pass);
            CHECK(r.max_violation <= 1e-10);
            CHECK(r.off_pattern <= 1e-10);
            CHECK(r.identities_checked > 0);
            CHECK(r.negative_eigenvalues == 2);
            CHECK(r.positive_eigenvalues == 2);
            CHECK(r.hyperbolic_block_difference < 0.0);
        }
    }
    const GeometrySpec kn = GeometrySpec::parse(Family::KahlerNorden, "z^2+2");
    const auto r = kn_christoffel_correspondence(kn, KNPoint{0.3, 1.1, 0.0, 0.0});
    CHECK(r.hyperbolic_block_difference >= 0.0);
    CHECK(r.hyperbolic_block_difference <= 1e-10);
    CHECK(metric_at(kn, ChartPoint::kn(0.3, 1.1, 0.2, 0.4)).signature == "(-,-,+,+)");
}

TEST_CASE("sectional curvature is not constant")
{
    const GeometrySpec kn = GeometrySpec::parse(Family::KahlerNorden, "z^2+1");
    const ChartPoint p = ChartPoint::kn(0.2, 1.3, 0.1, 0.4);
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(4);
    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(4);
    e0(0) = 1.0;
    e1(1) = 1.0;
    Eigen::VectorXcd mixed = Eigen::VectorXcd::Zero(4);
    mixed << 0.0, 1.0, 0.0, 0.5;
    const cd a = sectional_curvature(kn, p, e0, e1);
    const cd b = sectional_curvature(kn, p, e0, mixed);
    INFO(a, " ", b);
    CHECK(std::abs(a - b) >= 0.1);
}

TEST_CASE("geodesic split for h = z")
{
    const GeometrySpec kn = GeometrySpec::parse(Family::KahlerNorden, "z");
    const auto rep = kn_geodesic_split(kn, state4({0.1, 1.2, 0.3, 0.4}, {0.8, 0.1, 0.3, -0.2}), 1.0);
    CHECK(rep.s_reached == doctest::Approx(1.0));
    CHECK(rep.termination == Termination::RangeEnd);
    CHECK(rep.position_difference <= 1e-8);
    CHECK(rep.value_difference <= 1e-8);
    CHECK(rep.basis_difference >= 0.0);
    CHECK(rep.basis_difference <= 1e-8);
    CHECK(rep.pass);

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
        const KNPoint p{0.3 * u(rng), 1.2 + 0.2 * u(rng), 0.3 * u(rng), 0.3 * u(rng)};
        const auto r = kn_geodesic_split(kn, state4(p, {1.0, 0.2 * u(rng), 0.3 * u(rng), 0.2 * u(rng)}), 0.5);
        CHECK(r.position_difference <= 1e-8);
        CHECK(r.value_difference <= 1e-8);
    }
}

TEST_CASE("real submanifolds are totally geodesic")
{
    const GeometrySpec one = GeometrySpec::parse(Family::KahlerNorden, "1");
    const auto a = kn_submanifold_check(one, state4({0.0, 1.5, 0.0, 0.0}, {1.0, 0.3, 0.0, 0.0}), 1.0);
    CHECK(a.block == Submanifold::RealBlock);
    CHECK(a.deviation <= 1e-9);
    CHECK(a.reduced_difference <= 1e-9);
    CHECK(a.pass);

    const auto b = kn_submanifold_check(one, state4({0.0, 0.0, 0.0, 0.7}, {1.0, 0.0, 0.0, 0.2}), 1.0);
    CHECK(b.block == Submanifold::ImaginaryBlock);
    CHECK(b.deviation <= 1e-9);
    CHECK(b.reduced_difference <= 1e-9);
    CHECK(b.pass);

    const GeometrySpec z2 = GeometrySpec::parse(Family::KahlerNorden, "z^2+2");
    const auto c = kn_submanifold_check(z2, state4({0.1, 1.8, 0.0, 0.0}, {0.9, -0.2, 0.0, 0.0}), 1.0);
    CHECK(c.deviation <= 1e-9);
    CHECK(c.reduced_difference <= 1e-9);

    CHECK(kind_of([&] { (void)kn_submanifold_check(one, state4({0.0, 1.5, 0.1, 0.0}, {1, 0, 0, 0}), 1.0); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { (void)kn_submanifold_check(one, state4({0.0, 1.5, 0.0, 0.3}, {1, 0, 0, 0}), 1.0); }) ==
          ErrorKind::InvalidArgument);
}
