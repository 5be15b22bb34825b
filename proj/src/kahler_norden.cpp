#include "geodesy/kahler_norden.hpp"

#include "geodesy/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace geodesy {

namespace {

void require_kn(const GeometrySpec& spec)
{
    if (spec.family != Family::KahlerNorden) {
        throw Error(ErrorKind::InvalidArgument, "expected the kn family");
    }
}

// Complex index (0: z, 1: X) and imaginary flag of a real chart index.
int complex_index(int i) { return i % 2; }

bool upsilon_vanishes(int a, int b, int c)
{
    // Upsilon^z_XX, Upsilon^X_zX and Upsilon^X_Xz vanish identically.
    return (a == 0 && b == 1 && c == 1) || (a == 1 && b != c);
}

} // namespace

std::pair<double, double> cauchy_riemann_residual(const Expression& h, double x, double y)
{
    if (h.mode() != Mode::Complex) {
        throw Error(ErrorKind::InvalidArgument, "Cauchy-Riemann check needs a complex-mode h");
    }
    const cd z(x, y);
    const cd dx = h.jet(z, cd(1.0)).d1;
    const cd dy = h.jet(z, cd(0.0, 1.0)).d1;
    return {std::abs(dx.real() - dy.imag()), std::abs(dy.real() + dx.imag())};
}

Eigen::Matrix4d kn_metric(const GeometrySpec& spec, const KNPoint& p)
{
    require_kn(spec);
    return metric_at(spec, p.chart()).g.real();
}

Eigen::Matrix4d kn_metric_from_complex(const GeometrySpec& spec, const KNPoint& p)
{
    require_kn(spec);
    check_domain(spec, p.chart());
    const GeometrySpec cspec(Family::ComplexSphere, spec.h);
    const Eigen::MatrixXcd g = metric_at(cspec, ChartPoint::complex(p.z(), p.chi())).g;
    // G (dX + i dY)^2 has real part Re G (dX^2 - dY^2) - 2 Im G dX dY.
    Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            out(a, b) = g(a, b).real();
            out(a + 2, b + 2) = -g(a, b).real();
            out(a, b + 2) = -g(a, b).imag();
            out(b + 2, a) = -g(a, b).imag();
        }
    }
    return out;
}

double kn_metric_consistency(const GeometrySpec& spec, const KNPoint& p)
{
    return (kn_metric(spec, p) - kn_metric_from_complex(spec, p)).cwiseAbs().maxCoeff();
}

ChristoffelCorrespondenceReport kn_christoffel_correspondence(const GeometrySpec& spec, const KNPoint& p, double tol)
{
    require_kn(spec);
    const ChartPoint cp = p.chart();
    const ChristoffelValue jets = christoffel_at(spec, cp, ChristoffelMethod::FromJets);
    const ChristoffelValue assembled = christoffel_at(spec, cp, ChristoffelMethod::ClosedForm);
    ChristoffelCorrespondenceReport rep;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            for (int k = 0; k < 4; ++k) {
                rep.max_violation = std::max(rep.max_violation, std::abs(jets(i, j, k) - assembled(i, j, k)));
                ++rep.identities_checked;
                if (upsilon_vanishes(complex_index(i), complex_index(j), complex_index(k))) {
                    rep.off_pattern = std::max(rep.off_pattern, std::abs(jets(i, j, k)));
                }
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(kn_metric(spec, p));
    rep.eigenvalues = eig.eigenvalues();
    for (int i = 0; i < 4; ++i) {
        (rep.eigenvalues(i) < 0.0 ? rep.negative_eigenvalues : rep.positive_eigenvalues) += 1;
    }
    const cd h0 = spec.h.value(p.z());
    if (p.y == 0.0 && p.psi == 0.0 && h0.imag() == 0.0) {
        const GeometrySpec hyp(Family::Hyperbolic, spec.h.to_real_mode());
        const ChristoffelValue g2 = christoffel_at(hyp, ChartPoint::hyperbolic(p.x, p.phi));
        rep.hyperbolic_block_difference = 0.0;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int k = 0; k < 2; ++k) {
                    rep.hyperbolic_block_difference =
                        std::max(rep.hyperbolic_block_difference, std::abs(jets(i, j, k) - g2(i, j, k)));
                }
            }
        }
    }
    rep.pass = rep.max_violation <= tol && rep.off_pattern <= tol && rep.negative_eigenvalues == 2 &&
               rep.positive_eigenvalues == 2 && rep.hyperbolic_block_difference <= tol;
    return rep;
}

GeodesicSplitReport kn_geodesic_split(const GeometrySpec& spec, const GeodesicState& initial, double s_span,
                                      double tol, int samples)
{
    require_kn(spec);
    const auto& c = initial.coords;
    const auto& v = initial.velocity;
    if (std::abs(cd(v[0].real(), v[2].real())) == 0.0) {
        throw Error(ErrorKind::TurningPointAtStart, "x' + i y' vanishes at the start");
    }
    GeodesicOptions opts;
    opts.tol = 1e-12;
    const GeodesicTrajectory t4 = integrate_geodesic(spec, initial, s_span, opts);
    const GeometrySpec cspec(Family::ComplexSphere, spec.h);
    GeodesicState ci;
    ci.coords = ChartPoint::complex(cd(c[0].real(), c[2].real()), cd(c[1].real(), c[3].real()));
    ci.velocity = {cd(v[0].real(), v[2].real()), cd(v[1].real(), v[3].real()), {}, {}};
    ci.s = initial.s;
    const GeodesicTrajectory t2 = integrate_geodesic(cspec, ci, s_span, opts);

    GeodesicSplitReport rep;
    rep.tol = tol;
    rep.s_reached = std::min(t4.s_end(), t2.s_end());
    rep.termination = t4.termination != Termination::RangeEnd ? t4.termination : t2.termination;
    for (int i = 0; i <= samples; ++i) {
        const double s = i == samples ? rep.s_reached : initial.s + (rep.s_reached - initial.s) * i / samples;
        const GeodesicState a = t4.state_at(s);
        const GeodesicState b = t2.state_at(s);
        rep.position_difference = std::max(
            rep.position_difference, std::abs(cd(a.coords[0].real(), a.coords[2].real()) - b.coords[0]));
        rep.value_difference =
            std::max(rep.value_difference, std::abs(cd(a.coords[1].real(), a.coords[3].real()) - b.coords[1]));
    }

    // The explicit forms of both trajectories give two solution bases along
    // the same path s -> z(s).
    const ExplicitGeodesic e4 = explicit_from_trajectory(t4);
    const ExplicitGeodesic e2 = explicit_from_trajectory(t2);
    const double hi = std::min(e4.t_max(), e2.t_max());
    if (hi > e4.t_min()) {
        const SolutionBasis b4 = reconstruct_basis(spec, e4);
        const SolutionBasis b2 = reconstruct_basis(cspec, e2);
        rep.basis_difference = 0.0;
        for (int i = 0; i <= samples; ++i) {
            const double t = i == samples ? hi : e4.t_min() + (hi - e4.t_min()) * i / samples;
            const cd ut = b2.top(t).value;
            const cd ub = b2.bottom(t).value;
            rep.basis_difference = std::max({rep.basis_difference,
                                             std::abs(b4.top(t).value - ut) / std::max(1.0, std::abs(ut)),
                                             std::abs(b4.bottom(t).value - ub) / std::max(1.0, std::abs(ub))});
        }
    }
    rep.pass = rep.position_difference <= tol && rep.value_difference <= tol && rep.basis_difference >= 0.0 &&
               rep.basis_difference <= tol;
    return rep;
}

std::string_view submanifold_name(Submanifold m)
{
    return m == Submanifold::RealBlock ? "y=0,Psi=0" : "y=0,Phi=0";
}

SubmanifoldReport kn_submanifold_check(const GeometrySpec& spec, const GeodesicState& initial, double s_span,
                                       double tol, int samples)
{
    require_kn(spec);
    const auto& c = initial.coords;
    const auto& v = initial.velocity;
    SubmanifoldReport rep;
    rep.tol = tol;
    if (c[2].real() != 0.0 || v[2].real() != 0.0) {
        throw Error(ErrorKind::InvalidArgument, "submanifold data needs y = 0 and y' = 0");
    }
    if (c[3].real() == 0.0 && v[3].real() == 0.0) {
        rep.block = Submanifold::RealBlock;
    } else if (c[1].real() == 0.0 && v[1].real() == 0.0) {
        rep.block = Submanifold::ImaginaryBlock;
    } else {
        throw Error(ErrorKind::InvalidArgument, "initial data lies in neither real submanifold");
    }
    const bool real_block = rep.block == Submanifold::RealBlock;
    const int vi = real_block ? 1 : 3;
    const int other = real_block ? 3 : 1;

    GeodesicOptions opts;
    opts.tol = 1e-12;
    const GeodesicTrajectory t4 = integrate_geodesic(spec, initial, s_span, opts);
    const GeometrySpec reduced(real_block ? Family::Hyperbolic : Family::AntiDeSitterPlus, spec.h.to_real_mode());
    GeodesicState ri;
    ri.coords = ChartPoint::hyperbolic(c[0].real(), c[vi].real());
    ri.velocity = {v[0], v[vi], {}, {}};
    ri.s = initial.s;
    const GeodesicTrajectory t2 = integrate_geodesic(reduced, ri, s_span, opts);
    const double s_end = std::min(t4.s_end(), t2.s_end());
    for (int i = 0; i <= samples; ++i) {
        const double s = i == samples ? s_end : initial.s + (s_end - initial.s) * i / samples;
        const GeodesicState a = t4.state_at(s);
        const GeodesicState b = t2.state_at(s);
        if (std::abs(spec.h.value(cd(a.coords[0].real(), 0.0)).imag()) > 0.0) {
            throw Error(ErrorKind::InvalidArgument, "h is not real on the real axis along the geodesic");
        }
        rep.deviation = std::max(rep.deviation, std::abs(a.coords[2].real()) + std::abs(a.coords[other].real()));
        rep.reduced_difference =
            std::max(rep.reduced_difference, std::abs(a.coords[0].real() - b.coords[0].real()) +
                                                 std::abs(a.coords[vi].real() - b.coords[1].real()));
    }
    rep.pass = rep.deviation <= tol && rep.reduced_difference <= tol;
    return rep;
}

} // namespace geodesy
