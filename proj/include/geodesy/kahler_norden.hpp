#pragma once

/// @file kahler_norden.hpp
/// The 4D real picture of the complex geometry: z = x + iy, X = Phi + i Psi,
/// and the Kahler-Norden metric Re[G] in the chart (x, Phi, y, Psi).

#include "geodesy/reconstruct.hpp"

#include <Eigen/Core>

#include <utility>

namespace geodesy {

struct KNPoint {
    double x = 0.0;
    double phi = 0.0;
    double y = 0.0;
    double psi = 0.0;

    cd z() const { return {x, y}; }
    cd chi() const { return {phi, psi}; }
    double delta_plus() const { return phi * phi + psi * psi; }
    double delta_minus() const { return phi * phi - psi * psi; }
    double h_re(const Expression& h) const { return h.value(z()).real(); }
    double h_im(const Expression& h) const { return h.value(z()).imag(); }
    ChartPoint chart() const { return ChartPoint::kn(x, phi, y, psi); }
};

/// (|d_x Re h - d_y Im h|, |d_y Re h + d_x Im h|) at x + iy, from jets of h
/// along the real and the imaginary direction.
std::pair<double, double> cauchy_riemann_residual(const Expression& h, double x, double y);

/// The explicit 4x4 metric of the chart.
Eigen::Matrix4d kn_metric(const GeometrySpec& spec, const KNPoint& p);
/// Re[G_ab dZ^a dZ^b] written in the real chart, from the holomorphic metric G.
Eigen::Matrix4d kn_metric_from_complex(const GeometrySpec& spec, const KNPoint& p);
/// Largest entry of the difference between the two; throws OutOfDomain.
double kn_metric_consistency(const GeometrySpec& spec, const KNPoint& p);

struct ChristoffelCorrespondenceReport {
    /// Largest |jets - assembled from Upsilon| over all 64 symbols.
    double max_violation = 0.0;
    /// Largest |symbol| among those that the assembly forces to vanish.
    double off_pattern = 0.0;
    int identities_checked = 0;
    Eigen::Vector4d eigenvalues = Eigen::Vector4d::Zero();
    int negative_eigenvalues = 0;
    int positive_eigenvalues = 0;
    /// On {y = 0, Psi = 0} with h real there: largest difference of the
    /// (x, Phi) block against the hyperbolic symbols; negative otherwise.
    double hyperbolic_block_difference = -1.0;
    bool pass = false;
};

ChristoffelCorrespondenceReport kn_christoffel_correspondence(const GeometrySpec& spec, const KNPoint& p,
                                                              double tol = 1e-10);

struct GeodesicSplitReport {
    /// sup |(x + iy) - z| and sup |(Phi + i Psi) - X| over the span.
    double position_difference = 0.0;
    double value_difference = 0.0;
    /// Relative sup difference of the solution bases reconstructed from the
    /// two explicit forms; negative when no explicit form could be built.
    double basis_difference = -1.0;
    double s_reached = 0.0;
    Termination termination = Termination::RangeEnd;
    double tol = 0.0;
    bool pass = false;
};

/// Integrates the 4D KN geodesic (Christoffels from jets) and the complex
/// geodesic with matched initial data over [0, s_span].
GeodesicSplitReport kn_geodesic_split(const GeometrySpec& spec, const GeodesicState& initial, double s_span,
                                      double tol = 1e-8, int samples = 200);

enum class Submanifold { RealBlock, ImaginaryBlock };

std::string_view submanifold_name(Submanifold m);

struct SubmanifoldReport {
    Submanifold block = Submanifold::RealBlock;
    /// sup of |y| + |Psi| (real block) or |y| + |Phi| (imaginary block).
    double deviation = 0.0;
    /// sup difference against the hyperbolic (real block) or anti-de Sitter
    /// (imaginary block) geodesic with the same data.
    double reduced_difference = 0.0;
    double tol = 0.0;
    bool pass = false;
};

/// Initial data inside {y = 0, Psi = 0} or {y = 0, Phi = 0}; h must be real
/// on the real axis. Throws InvalidArgument otherwise.
SubmanifoldReport kn_submanifold_check(const GeometrySpec& spec, const GeodesicState& initial, double s_span,
                                       double tol = 1e-9, int samples = 200);

} // namespace geodesy
