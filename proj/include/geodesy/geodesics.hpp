#pragma once

/// @file geodesics.hpp
/// Geodesics in affine parametrization and in explicit form.
///
/// An explicit geodesic is the second chart coordinate written as a function
/// of the first one: Phi(x), Psi(x) or X(z). It is stored on a real parameter
/// t: t = x for the real families, and for the complex family t runs over a
/// path t -> zeta(t) in the z-plane. Each node keeps zeta and its first two
/// t-derivatives together with the value and its first two derivatives with
/// respect to zeta.

#include "geodesy/geometry.hpp"
#include "geodesy/ode.hpp"

#include <array>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

namespace geodesy {

enum class Termination { RangeEnd, DomainBoundary, TurningPoint };

std::string_view termination_name(Termination t);

struct GeodesicState {
    ChartPoint coords;
    std::array<cd, 4> velocity{};
    double s = 0.0;
};

struct GeodesicOptions {
    double tol = 1e-10;
    /// Christoffel symbols used on the right-hand side; KN defaults to jets of
    /// the metric so that the 4D integration is independent of the complex one.
    ChristoffelMethod method = ChristoffelMethod::ClosedForm;
    bool kn_from_jets = true;
    double guard = kDomainGuard;
    /// Stop where the first coordinate's velocity vanishes (x' = 0, or z' = 0).
    bool stop_at_turning_point = false;
    double turning_guard = 1e-9;
    /// Geodesics that reach the singular set do so in finite parameter with
    /// unbounded coordinate velocity; beyond this speed the integration stops
    /// with DomainBoundary.
    double speed_bound = 1e6;
    double max_step = std::numeric_limits<double>::infinity();
};

class GeodesicTrajectory {
public:
    GeometrySpec spec;
    Termination termination = Termination::RangeEnd;
    std::vector<GeodesicState> samples;
    /// Coordinate accelerations at each sample, from the geodesic equation.
    std::vector<std::array<cd, 4>> accelerations;
    DenseSolution dense;

    double s_begin() const { return samples.front().s; }
    double s_end() const { return samples.back().s; }
    /// State interpolated from the continuous output.
    GeodesicState state_at(double s) const;
};

GeodesicTrajectory integrate_geodesic(const GeometrySpec& spec, const GeodesicState& initial, double s_end,
                                      const GeodesicOptions& options = {});

/// g(v, v) at the state; conserved along geodesics.
cd metric_norm(const GeometrySpec& spec, const GeodesicState& state);

/// Coordinate accelerations -Gamma^i_jk v^j v^k.
std::array<cd, 4> geodesic_acceleration(const GeometrySpec& spec, const GeodesicState& state,
                                        ChristoffelMethod method);

// ---------------------------------------------------------------------------

/// Polyline s in [0,1] -> zeta(s); segment k covers [k/n, (k+1)/n].
class ComplexPath {
public:
    ComplexPath() = default;
    explicit ComplexPath(std::vector<cd> vertices);
    static ComplexPath segment(cd from, cd to) { return ComplexPath({from, to}); }

    const std::vector<cd>& vertices() const { return vertices_; }
    std::size_t segments() const { return vertices_.size() - 1; }
    cd start() const { return vertices_.front(); }
    cd end() const { return vertices_.back(); }
    /// Parameter range of segment k.
    double segment_begin(std::size_t k) const;
    double segment_end(std::size_t k) const;
    cd point(double s) const;
    /// d zeta / ds on segment k.
    cd velocity(std::size_t k) const;
    std::size_t segment_of(double s) const;
    double length() const;

private:
    std::vector<cd> vertices_;
};

struct ExplicitNode {
    double t = 0.0;
    cd position;
    cd position_t;
    cd position_tt;
    cd value;
    cd slope;
    cd second;
    /// Third derivative of the value; NaN when unknown. Nodes of solved
    /// geodesics carry it, which upgrades the interpolation to degree 7.
    cd third{std::numeric_limits<double>::quiet_NaN(), 0.0};
    cd position_ttt;
};

using ExplicitSample = ExplicitNode;

class ExplicitGeodesic {
public:
    Family family = Family::Hyperbolic;
    Expression h;
    /// Sorted by t; equal t appears twice where the path has a corner.
    std::vector<ExplicitNode> nodes;
    double base_t = 0.0;
    Termination termination_lo = Termination::RangeEnd;
    Termination termination_hi = Termination::RangeEnd;

    double t_min() const { return nodes.front().t; }
    double t_max() const { return nodes.back().t; }
    bool contains(double t) const { return t >= t_min() && t <= t_max(); }
    cd base_position() const;
    /// Quintic Hermite interpolation between nodes; throws OutsideSupport.
    ExplicitSample at(double t) const;
    /// Node interval boundaries, used to split quadratures at corners.
    std::vector<double> breakpoints() const;
};

using ValueFunction = std::function<std::array<cd, 3>(cd position)>;

/// Explicit curve from a closed-form (value, slope, second) along the real
/// interval [lo, hi] sampled at n + 1 points; base at `base`.
ExplicitGeodesic sample_explicit(Family family, const Expression& h, double lo, double hi, double base, int n,
                                 const ValueFunction& f);
/// Same along a complex path, n samples per segment, base at the path start.
ExplicitGeodesic sample_explicit(const Expression& h, const ComplexPath& path, int n, const ValueFunction& f);

struct ExplicitOptions {
    double tol = 1e-12;
    double guard = kDomainGuard;
    /// Integration stops (DomainBoundary) once |value| or |slope| exceeds this.
    double value_bound = 1e2;
    /// Largest step as a fraction of the support length.
    double max_step_fraction = 1.0 / 64.0;
};

/// Right-hand side of the explicit geodesic equation, value'' = F(h, h',
/// value, slope). Terms proportional to the slope are skipped when the
/// slope is exactly zero, so constant curves on the singular set evaluate.
cd explicit_rhs(Family family, const Jet2<cd>& h, cd value, cd slope);
/// Derivative of explicit_rhs along a solution with the given second
/// derivative, i.e. the third derivative of the value.
cd explicit_third(Family family, const Jet2<cd>& h, cd value, cd slope, cd second);
/// explicit_rhs - second.
cd explicit_residual(Family family, const Jet2<cd>& h, cd value, cd slope, cd second);

/// Real families: integrate on [lo, hi] from x0 in both directions.
ExplicitGeodesic integrate_explicit(const GeometrySpec& spec, double x0, double value0, double slope0, double lo,
                                    double hi, const ExplicitOptions& options = {});
/// Complex family: integrate along the path from its start.
ExplicitGeodesic integrate_explicit(const GeometrySpec& spec, const ComplexPath& path, cd value0, cd slope0,
                                    const ExplicitOptions& options = {});

ExplicitGeodesic explicit_from_trajectory(const GeodesicTrajectory& trajectory);

/// Residual of the explicit geodesic equation at parameter t.
cd geodesic_residual(const GeometrySpec& spec, const ExplicitGeodesic& g, double t);
/// Largest |residual| over the nodes and the midpoints between them.
double max_geodesic_residual(const GeometrySpec& spec, const ExplicitGeodesic& g);

} // namespace geodesy
