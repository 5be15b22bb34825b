#pragma once

/// @file reconstruct.hpp
/// From explicit geodesics to solutions of u'' + h u = 0 and back.
///
/// Theta_top / Theta_bot are the logarithmic derivatives u'/u built from the
/// value and slope of an explicit geodesic; u = exp(integral of Theta). All
/// functions live on the geodesic's real parameter t, derivatives are taken
/// with respect to the chart coordinate (x or z).

#include "geodesy/geodesics.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace geodesy {

struct FunctionSample {
    cd position;
    cd value;
    cd d1;
    /// NaN when the second derivative is not available.
    cd d2;
};

class DenseFunction {
public:
    using Eval = std::function<FunctionSample(double t)>;

    DenseFunction() = default;
    DenseFunction(Eval eval, double lo, double hi);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool contains(double t) const { return t >= lo_ && t <= hi_; }
    /// Throws OutsideSupport.
    FunctionSample operator()(double t) const;

private:
    Eval eval_;
    double lo_ = 0.0;
    double hi_ = 0.0;
};

/// Closed-form function of a real variable x = t on [lo, hi]; f returns
/// (value, first, second derivative).
DenseFunction real_function(double lo, double hi, std::function<std::array<cd, 3>(double)> f);

// ---------------------------------------------------------------------------

class ThetaPair {
public:
    Family family = Family::Hyperbolic;
    ExplicitGeodesic geodesic;
    /// Square root of the radicand, continued node by node from the base.
    std::vector<cd> node_roots;
    std::vector<double> node_t;
    cd base_root;
    /// Node parameters where the radicand came close to zero or changed sign.
    std::vector<double> flagged_nodes;
    /// Radicand numerically identically zero: Theta_top = Theta_bot.
    bool coincident = false;
    double radicand_sup = 0.0;

    cd radicand(double t) const;
    cd root(double t) const;
    /// Theta and its first derivative (d2 is NaN).
    FunctionSample top(double t) const;
    FunctionSample bottom(double t) const;
    DenseFunction top_function() const;
    DenseFunction bottom_function() const;
    double t_min() const { return geodesic.t_min(); }
    double t_max() const { return geodesic.t_max(); }
};

ThetaPair theta_from_geodesic(const GeometrySpec& spec, const ExplicitGeodesic& g);

struct ReconstructOptions {
    double tol = 1e-12;
    /// Reject geodesics whose residual exceeds `residual_limit`.
    bool auto_check = false;
    double residual_limit = 1e-4;
    /// Base parameter; defaults to the geodesic's base.
    std::optional<double> base_t;
};

class SolutionBasis {
public:
    ThetaPair theta;
    double base_t = 0.0;
    std::vector<double> node_t;
    /// Integral of Theta from the smallest node to each node.
    std::vector<cd> cumulative_top;
    std::vector<cd> cumulative_bot;
    double quadrature_error = 0.0;
    double tol = 1e-12;

    /// Integral of Theta d zeta from the base to t.
    cd log_top(double t) const;
    cd log_bot(double t) const;
    FunctionSample top(double t) const;
    FunctionSample bottom(double t) const;
    FunctionSample combination(cd a, cd b, double t) const;
    cd wronskian(double t) const;
    DenseFunction top_function() const;
    DenseFunction bottom_function() const;
    DenseFunction combination_function(cd a, cd b) const;
    double t_min() const { return theta.t_min(); }
    double t_max() const { return theta.t_max(); }
};

SolutionBasis reconstruct_basis(const GeometrySpec& spec, const ExplicitGeodesic& g,
                                const ReconstructOptions& options = {});

/// u''(t) + h u(t) at the function's position.
cd ode_residual(const Expression& h, const DenseFunction& u, double t);
/// Theta' + Theta^2 + h.
cd riccati_residual(const Expression& h, const DenseFunction& theta, double t);

/// Largest |residual| over n + 1 equally spaced parameters.
double sup_ode_residual(const Expression& h, const DenseFunction& u, int n = 400);
double sup_riccati_residual(const Expression& h, const DenseFunction& theta, int n = 400);

/// Phi = sqrt(-Theta_top Theta_bot) (hyperbolic, complex) or
/// Psi = sqrt(Theta_top Theta_bot) (anti-de Sitter), continued from the
/// root with positive real part at the base. Sampled at the geodesic nodes.
ExplicitGeodesic invert_to_geodesic(const ThetaPair& theta);
ExplicitGeodesic invert_to_geodesic(const SolutionBasis& basis);
/// From an explicit solution pair sampled at n + 1 points of their common support.
ExplicitGeodesic invert_to_geodesic(const DenseFunction& u_top, const DenseFunction& u_bot, Family family,
                                    const Expression& h, double base_t, int n = 200);

enum class SignMode { Real, Imaginary };

struct RiccatiGeodesicReport {
    double riccati_residual = 0.0;
    double geodesic_residual = 0.0;
    bool on_singular_set = false;
    bool pass = false;
    double tol = 0.0;
    int samples = 0;
    ExplicitGeodesic induced;
};

/// Real mode: Psi = +-Theta solves the anti-de Sitter explicit equation.
/// Imaginary mode: X = -i Theta solves the complex explicit equation.
RiccatiGeodesicReport riccati_solution_is_geodesic(const Expression& h, const DenseFunction& theta, SignMode mode,
                                                   double tol, int n = 400);

/// Solves Theta' = -Theta^2 - h(x) from (x0, theta0) on [lo, hi]; stops where
/// |Theta| leaves [min_abs, max_abs].
DenseFunction solve_riccati(const Expression& h, double x0, double theta0, double lo, double hi, double tol = 1e-12,
                            double min_abs = 1e-3, double max_abs = 1e3);

/// Direct integration of u'' = -h u along a path (complex mode) or on an
/// interval (real mode), for comparisons.
DenseFunction solve_linear_ode(const Expression& h, const ComplexPath& path, cd u0, cd du0, double tol = 1e-12);
DenseFunction solve_linear_ode(const Expression& h, double x0, cd u0, cd du0, double lo, double hi,
                               double tol = 1e-12);

struct PathIndependenceReport {
    double difference_top = 0.0;
    double difference_bot = 0.0;
    double endpoint_mismatch = 0.0;
    cd integral_top_a;
    cd integral_bot_a;
    cd integral_top_b;
    cd integral_bot_b;
    bool pass = false;
};

/// Integrates the complex explicit geodesic from the same initial data along
/// both paths and compares the Theta integrals at the common end point.
/// Throws PathLeavesSupport when a path leaves the geodesic's domain or the
/// loop formed by the two paths winds around a singular point.
PathIndependenceReport path_independence_check(const GeometrySpec& spec, cd value0, cd slope0,
                                               const ComplexPath& path_a, const ComplexPath& path_b, double tol,
                                               const ExplicitOptions& options = {});

struct DegeneracyReport {
    bool degenerate = false;
    double radicand_sup = 0.0;
};

DegeneracyReport degeneracy_probe(const GeometrySpec& spec, const ExplicitGeodesic& g, double threshold = 1e-10);

} // namespace geodesy
