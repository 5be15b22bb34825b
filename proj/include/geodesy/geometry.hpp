#pragma once

/// @file geometry.hpp
/// The metric families attached to a coefficient function h, their
/// Christoffel symbols and curvature.
///
/// Chart orders: (x, Phi) hyperbolic, (x, Psi) anti-de Sitter, (z, X) complex,
/// (x, Phi, y, Psi) Kahler-Norden. Every coordinate is stored as a complex
/// number; real charts keep the imaginary parts at zero.

#include "geodesy/expr.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geodesy {

enum class Family { Hyperbolic, AntiDeSitterPlus, AntiDeSitterMinus, ComplexSphere, KahlerNorden };

std::string_view family_name(Family family);
/// Accepts "hyperbolic", "ads+" (or "ads"), "ads-", "complex", "kn".
Family family_from_name(std::string_view name);
int chart_dimension(Family family);
bool is_real_2d(Family family);
bool is_anti_de_sitter(Family family);
Mode expression_mode(Family family);

/// Width of the guard band kept around the singular sets.
inline constexpr double kDomainGuard = 1e-9;

struct GeometrySpec {
    Family family = Family::Hyperbolic;
    Expression h;

    GeometrySpec() = default;
    /// Throws InvalidArgument when the mode of h does not fit the family.
    GeometrySpec(Family family, Expression h);
    static GeometrySpec parse(Family family, std::string_view h_source);
};

struct ChartPoint {
    std::array<cd, 4> coords{};
    int dim = 2;

    static ChartPoint hyperbolic(double x, double phi) { return {{cd(x), cd(phi), {}, {}}, 2}; }
    static ChartPoint ads(double x, double psi) { return {{cd(x), cd(psi), {}, {}}, 2}; }
    static ChartPoint complex(cd z, cd chi) { return {{z, chi, {}, {}}, 2}; }
    static ChartPoint kn(double x, double phi, double y, double psi) { return {{cd(x), cd(phi), cd(y), cd(psi)}, 4}; }

    const cd& operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
    cd& operator[](int i) { return coords[static_cast<std::size_t>(i)]; }
};

/// Signed distances to the boundary of the family's domain, positive inside.
/// The point is inside when every entry exceeds zero.
std::vector<double> domain_guards(const GeometrySpec& spec, const ChartPoint& p, double guard = kDomainGuard);
bool in_domain(const GeometrySpec& spec, const ChartPoint& p, double guard = kDomainGuard);
/// Throws OutOfDomain naming the failed condition.
void check_domain(const GeometrySpec& spec, const ChartPoint& p, double guard = kDomainGuard);

struct MetricValue {
    Eigen::MatrixXcd g;
    /// "(+,+)", "(-,+)", "(+,-)", "(-,-,+,+)" etc. for real metrics, "holomorphic" for the complex one.
    std::string signature;
};

MetricValue metric_at(const GeometrySpec& spec, const ChartPoint& p);

enum class ChristoffelMethod { ClosedForm, FromJets };

struct ChristoffelValue {
    int dim = 2;
    std::vector<cd> symbols;  // index (i * dim + j) * dim + k

    ChristoffelValue() = default;
    explicit ChristoffelValue(int n) : dim(n), symbols(static_cast<std::size_t>(n * n * n)) {}

    cd& operator()(int i, int j, int k) { return symbols[static_cast<std::size_t>((i * dim + j) * dim + k)]; }
    const cd& operator()(int i, int j, int k) const { return symbols[static_cast<std::size_t>((i * dim + j) * dim + k)]; }
};

ChristoffelValue christoffel_at(const GeometrySpec& spec, const ChartPoint& p,
                                ChristoffelMethod method = ChristoffelMethod::ClosedForm);
/// Same as christoffel_at without the domain check; used inside integrators
/// whose own guards keep the state inside the domain.
ChristoffelValue christoffel_unchecked(const GeometrySpec& spec, const ChartPoint& p, ChristoffelMethod method);

/// Christoffel symbols Upsilon of the holomorphic metric at (z, X), in the
/// complex chart order (z, X).
ChristoffelValue complex_christoffel(const Expression& h, cd z, cd chi);

struct CurvatureReport {
    Family family = Family::Hyperbolic;
    ChartPoint point;
    Eigen::MatrixXcd metric;
    Eigen::MatrixXcd ricci;
    cd ricci_scalar;
    /// Sectional curvature of the (0,1) coordinate plane for 2D families; the
    /// holomorphic sectional curvature for the complex family. Absent for KN.
    std::optional<cd> sectional;
    /// Least-squares eta in Ric = eta * g over independent components.
    cd einstein_eta;
    double einstein_fit_residual = 0.0;
};

CurvatureReport curvature_at(const GeometrySpec& spec, const ChartPoint& p);

/// Sectional curvature of the plane spanned by u and v at p.
cd sectional_curvature(const GeometrySpec& spec, const ChartPoint& p, const Eigen::VectorXcd& u,
                       const Eigen::VectorXcd& v);

/// Riemann tensor R^i_jkl at p (index ((i*n + j)*n + k)*n + l), from jets of the metric.
std::vector<cd> riemann_at(const GeometrySpec& spec, const ChartPoint& p);

} // namespace geodesy
