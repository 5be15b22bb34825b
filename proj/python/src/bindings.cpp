#include "geodesy/error.hpp"
#include "geodesy/kahler_norden.hpp"
#include "geodesy/reconstruct.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace geodesy;

namespace {

using Matrix = std::vector<std::vector<cd>>;

template <class M>
Matrix to_lists(const M& m)
{
    Matrix out(static_cast<std::size_t>(m.rows()), std::vector<cd>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
    }
    return out;
}

ChartPoint chart_point(Family family, const std::vector<cd>& c)
{
    const std::size_t n = static_cast<std::size_t>(chart_dimension(family));
    if (c.size() != n) {
        throw Error(ErrorKind::InvalidArgument,
                    "expected " + std::to_string(n) + " coordinates, got " + std::to_string(c.size()));
    }
    ChartPoint p;
    p.dim = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i) {
        p.coords[i] = c[i];
    }
    return p;
}

py::tuple sample(const FunctionSample& s) { return py::make_tuple(s.position, s.value, s.d1, s.d2); }

py::dict node_dict(const ExplicitNode& n)
{
    py::dict d;
    d["t"] = n.t;
    d["position"] = n.position;
    d["value"] = n.value;
    d["slope"] = n.slope;
    d["second"] = n.second;
    return d;
}

ComplexPath path_from(const std::vector<cd>& vertices) { return ComplexPath(vertices); }

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Geodesics of the metrics attached to u'' + h u = 0 and reconstruction of solution bases.";

    static py::exception<Error> error(m, "GeodesyError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const SyntaxError& e) {
            py::tuple args = py::make_tuple(std::string(to_string(e.kind())), e.what(), e.position(), e.expected());
            PyErr_SetObject(error.ptr(), args.ptr());
        } catch (const Error& e) {
            py::tuple args = py::make_tuple(std::string(to_string(e.kind())), e.what());
            PyErr_SetObject(error.ptr(), args.ptr());
        }
    });

    py::enum_<Mode>(m, "Mode").value("Real", Mode::Real).value("Complex", Mode::Complex);
    py::enum_<Family>(m, "Family")
        .value("Hyperbolic", Family::Hyperbolic)
        .value("AntiDeSitterPlus", Family::AntiDeSitterPlus)
        .value("AntiDeSitterMinus", Family::AntiDeSitterMinus)
        .value("ComplexSphere", Family::ComplexSphere)
        .value("KahlerNorden", Family::KahlerNorden);
    m.def("family_from_name", [](const std::string& s) { return family_from_name(s); });
    m.def("family_name", [](Family f) { return std::string(family_name(f)); });

    py::class_<Expression>(m, "Expression")
        .def_property_readonly("mode", &Expression::mode)
        .def("render", &Expression::render)
        .def("__str__", &Expression::render)
        .def(
            "value",
            [](const Expression& e, cd at) -> cd {
                return e.mode() == Mode::Real ? cd(e.value(at.real())) : e.value(at);
            },
            py::arg("at"))
        .def(
            "jet",
            [](const Expression& e, cd at) -> py::tuple {
                if (e.mode() == Mode::Real) {
                    const Jet2<double> r = e.jet(at.real());
                    return py::make_tuple(cd(r.value), cd(r.d1), cd(r.d2));
                }
                const Jet2<cd> j = e.jet(at);
                return py::make_tuple(j.value, j.d1, j.d2);
            },
            py::arg("at"));
    m.def("parse", [](const std::string& s, Mode mode) { return parse(s, mode); }, py::arg("source"),
          py::arg("mode") = Mode::Real);

    py::class_<GeometrySpec>(m, "GeometrySpec")
        .def(py::init([](Family f, const std::string& h) { return GeometrySpec::parse(f, h); }), py::arg("family"),
             py::arg("h"))
        .def_readonly("family", &GeometrySpec::family)
        .def_readonly("h", &GeometrySpec::h);

    m.def(
        "metric",
        [](const GeometrySpec& spec, const std::vector<cd>& coords) {
            const MetricValue v = metric_at(spec, chart_point(spec.family, coords));
            return py::make_tuple(to_lists(v.g), v.signature);
        },
        py::arg("spec"), py::arg("coords"), "Metric components and signature at a chart point.");

    m.def(
        "curvature",
        [](const GeometrySpec& spec, const std::vector<cd>& coords) {
            const CurvatureReport r = curvature_at(spec, chart_point(spec.family, coords));
            py::dict d;
            d["sectional"] = r.sectional ? py::cast(*r.sectional) : py::none();
            d["ricci_scalar"] = r.ricci_scalar;
            d["einstein_eta"] = r.einstein_eta;
            d["einstein_fit_residual"] = r.einstein_fit_residual;
            d["ricci"] = to_lists(r.ricci);
            d["metric"] = to_lists(r.metric);
            return d;
        },
        py::arg("spec"), py::arg("coords"));

    py::enum_<Termination>(m, "Termination")
        .value("RangeEnd", Termination::RangeEnd)
        .value("DomainBoundary", Termination::DomainBoundary)
        .value("TurningPoint", Termination::TurningPoint);

    py::class_<ExplicitGeodesic>(m, "ExplicitGeodesic")
        .def_readonly("family", &ExplicitGeodesic::family)
        .def_readonly("base_t", &ExplicitGeodesic::base_t)
        .def_readonly("termination_lo", &ExplicitGeodesic::termination_lo)
        .def_readonly("termination_hi", &ExplicitGeodesic::termination_hi)
        .def_property_readonly("t_min", &ExplicitGeodesic::t_min)
        .def_property_readonly("t_max", &ExplicitGeodesic::t_max)
        .def_property_readonly("nodes",
                               [](const ExplicitGeodesic& g) {
                                   py::list out;
                                   for (const auto& n : g.nodes) {
                                       out.append(node_dict(n));
                                   }
                                   return out;
                               })
        .def("at", [](const ExplicitGeodesic& g, double t) { return node_dict(g.at(t)); }, py::arg("t"))
        .def("__len__", [](const ExplicitGeodesic& g) { return g.nodes.size(); });

    m.def(
        "integrate_explicit",
        [](const GeometrySpec& spec, double x0, double value0, double slope0, double lo, double hi, double tol) {
            ExplicitOptions o;
            o.tol = tol;
            return integrate_explicit(spec, x0, value0, slope0, lo, hi, o);
        },
        py::arg("spec"), py::arg("x0"), py::arg("value0"), py::arg("slope0"), py::arg("lo"), py::arg("hi"),
        py::arg("tol") = 1e-12, "Explicit geodesic of a real family on [lo, hi] through (x0, value0, slope0).");
    m.def(
        "integrate_explicit_path",
        [](const GeometrySpec& spec, const std::vector<cd>& vertices, cd value0, cd slope0, double tol) {
            ExplicitOptions o;
            o.tol = tol;
            return integrate_explicit(spec, path_from(vertices), value0, slope0, o);
        },
        py::arg("spec"), py::arg("vertices"), py::arg("value0"), py::arg("slope0"), py::arg("tol") = 1e-12,
        "Explicit geodesic of the complex family along a polyline.");
    m.def("max_geodesic_residual", &max_geodesic_residual, py::arg("spec"), py::arg("geodesic"));

    py::class_<SolutionBasis>(m, "SolutionBasis")
        .def_readonly("base_t", &SolutionBasis::base_t)
        .def_readonly("quadrature_error", &SolutionBasis::quadrature_error)
        .def_property_readonly("t_min", &SolutionBasis::t_min)
        .def_property_readonly("t_max", &SolutionBasis::t_max)
        .def_property_readonly("coincident", [](const SolutionBasis& b) { return b.theta.coincident; })
        .def("top", [](const SolutionBasis& b, double t) { return sample(b.top(t)); }, py::arg("t"))
        .def("bottom", [](const SolutionBasis& b, double t) { return sample(b.bottom(t)); }, py::arg("t"))
        .def(
            "combination", [](const SolutionBasis& b, cd a, cd c, double t) { return sample(b.combination(a, c, t)); },
            py::arg("a"), py::arg("b"), py::arg("t"))
        .def("theta_top", [](const SolutionBasis& b, double t) { return sample(b.theta.top(t)); }, py::arg("t"))
        .def("theta_bottom", [](const SolutionBasis& b, double t) { return sample(b.theta.bottom(t)); },
             py::arg("t"))
        .def("wronskian", &SolutionBasis::wronskian, py::arg("t"))
        .def(
            "sup_ode_residual",
            [](const SolutionBasis& b, cd a, cd c, int n) {
                return sup_ode_residual(b.theta.geodesic.h, b.combination_function(a, c), n);
            },
            py::arg("a") = cd(1.0), py::arg("b") = cd(0.0), py::arg("n") = 400,
            "Largest |u'' + h u| of a u_top + b u_bot over n + 1 points.")
        .def(
            "sup_riccati_residual",
            [](const SolutionBasis& b, bool top, int n) {
                return sup_riccati_residual(b.theta.geodesic.h,
                                            top ? b.theta.top_function() : b.theta.bottom_function(), n);
            },
            py::arg("top") = true, py::arg("n") = 400);

    m.def(
        "reconstruct_basis",
        [](const GeometrySpec& spec, const ExplicitGeodesic& g, double tol, bool auto_check,
           std::optional<double> base_t) {
            ReconstructOptions o;
            o.tol = tol;
            o.auto_check = auto_check;
            o.base_t = base_t;
            return reconstruct_basis(spec, g, o);
        },
        py::arg("spec"), py::arg("geodesic"), py::arg("tol") = 1e-12, py::arg("auto_check") = false,
        py::arg("base_t") = py::none());
    m.def("invert_to_geodesic", py::overload_cast<const SolutionBasis&>(&invert_to_geodesic), py::arg("basis"));

    m.def(
        "riccati_geodesic",
        [](const std::string& h, double x0, double theta0, double lo, double hi, double tol) {
            const Expression e = parse(h, Mode::Real);
            const DenseFunction th = solve_riccati(e, x0, theta0, lo, hi);
            const RiccatiGeodesicReport r = riccati_solution_is_geodesic(e, th, SignMode::Real, tol);
            py::dict d;
            d["lo"] = th.lo();
            d["hi"] = th.hi();
            d["riccati_residual"] = r.riccati_residual;
            d["geodesic_residual"] = r.geodesic_residual;
            d["on_singular_set"] = r.on_singular_set;
            d["pass"] = r.pass;
            return d;
        },
        py::arg("h"), py::arg("x0"), py::arg("theta0"), py::arg("lo"), py::arg("hi"), py::arg("tol") = 1e-6,
        "Solves the Riccati equation and checks that the induced curve is an anti-de Sitter geodesic.");

    m.def(
        "path_independence",
        [](const GeometrySpec& spec, cd value0, cd slope0, const std::vector<cd>& a, const std::vector<cd>& b,
           double tol) {
            const PathIndependenceReport r =
                path_independence_check(spec, value0, slope0, path_from(a), path_from(b), tol);
            py::dict d;
            d["difference_top"] = r.difference_top;
            d["difference_bot"] = r.difference_bot;
            d["integral_top"] = r.integral_top_a;
            d["integral_bot"] = r.integral_bot_a;
            d["pass"] = r.pass;
            return d;
        },
        py::arg("spec"), py::arg("value0"), py::arg("slope0"), py::arg("path_a"), py::arg("path_b"),
        py::arg("tol") = 1e-8);

    m.def(
        "kn_geodesic_split",
        [](const GeometrySpec& spec, const std::vector<double>& point, const std::vector<double>& velocity,
           double s_span, double tol) {
            if (point.size() != 4 || velocity.size() != 4) {
                throw Error(ErrorKind::InvalidArgument, "point and velocity need four components (x, Phi, y, Psi)");
            }
            GeodesicState s;
            s.coords = ChartPoint::kn(point[0], point[1], point[2], point[3]);
            s.velocity = {cd(velocity[0]), cd(velocity[1]), cd(velocity[2]), cd(velocity[3])};
            const GeodesicSplitReport r = kn_geodesic_split(spec, s, s_span, tol);
            py::dict d;
            d["position_difference"] = r.position_difference;
            d["value_difference"] = r.value_difference;
            d["basis_difference"] = r.basis_difference;
            d["s_reached"] = r.s_reached;
            d["pass"] = r.pass;
            return d;
        },
        py::arg("spec"), py::arg("point"), py::arg("velocity"), py::arg("s_span"), py::arg("tol") = 1e-8);
}
