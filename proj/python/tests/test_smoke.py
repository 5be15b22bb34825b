import cmath
import math

import pytest

import geodesy as g


def test_parse_and_errors():
    e = g.parse("x^2 + 1")
    assert e.render() == "x^2 + 1"
    assert e.value(3.0) == pytest.approx(10.0)
    assert e.jet(2.0) == pytest.approx((5.0, 4.0, 2.0))
    with pytest.raises(g.GeodesyError) as info:
        g.parse("2*")
    kind, _, position, expected = info.value.args
    assert kind == "SyntaxError"
    assert position == 2
    assert expected


def test_curvature_is_minus_one():
    spec = g.GeometrySpec(g.Family.Hyperbolic, "sin(x)+3")
    r = g.curvature(spec, [0.3, 1.2])
    assert abs(r["sectional"] + 1.0) < 1e-9
    kn = g.GeometrySpec(g.family_from_name("kn"), "z^2+1")
    r = g.curvature(kn, [0.2, 1.3, 0.1, 0.4])
    assert r["sectional"] is None
    assert abs(r["einstein_eta"] + 2.0) < 1e-6
    assert abs(r["ricci_scalar"] + 8.0) < 1e-6
    _, signature = g.metric(kn, [0.2, 1.3, 0.1, 0.4])
    assert signature == "(-,-,+,+)"


def test_harmonic_oscillator_basis():
    spec = g.GeometrySpec(g.Family.AntiDeSitterPlus, "1")
    geo = g.integrate_explicit(spec, 0.0, 1.0, 0.0, 0.0, 2 * math.pi)
    assert geo.termination_hi == g.Termination.RangeEnd
    basis = g.reconstruct_basis(spec, geo)
    for x in (0.0, 1.0, 4.0):
        assert abs(basis.top(x)[1] - cmath.exp(-1j * x)) < 1e-8
        assert abs(basis.bottom(x)[1] - cmath.exp(1j * x)) < 1e-8
    back = g.invert_to_geodesic(basis)
    assert max(abs(n["value"] - 1.0) for n in back.nodes) < 1e-10


def test_airy_round_trip():
    spec = g.GeometrySpec(g.Family.Hyperbolic, "x")
    geo = g.integrate_explicit(spec, 0.0, 2.0, 0.3, -0.4, 0.4)
    assert g.max_geodesic_residual(spec, geo) < 1e-6
    basis = g.reconstruct_basis(spec, geo, auto_check=True)
    assert basis.sup_ode_residual(2.0, -3.0) < 1e-6
    assert basis.sup_riccati_residual(top=False) < 1e-6
    back = g.invert_to_geodesic(basis)
    assert max(abs(a["value"] - b["value"]) for a, b in zip(back.nodes, geo.nodes)) < 1e-7
    w0 = basis.wronskian(0.0)
    assert abs(basis.wronskian(0.35) - w0) <= 1e-6 * abs(w0)


def test_geodesic_from_constant_data():
    spec = g.GeometrySpec(g.Family.Hyperbolic, "-1")
    geo = g.integrate_explicit(spec, 0.0, 2.0, 0.0, 0.0, 1.0)
    # A true geodesic through (0, 2, 0) is not constant, so its basis solves the equation.
    assert g.reconstruct_basis(spec, geo).sup_ode_residual() < 1e-6


def test_riccati_and_paths():
    r = g.riccati_geodesic("x^2", 0.0, 1.0, 0.0, 1.0)
    assert r["pass"] and r["geodesic_residual"] < 1e-6
    spec = g.GeometrySpec(g.Family.ComplexSphere, "exp(z)")
    p = g.path_independence(spec, 0.5 + 0.2j, 0.1, [0, 1 + 1j], [0, 0.2 + 0.7j, 1 + 1j])
    assert p["pass"]
    assert p["difference_top"] < 1e-8
    geo = g.integrate_explicit_path(spec, [0, 1 + 1j], 0.5 + 0.2j, 0.1)
    assert geo.t_max == 1.0


def test_kn_split():
    spec = g.GeometrySpec(g.Family.KahlerNorden, "z")
    r = g.kn_geodesic_split(spec, [0.1, 1.2, 0.3, 0.4], [0.8, 0.1, 0.3, -0.2], 1.0)
    assert r["pass"]
    assert r["position_difference"] < 1e-8


def test_error_kinds():
    spec = g.GeometrySpec(g.Family.Hyperbolic, "1")
    with pytest.raises(g.GeodesyError) as info:
        g.integrate_explicit(spec, 0.0, 1.0, 0.0, -1.0, 1.0)
    assert info.value.args[0] == "StartOnSingularSet"
    with pytest.raises(g.GeodesyError):
        g.curvature(spec, [0.0, 1.0, 2.0])
